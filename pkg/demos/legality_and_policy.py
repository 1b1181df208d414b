"""How the legality check and the policy switches decide what gets applied.

Run: python3 demos/legality_and_policy.py
"""
import looppragma as lp
from looppragma.interp import instance_order_violations

PROGRAMS = {
    "independent iterations": "S: A[i] = 2*i;",
    "each iteration reads the previous one": "S: A[i] = A[i - 1] + 1;",
}

for title, stmt in PROGRAMS.items():
    for switch in ("", "assert", "assume_safety", "suggest_only"):
        src = ("param int n;\narray int A[n + 1];\n"
               f"#pragma omp reverse {switch}\n"
               f"for (int i = 1; i < n; i += 1)\n  {stmt}\n")
        result = lp.apply_all(lp.load(src))
        (report,) = result.reports
        status = "aborted" if result.aborted else report.outcome
        print(f"{title:40} {switch or 'default':14} {report.verdict:10} {status}")
    print()

# A Disproven verdict names two statement instances whose order would flip.
src = ("param int n;\narray int A[n + 1];\n#pragma omp reverse\n"
       "for (int i = 1; i < n; i += 1)\n  S: A[i] = A[i - 1] + 1;\n")
(report,) = lp.apply_all(lp.load(src)).reports
print("witness:", report.witness)

# Forcing it anyway shows the damage: the interpreter sees different memory,
# and the brute-force oracle finds the reversed pair.
forced = lp.apply_all(lp.load(src.replace("reverse", "reverse assume_safety")))
a = lp.run(lp.load(src), {"n": 5}, record_accesses=True)
b = lp.run(forced.tree, {"n": 5}, record_accesses=True)
print("forced result:", lp.equivalent(a, b))
print("first reversed pair:", instance_order_violations(a, b)[0])
