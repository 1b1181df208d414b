"""Stacked directives compose bottom-up, so their order changes the result.

Run: python3 demos/composition_order.py
"""
import looppragma as lp

BODY = """\
param int n;
array int A[n];
{first}
{second}
for (int i = 0; i < n; i += 1)
  S: A[i] = i;
"""

for title, first, second in [
    ("reverse, then unroll by 2", "#pragma omp unroll factor(2)", "#pragma omp reverse"),
    ("unroll by 2, then reverse", "#pragma omp reverse", "#pragma omp unroll factor(2)"),
]:
    src = BODY.format(first=first, second=second)
    result = lp.apply_all(lp.load(src))
    trace = lp.run(result.tree, {"n": 4}).trace
    print(f"== {title}")
    print(lp.emit(result.tree))
    print("instances executed:", [i for _, (i,) in trace])
    print()

# The first order runs the exact reversal 3,2,1,0.  The second keeps each
# unrolled pair in its original order and only reverses the pairs: 2,3,0,1.
