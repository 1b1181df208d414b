"""Acceptance criteria, one test each; a pass/fail line per criterion is printed
in the terminal summary (see conftest.py)."""
import collections
import random
import time
from contextlib import contextmanager

import pytest

from conftest import FIXTURES, load_fixture, transformed
from randprog import corpus

import looppragma as lp
from looppragma.diagnostics import AmbiguousName, Level
from looppragma.interp import InitSpec, instance_order_violations
from looppragma.looptree import Band, Guard, alpha_equal, walk

RESULTS: dict[int, str] = {}
CORPUS_SIZE = 1000


@contextmanager
def criterion(number: int, title: str):
    notes: list[str] = []
    start = time.perf_counter()
    ok = False
    try:
        yield notes
        ok = True
    finally:
        elapsed = time.perf_counter() - start
        detail = "; ".join([f"{elapsed:.2f}s"] + notes)
        RESULTS[number] = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {title} ({detail})"
        print(RESULTS[number])


def bands(root):
    return [n for _, n in walk(root) if isinstance(n, Band)]


# -- 1 ----------------------------------------------------------------------------------

LISTING5_OUT = """\
array double A[128];
#pragma omp id(outer)
for (int outer = 0; outer < 128; outer += 2)
  #pragma omp id(inner)
  for (int i = outer; i < outer + 2; i += 1)
    S: A[i] = A[i] + 1.0;
"""

LISTING8_OUT = """\
param int n;
array double A[n];
for (int i = 0; i <= n/2; i += 1)
  S: A[i] = A[i] + 1.0;
for (int i = n/2 + 1; i < n; i += 1)
  S: A[i] = A[i] + 1.0;
"""

LISTING9_OUT = """\
param int n;
array double A[n];
array double B[n];
#pragma omp id(A)
for (int i = 0; i < 2*n; i += 1)
  if (i < n)
    SA: A[i] = A[i] + 1.0;
  else
    SB: B[i - n] = B[i - n] + 2.0;
"""


def _golden_suite():
    for name in ("listing2a.ll.c", "listing2b.ll.c"):
        main, rest = transformed(name).tree.root.children
        assert main.step == 2 and len(main.body.children) == 2, name
        assert rest.step == 1 and len(rest.body.children) == 1, name

    pit = transformed("listing3.ll.c").tree.root.children[0]
    strip = pit.body.children[0]
    assert (pit.name, pit.step, [d.kind for d in pit.annotations]) == ("outer", 4, ["thread_parallelize"])
    assert (strip.name, [d.kind for d in strip.annotations]) == ("inner", ["vectorize"])
    assert str(strip.ub) == "min(n, outer + 4)"

    loops = transformed("listing4.ll.c").tree.root.children
    assert [b.name for b in loops] == ["loopA", "loopB"]

    assert lp.emit(transformed("listing5.ll.c").tree) == LISTING5_OUT

    (fused,) = transformed("listing6a.ll.c").tree.root.children
    assert len(fused.body.children) == 2
    with pytest.raises(AmbiguousName, match="lines 5, 6"):
        transformed("listing6b.ll.c")

    assert lp.emit(transformed("listing8.ll.c").tree) == LISTING8_OUT
    res9 = transformed("listing9.ll.c")
    assert lp.emit(res9.tree) == LISTING9_OUT
    assert isinstance(res9.tree.root.children[0].body.children[0], Guard)

    tiled = bands(transformed("tile_composition.ll.c").tree.root)
    assert [(b.name, b.step) for b in tiled] == [
        ("outer_i", 4), ("outer_j", 4), ("inner_i", 1), ("inner_j", 1)]


def test_criterion1_listing_goldens():
    with criterion(1, "listing golden suite") as notes:
        start = time.perf_counter()
        _golden_suite()
        elapsed = time.perf_counter() - start
        notes.append("11 fixtures")
        assert elapsed < 1.0


# -- 2 ----------------------------------------------------------------------------------

def test_criterion2_composition_order():
    with criterion(2, "composition-order witness on n=4") as notes:
        a = [i for _, (i,) in lp.run(transformed("listing2a.ll.c").tree, {"n": 4}).trace]
        b = [i for _, (i,) in lp.run(transformed("listing2b.ll.c").tree, {"n": 4}).trace]
        notes.append(f"2a={tuple(a)} 2b={tuple(b)}")
        assert a == [3, 2, 1, 0]
        assert b == [2, 3, 0, 1]
        assert a != b


# -- 3 ----------------------------------------------------------------------------------

def test_criterion3_gemm_recipe():
    with criterion(3, "gemm recipe at M=N=K=6") as notes:
        start = time.perf_counter()
        tree = load_fixture("gemm.ll.c")
        res = lp.apply_all(tree)
        assert [r.outcome for r in res.reports] == ["applied"] * 3 + ["recorded"]
        assert [b.name for b in bands(res.tree.root)][-6:] == ["j1", "k1", "i1", "j2", "i2", "k2"]
        b = {"M": 6, "N": 6, "K": 6}
        before = lp.run(tree, b, InitSpec.seeded(0))
        after = lp.run(res.tree, b, InitSpec.seeded(0))
        eq = lp.equivalent(before, after, "memory+trace-multiset",
                           rtol=1e-12 if res.reordering else 0.0)
        notes.append(f"max relative deviation {eq.max_deviation:g}")
        assert eq and eq.max_deviation <= 1e-12
        assert time.perf_counter() - start < 5.0


# -- 4 and 5 ----------------------------------------------------------------------------

def _run_corpus():
    for case in corpus(CORPUS_SIZE):
        tree = lp.load(case.source)
        res = lp.apply_all(tree)
        (rep,) = res.reports
        yield case, tree, res, rep


def test_criterion4_proven_implies_equivalence():
    with criterion(4, f"property suite over {CORPUS_SIZE} random programs") as notes:
        start = time.perf_counter()
        kinds = collections.Counter()
        proven = 0
        failures = []
        for case, tree, res, rep in _run_corpus():
            assert "assume_safety" not in case.directive
            if rep.verdict != "Proven" or rep.outcome != "applied":
                continue
            proven += 1
            kinds[case.kind] += 1
            a = lp.run(tree, case.bindings, InitSpec.seeded(case.seed))
            b = lp.run(res.tree, case.bindings, InitSpec.seeded(case.seed))
            eq = lp.equivalent(a, b)
            if not eq:
                failures.append((case.seed, case.directive, eq.divergence))
        notes.append(f"{proven} Proven and applied, {len(kinds)} kinds, {len(failures)} counterexamples")
        assert failures == []
        assert proven >= CORPUS_SIZE // 2
        assert len(kinds) >= 14
        assert time.perf_counter() - start < 120.0


def test_criterion5_bruteforce_soundness():
    with criterion(5, "brute-force oracle vs Proven verdicts") as notes:
        checked = 0
        violations = []
        for case, tree, res, rep in _run_corpus():
            assert 1 <= case.bindings["n"] <= 6
            if rep.verdict != "Proven":
                continue
            a = lp.run(tree, case.bindings, InitSpec.seeded(case.seed), record_accesses=True)
            b = lp.run(res.tree, case.bindings, InitSpec.seeded(case.seed), record_accesses=True)
            checked += 1
            found = instance_order_violations(a, b, limit=1)
            if found:
                violations.append((case.seed, case.directive, found[0]))
        notes.append(f"{checked} Proven programs checked, {len(violations)} violations")
        assert violations == []


# -- 6 ----------------------------------------------------------------------------------

POLICY_PROGRAMS = {
    "Proven": """
param int n;
array int A[n + 1];
#pragma omp reverse {policy}
for (int i = 1; i < n; i += 1)
  S: A[i] = 2*i;
""",
    "Disproven": """
param int n;
array int A[n + 1];
#pragma omp reverse {policy}
for (int i = 1; i < n; i += 1)
  S: A[i] = A[i - 1] + 1;
""",
    "Unknown": """
param int n;
array int A[2*n + 80];
#pragma omp reverse {policy}
for (int i = 0; i < n; i += 1)
  S: A[i + 40] = A[n - i] + 1;
""",
}

# (verdict, policy) -> (outcome, level, aborted, tree changed)
POLICY_GOLDEN = {
    ("Proven", ""): ("applied", Level.INFO, False, True),
    ("Proven", "assert"): ("applied", Level.INFO, False, True),
    ("Proven", "assume_safety"): ("applied", Level.INFO, False, True),
    ("Proven", "suggest_only"): ("skipped", Level.INFO, False, False),
    ("Unknown", ""): ("skipped", Level.WARNING, False, False),
    ("Unknown", "assert"): ("error", Level.ERROR, True, False),
    ("Unknown", "assume_safety"): ("applied", Level.INFO, False, True),
    ("Unknown", "suggest_only"): ("skipped", Level.WARNING, False, False),
    ("Disproven", ""): ("skipped", Level.WARNING, False, False),
    ("Disproven", "assert"): ("error", Level.ERROR, True, False),
    ("Disproven", "assume_safety"): ("applied", Level.INFO, False, True),
    ("Disproven", "suggest_only"): ("skipped", Level.WARNING, False, False),
}


def test_criterion6_policy_matrix():
    with criterion(6, "policy matrix") as notes:
        matched = 0
        for (verdict, policy), (outcome, level, aborted, changed) in POLICY_GOLDEN.items():
            tree = lp.load(POLICY_PROGRAMS[verdict].format(policy=policy))
            res = lp.apply_all(tree)
            (rep,) = res.reports
            observed = (rep.verdict, rep.outcome, rep.level, res.aborted,
                        not alpha_equal(tree.root, res.tree.root))
            assert observed == (verdict, outcome, level, aborted, changed), (verdict, policy)
            matched += 1
        notes.append(f"{matched}/12 cases")
        assert matched == 12


# -- 7 ----------------------------------------------------------------------------------

def _random_nest(rng: random.Random):
    depth = rng.randint(2, 3)
    ctrs = ["i", "j", "k"][:depth]
    lines = ["param int n;", "array double X[64][64];"]
    pad = ""
    for c in ctrs:
        lb = rng.choice(("0", "1", "2"))
        ub = rng.choice(("n", "n + 3", "7", "12"))
        lines.append(f"{pad}for (int {c} = {lb}; {c} < {ub}; {c} += 1)")
        pad += "  "

    def sub():
        terms = [f"{rng.randint(-2, 2)}*{c}" for c in rng.sample(ctrs, rng.randint(1, depth))]
        return " + ".join(terms) + " + 32"
    lines.append(f"{pad}S: X[{sub()}][{sub()}] = 0.5*X[{sub()}][{sub()}] + 1.0;")
    sizes = [rng.randint(2, 5) for _ in ctrs]
    return ctrs, sizes, lines


def _tile_pair(ctrs, sizes, lines):
    pits = [f"{c}1" for c in ctrs]
    tiles = [f"{c}2" for c in ctrs]
    tile_src = "\n".join(lines[:2] + [
        f"#pragma omp loop({', '.join(ctrs)}) tile sizes({', '.join(map(str, sizes))}) "
        f"pit_ids({', '.join(pits)}) tile_ids({', '.join(tiles)}) assume_safety"] + lines[2:]) + "\n"
    manual = [f"#pragma omp loop({c}) stripmine strip_size({s}) pit_id({p}) strip_id({t})"
              for c, s, p, t in zip(ctrs, sizes, pits, tiles)]
    nest_order = [x for pair in zip(pits, tiles) for x in pair]
    manual.append(f"#pragma omp loop({', '.join(nest_order)}) interchange "
                  f"permutation({', '.join(pits + tiles)}) assume_safety")
    manual_src = "\n".join(lines[:2] + manual + lines[2:]) + "\n"
    return tile_src, manual_src


def test_criterion7_tile_is_composition():
    with criterion(7, "tile equals stripmine+interchange on 50 random nests") as notes:
        rng = random.Random(2024)
        same_verdict = 0
        for _ in range(50):
            ctrs, sizes, lines = _random_nest(rng)
            tile_src, manual_src = _tile_pair(ctrs, sizes, lines)
            tiled = lp.apply_all(lp.load(tile_src))
            manual = lp.apply_all(lp.load(manual_src))
            assert all(r.outcome == "applied" for r in tiled.reports + manual.reports)
            assert alpha_equal(tiled.tree.root, manual.tree.root), tile_src
            assert lp.emit(tiled.tree) == lp.emit(manual.tree)
            assert tiled.reports[0].verdict == manual.reports[-1].verdict
            same_verdict += 1
        notes.append(f"{same_verdict}/50 identical trees and verdicts")


# -- 8 ----------------------------------------------------------------------------------

def test_criterion8_roundtrip():
    with criterion(8, "emit-parse-emit fixpoint on the fixture corpus") as notes:
        count = 0
        for path in sorted(FIXTURES.glob("*.ll.c")):
            if path.name == "listing6b.ll.c":
                tree = lp.load(path.read_text(), file=path.name)  # parses; fails only on apply
            else:
                tree = transformed(path.name).tree
            for t in (tree, lp.load(path.read_text(), file=path.name)):
                first = lp.emit(t)
                second = lp.emit(lp.load(first))
                assert second == first, path.name
                count += 1
        notes.append(f"{count} emissions")
