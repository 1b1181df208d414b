import json

import pytest

from conftest import load_fixture, transformed

import looppragma as lp
from looppragma.deps import DISPROVEN, PROVEN, UNKNOWN, Verdict
from looppragma.diagnostics import Level, MalformedClause, PreconditionViolated
from looppragma.frontend.directive import Policy
from looppragma.looptree import Band, Guard, Leaf, alpha_equal, iteration_count, leaves, walk
from looppragma.xform import (ABORT, APPLIED, ERROR, PROCEED, SKIP, SKIPPED, apply_policy,
                              reports_json, transforms as T)


def xf(src: str) -> lp.ApplyResult:
    return lp.apply_all(lp.load(src))


def orig_and_new(src: str):
    return lp.load(src), xf(src)


def traces(src: str, bindings: dict):
    tree, res = orig_and_new(src)
    return lp.run(tree, bindings).trace, lp.run(res.tree, bindings).trace, res


def bands(root):
    return [n for _, n in walk(root) if isinstance(n, Band)]


ONE_LOOP = """
param int n;
array int A[n];
{pragma}
for (int i = 0; i < n; i += 1)
  S: A[i] = A[i] + i;
"""


# -- composition order ----------------------------------------------------------------

def test_listing2_traces():
    a = lp.run(transformed("listing2a.ll.c").tree, {"n": 4}).trace
    b = lp.run(transformed("listing2b.ll.c").tree, {"n": 4}).trace
    assert [i for _, (i,) in a] == [3, 2, 1, 0]
    assert [i for _, (i,) in b] == [2, 3, 0, 1]


def test_listing2a_groups_pairs():
    leaf_bodies = [len(b.body.children) for b in bands(transformed("listing2a.ll.c").tree.root)]
    assert leaf_bodies[0] == 2  # main loop holds two copies: (3,2) then (1,0)


def test_empty_directive_list():
    tree = lp.load(ONE_LOOP.format(pragma=""))
    res = lp.apply_all(tree)
    assert res.reports == [] and alpha_equal(res.tree.root, tree.root)


# -- stripmine / block ------------------------------------------------------------------

def test_stripmine_listing5_shape():
    res = transformed("listing5.ll.c")
    (pit,) = res.tree.root.children
    assert (pit.counter, str(pit.lb), str(pit.ub), pit.step) == ("outer", "0", "128", 2)
    (strip,) = pit.body.children
    assert (str(strip.lb), str(strip.ub)) == ("outer", "outer + 2")


def test_stripmine_remainder_guard():
    src = """
array int A[10];
#pragma omp stripmine strip_size(4)
for (int i = 0; i < 10; i += 1)
  S: A[i] = i;
"""
    before, after, res = traces(src, {})
    assert before == after
    strip = bands(res.tree.root)[1]
    assert "min" in str(strip.ub) and "10" in str(strip.ub)


def test_stripmine_whole_extent_runs_once():
    src = ONE_LOOP.format(pragma="#pragma omp stripmine strip_size(8)").replace("i < n", "i < 8")
    res = xf(src)
    assert iteration_count(bands(res.tree.root)[0]) == 1


@pytest.mark.parametrize("count, pit, strip", [(128, 4, 32), (10, 4, 3)])
def test_block_strip_lengths(count, pit, strip):
    src = f"""
array int A[{count}];
#pragma omp block pit_size({pit})
for (int i = 0; i < {count}; i += 1)
  S: A[i] = i;
"""
    before, after, res = traces(src, {})
    assert before == after
    outer, inner = bands(res.tree.root)[:2]
    assert iteration_count(outer) == pit
    assert iteration_count(inner, {outer.counter: 0}) == strip


def test_block_pit_one_is_whole_loop():
    src = ONE_LOOP.format(pragma="#pragma omp block pit_size(1)")
    before, after, _ = traces(src, {"n": 7})
    assert before == after


# -- interchange / tile -----------------------------------------------------------------

NEST = """
param int n;
array int A[n][n];
{pragma}
for (int i = 0; i < n; i += 1)
  for (int j = 0; j < n; j += 1)
    S: A[i][j] = i - j;
"""


def test_interchange_transposes_trace():
    before, after, res = traces(NEST.format(pragma="#pragma omp interchange permutation(j, i)"),
                                {"n": 4})
    assert after == sorted(before, key=lambda t: (t[1][1], t[1][0]))
    assert res.reports[0].verdict == PROVEN
    assert lp.equivalent(*(lp.run(t, {"n": 4}) for t in (lp.load(NEST.format(pragma="")), res.tree)))


def test_interchange_identity():
    tree = lp.load(NEST.format(pragma="#pragma omp interchange permutation(i, j)"))
    res = lp.apply_all(tree)
    assert alpha_equal(res.tree.root, lp.load(NEST.format(pragma="")).root)


def test_listing1_permutation():
    res = transformed("gemm.ll.c")
    names = [b.name for b in bands(res.tree.root)]
    # zero-init nest keeps i,j; the compute nest follows the requested permutation
    assert names[-6:] == ["j1", "k1", "i1", "j2", "i2", "k2"]


def test_tile_matches_stripmine_interchange():
    tiled = xf(NEST.format(pragma="#pragma omp tile sizes(4, 4)"))
    manual = xf("""
param int n;
array int A[n][n];
#pragma omp loop(i) stripmine strip_size(4) pit_id(i1) strip_id(i2)
#pragma omp loop(j) stripmine strip_size(4) pit_id(j1) strip_id(j2)
#pragma omp loop(i1, i2, j1, j2) interchange permutation(i1, j1, i2, j2)
for (int i = 0; i < n; i += 1)
  for (int j = 0; j < n; j += 1)
    S: A[i][j] = i - j;
""")
    assert alpha_equal(tiled.tree.root, manual.tree.root)


def test_tile_full_extents_single_pit():
    res = xf(NEST.format(pragma="#pragma omp tile sizes(5, 5)").replace("< n", "< 5"))
    assert [iteration_count(b) for b in bands(res.tree.root)[:2]] == [1, 1]


def test_tile_gemm_equivalent():
    tree = load_fixture("gemm.ll.c")
    res = lp.apply_all(tree)
    b = {"M": 6, "N": 6, "K": 6}
    assert lp.equivalent(lp.run(tree, b), lp.run(res.tree, b), rtol=1e-12)


def test_tile_arity_mismatch():
    with pytest.raises(MalformedClause):
        xf(NEST.format(pragma="#pragma omp tile sizes(4, 4) pit_ids(a) tile_ids(b, c)"))


# -- coalesce ---------------------------------------------------------------------------

def test_coalesce_4x3():
    src = """
array int A[4][3];
#pragma omp coalesce
for (int i = 0; i < 4; i += 1)
  for (int j = 0; j < 3; j += 1)
    S: A[i][j] = 3*i + j;
"""
    before, after, res = traces(src, {})
    assert before == after
    (band,) = bands(res.tree.root)
    assert iteration_count(band) == 12


def test_coalesce_triangular_rejected():
    src = NEST.format(pragma="#pragma omp coalesce assert").replace("j < n", "j < i")
    res = xf(src)
    assert res.aborted and "depend" in res.reports[0].reason


# -- distribute / fuse ------------------------------------------------------------------

def test_listing4_distribution():
    res = transformed("listing4.ll.c")
    loops = res.tree.root.children
    assert [b.name for b in loops] == ["loopA", "loopB"]
    assert [[l.label for _, l in leaves(b)] for b in loops] == [["SA"], ["SB"]]


def test_listing1_distribution_sections():
    res = transformed("gemm.ll.c")
    first, second = res.tree.root.children
    assert [l.label for _, l in leaves(first)] == ["S0"]
    assert [l.label for _, l in leaves(second)] == ["S1"]


def test_distribute_against_dependence_disproven():
    src = """
param int n;
array int A[n + 1];
array int B[n + 1];
#pragma omp distribute
for (int i = 1; i < n; i += 1) {
  #pragma omp id(first)
  { B[i] = A[i - 1]; }
  #pragma omp id(second)
  { A[i] = i; }
}
"""
    res = xf(src)
    assert res.reports[0].verdict == DISPROVEN and res.reports[0].outcome == SKIPPED


def test_listing6a_fuse():
    res = transformed("listing6a.ll.c")
    (band,) = res.tree.root.children
    assert len(band.body.children) == 2
    assert res.reports[0].verdict == PROVEN


def test_fuse_with_itself():
    res = xf(ONE_LOOP.format(pragma="#pragma omp loop(i, i) fuse"))
    assert res.reports[0].outcome == ERROR


def test_fuse_producer_consumer():
    src = """
param int n;
array int A[n];
array int B[n];
#pragma omp loop(p, c) fuse
#pragma omp id(p)
for (int i = 0; i < n; i += 1)
  A[i] = 2*i;
#pragma omp id(c)
for (int i = 0; i < n; i += 1)
  B[i] = A[i] + 1;
"""
    tree, res = orig_and_new(src)
    assert res.reports[0].verdict == PROVEN
    assert len(res.tree.root.children) == 1
    assert lp.equivalent(lp.run(tree, {"n": 8}), lp.run(res.tree, {"n": 8}))


def test_fuse_backward_dependence_not_applied():
    src = """
param int n;
array int A[n + 1];
array int B[n + 1];
#pragma omp loop(p, c) fuse
#pragma omp id(p)
for (int i = 0; i < n; i += 1)
  A[i] = 2*i;
#pragma omp id(c)
for (int i = 0; i < n; i += 1)
  B[i] = A[i + 1];
"""
    res = xf(src)
    assert res.reports[0].verdict == DISPROVEN and res.reports[0].outcome == SKIPPED


# -- reverse / shift / scale ------------------------------------------------------------

def test_reverse_independent():
    before, after, res = traces(ONE_LOOP.format(pragma="#pragma omp reverse"), {"n": 5})
    assert after == before[::-1]
    assert res.reports[0].verdict == PROVEN


def test_shift_zero_and_scale_one_identity():
    for p in ("#pragma omp shift offset(0)", "#pragma omp scale factor(1)"):
        before, after, _ = traces(ONE_LOOP.format(pragma=p), {"n": 5})
        assert before == after


@pytest.mark.parametrize("pragma", ["#pragma omp shift offset(n - 1)", "#pragma omp scale factor(3)"])
def test_shift_scale_preserve_trace(pragma):
    before, after, res = traces(ONE_LOOP.format(pragma=pragma), {"n": 6})
    assert before == after
    assert res.reports[0].outcome == APPLIED


def test_scale_rejects_nonpositive():
    with pytest.raises(MalformedClause):
        xf(ONE_LOOP.format(pragma="#pragma omp scale factor(-1)"))


# -- split / peel -----------------------------------------------------------------------

def test_listing8_split():
    res = transformed("listing8.ll.c")
    first, second = res.tree.root.children
    assert str(first.ub) == "n/2 + 1" and str(second.lb) == "n/2 + 1"
    out = lp.emit(res.tree)
    assert "i <= n/2" in out


@pytest.mark.parametrize("n", [1, 2, 5, 8])
def test_split_trace_preserved(n):
    src = (load_fixture_source("listing8.ll.c"))
    before, after, _ = traces(src, {"n": n})
    assert before == after


def load_fixture_source(name):
    from conftest import FIXTURES
    return (FIXTURES / name).read_text()


def test_peel_zero_elided():
    res = xf(ONE_LOOP.format(pragma="#pragma omp peel count(0)").replace("i < n", "i < 6"))
    assert len(res.tree.root.children) == 1


def test_split_always_false_elided():
    res = xf(ONE_LOOP.format(pragma="#pragma omp split indices(i > 100)").replace("i < n", "i < 6"))
    assert len(res.tree.root.children) == 1


@pytest.mark.parametrize("side", ["begin", "end"])
def test_peel_sides(side):
    before, after, res = traces(ONE_LOOP.format(pragma=f"#pragma omp peel count(2) side({side})"), {"n": 5})
    assert before == after
    assert len(res.tree.root.children) == 2


# -- concatenate ------------------------------------------------------------------------

def test_listing9_concatenation():
    res = transformed("listing9.ll.c")
    (band,) = res.tree.root.children
    assert str(band.ub) == "2*n"
    assert isinstance(band.body.children[0], Guard)


def test_concatenate_different_extents():
    src = """
array int A[3];
array int B[2];
#pragma omp loop(a, b) concatenate
#pragma omp id(a)
for (int i = 0; i < 3; i += 1)
  SA: A[i] = i;
#pragma omp id(b)
for (int j = 0; j < 2; j += 1)
  SB: B[j] = j;
"""
    before, after, res = traces(src, {})
    assert [(l, i) for l, i in after] == [("SA", (0,)), ("SA", (1,)), ("SA", (2,)),
                                         ("SB", (0,)), ("SB", (1,))]
    assert iteration_count(res.tree.root.children[0]) == 5


def test_concatenate_one_loop_identity():
    src = ONE_LOOP.format(pragma="#pragma omp loop(i) concatenate")
    before, after, _ = traces(src, {"n": 4})
    assert before == after


# -- unroll / unroll-and-jam ------------------------------------------------------------

def test_unroll_factor2_n5():
    before, after, res = traces(ONE_LOOP.format(pragma="#pragma omp unroll factor(2)"), {"n": 5})
    assert before == after
    main, rest = res.tree.root.children
    assert main.step == 2 and len(main.body.children) == 2
    assert len(rest.body.children) == 1


def test_unroll_full():
    res = xf(ONE_LOOP.format(pragma="#pragma omp unroll full").replace("i < n", "i < 3"))
    assert bands(res.tree.root) == []
    assert len([n for _, n in walk(res.tree.root) if isinstance(n, Leaf)]) == 3


def test_unroll_full_symbolic_rejected():
    res = xf(ONE_LOOP.format(pragma="#pragma omp unroll full"))
    assert res.reports[0].outcome == ERROR


def test_unrollandjam_independent():
    src = NEST.format(pragma="#pragma omp unrollandjam factor(2)")
    tree, res = orig_and_new(src)
    assert res.reports[0].verdict == PROVEN
    s0, s1 = lp.run(tree, {"n": 4}), lp.run(res.tree, {"n": 4})
    assert lp.equivalent(s0, s1)
    # inner bodies interleaved: (i, j), (i+1, j)
    assert [inst for _, inst in s1.trace[:4]] == [(0, 0), (1, 0), (0, 1), (1, 1)]


# -- reorder ----------------------------------------------------------------------------

SIBLINGS = """
param int n;
array int A[n];
array int B[n];
#pragma omp loop(p, c) reorder
#pragma omp id(p)
for (int i = 0; i < n; i += 1)
  A[i] = i;
#pragma omp id(c)
for (int i = 0; i < n; i += 1)
  B[i] = {rhs};
"""


def test_reorder_independent():
    tree, res = orig_and_new(SIBLINGS.format(rhs="2*i"))
    assert res.reports[0].verdict == PROVEN
    assert lp.equivalent(lp.run(tree, {"n": 5}), lp.run(res.tree, {"n": 5}))


def test_reorder_identity_order():
    src = SIBLINGS.format(rhs="A[i]").replace("reorder", "reorder order(p, c)")
    tree, res = orig_and_new(src)
    assert alpha_equal(res.tree.root, tree.root)


def test_reorder_producer_consumer_disproven():
    src = SIBLINGS.format(rhs="A[i]")
    tree, res = orig_and_new(src)
    (rep,) = res.reports
    assert rep.verdict == DISPROVEN and rep.outcome == SKIPPED and rep.level == Level.WARNING
    forced = lp.apply_all(lp.load(src.replace("reorder", "reorder assume_safety")))
    assert not lp.equivalent(lp.run(tree, {"n": 5}), lp.run(forced.tree, {"n": 5}))


# -- policy -----------------------------------------------------------------------------

@pytest.mark.parametrize("status, policy, decision, level", [
    (UNKNOWN, Policy(assert_=True), ABORT, Level.ERROR),
    (DISPROVEN, Policy(assume_safety=True), PROCEED, Level.INFO),
    (PROVEN, Policy(suggest_only=True), SKIP, Level.INFO),
    (UNKNOWN, Policy(), SKIP, Level.WARNING),
    (PROVEN, Policy(assert_=True, noversioning=True), PROCEED, Level.INFO),
])
def test_apply_policy(status, policy, decision, level):
    assert apply_policy(Verdict(status), policy) == (decision, level)


def test_assert_aborts_run():
    res = xf(SIBLINGS.format(rhs="A[i]").replace("reorder", "reorder assert"))
    assert res.aborted and res.exit_status == 2


def test_annotations_survive():
    res = xf(ONE_LOOP.format(pragma="#pragma omp parallel for\n#pragma omp reverse"))
    (band,) = res.tree.root.children
    assert [d.kind for d in band.annotations] == ["parallel for"]
    assert "#pragma omp parallel for" in lp.emit(res.tree)


def test_reports_json_records():
    res = transformed("gemm.ll.c")
    recs = json.loads(reports_json(res.reports))
    assert [r["kind"] for r in recs][:2] == ["distribute", "tile"]
    tile = recs[1]
    assert tile["verdict"] == PROVEN and tile["outcome"] == APPLIED
    assert tile["names_introduced"] == ["i1", "j1", "k1", "i2", "j2", "k2"]
    assert set(tile) >= {"file", "line", "kind", "verdict", "outcome", "names_introduced"}


def test_names_injective_after_apply():
    res = transformed("gemm.ll.c")
    table = res.tree.names()
    handles = [e.handle for e in table.entries.values()]
    assert len(handles) == len(set(handles))


def test_stripmine_direct_api_rejects_small_size():
    tree = lp.load(ONE_LOOP.format(pragma=""))
    with pytest.raises(PreconditionViolated):
        T.stripmine(tree, (0,), 1)
