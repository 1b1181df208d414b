import pytest
from hypothesis import given, settings, strategies as st

from conftest import FIXTURES, load_fixture

import looppragma as lp
from looppragma.diagnostics import LoopPragmaError
from looppragma.expr import Num, Var
from looppragma.frontend import parse_program
from looppragma.looptree import (Band, Guard, Leaf, SectionMark, Seq, alpha_equal, build_tree,
                                 emit_ast, is_perfect_chain, iteration_count, walk)


def shape(node):
    """Compact structural summary: nested tuples of node kinds and names."""
    if isinstance(node, Seq):
        return [shape(c) for c in node.children]
    if isinstance(node, Band):
        return ("Band", node.counter, shape(node.body))
    if isinstance(node, SectionMark):
        return ("Section", node.name, shape(node.body))
    if isinstance(node, Guard):
        return ("If", shape(node.then), None if node.orelse is None else shape(node.orelse))
    return ("Leaf", node.label)


def test_listing4_body_shape():
    tree = load_fixture("listing4.ll.c")
    assert shape(tree.root) == [
        ("Band", "i", [("Section", "A", [("Leaf", "SA")]), ("Section", "B", [("Leaf", "SB")])]),
    ]


def test_listing1_nest_shape():
    tree = load_fixture("gemm.ll.c")
    assert shape(tree.root) == [
        ("Band", "i", [("Band", "j", [("Section", "zero", [("Leaf", "S0")]),
                                      ("Band", "k", [("Leaf", "S1")])])]),
    ]
    assert len(tree.directives) == 4  # loop(...)-targeted, applied later


def test_statement_without_loops():
    tree = lp.load("array int A[1];\nA[0] = 7;\n")
    (leaf,) = tree.root.children
    assert isinstance(leaf, Leaf) and leaf.label == "S0" and leaf.instance == ()


def test_leaf_accesses_of_reduction():
    tree = load_fixture("gemm.ll.c")
    leaf = [n for _, n in walk(tree.root) if isinstance(n, Leaf)][1]
    modes = [(a.array, a.mode, a.reduction) for a in leaf.accesses()]
    assert modes == [("A", "read", None), ("B", "read", None),
                     ("C", "read", "+="), ("C", "write", "+=")]


@pytest.mark.parametrize("lb, ub, step, bindings, expected", [
    (0, 128, 2, {}, 64),
    (5, 5, 1, {}, 0),
    (0, "n", 1, {"n": 2600}, 2600),
    (3, 10, 4, {}, 2),
    (10, 3, 1, {}, 0),
])
def test_iteration_count(lb, ub, step, bindings, expected):
    as_expr = lambda v: Var(v) if isinstance(v, str) else Num(v)
    band = Band("i", as_expr(lb), as_expr(ub), step, Seq())
    assert iteration_count(band, bindings) == expected


def test_emit_ast_roundtrip_structural():
    for path in sorted(FIXTURES.glob("*.ll.c")):
        prog = parse_program(path.read_text())
        tree = build_tree(prog)
        again = build_tree(emit_ast(tree))
        assert alpha_equal(tree.root, again.root), path.name
        assert again.directives == tree.directives


def test_listing5_output_shape():
    result = lp.apply_all(load_fixture("listing5.ll.c"))
    (pit,) = result.tree.root.children
    (strip,) = pit.body.children
    assert (pit.name, pit.counter, str(pit.lb), str(pit.ub), pit.step) == ("outer", "outer", "0", "128", 2)
    assert (strip.name, strip.counter, str(strip.lb), str(strip.ub), strip.step) == \
        ("inner", "i", "outer", "outer + 2", 1)


def test_concatenate_guard_structure():
    result = lp.apply_all(load_fixture("listing9.ll.c"))
    (band,) = result.tree.root.children
    (guard,) = band.body.children
    assert isinstance(guard, Guard)
    assert str(guard.cond) == "i < n"
    assert str(guard.orelse.children[0].target) == "B[i - n]"


def test_perfect_chain():
    tree = load_fixture("tile_composition.ll.c")
    assert is_perfect_chain(tree.root, (0,), 2) == [(0,), (0, 0, 0)]
    gemm = load_fixture("gemm.ll.c")
    assert is_perfect_chain(gemm.root, (0,), 2) is not None
    assert is_perfect_chain(gemm.root, (0,), 3) is None


def test_dump_ir_is_stable():
    tree = load_fixture("gemm.ll.c")
    assert lp.dump_ir(tree) == lp.dump_ir(load_fixture("gemm.ll.c"))
    assert lp.dump_ir(tree).splitlines()[0] == "Band i = 0 .. M step 1 name=i(implicit-counter)"


def test_pragma_location_rule():
    src = """
param int n;
array int A[n][n];
for (int i = 0; i < n; i += 1) {
  #pragma omp loop(i, j) interchange
  for (int j = 0; j < n; j += 1)
    A[i][j] = 0;
}
"""
    with pytest.raises(LoopPragmaError):
        lp.load(src)


def test_counters_unique_on_paths():
    for path in sorted(FIXTURES.glob("*.ll.c")):
        if path.name == "listing6b.ll.c":
            continue
        result = lp.apply_all(lp.load(path.read_text()))
        self_check(result.tree.root, ())


def self_check(node, counters):
    if isinstance(node, Band):
        assert node.counter not in counters
        counters = counters + (node.counter,)
    for child in getattr(node, "children", ()) or ():
        self_check(child, counters)
    for attr in ("body", "then", "orelse"):
        sub = getattr(node, attr, None)
        if sub is not None:
            self_check(sub, counters)


@settings(max_examples=60, deadline=None)
@given(lb=st.integers(-5, 5), extent=st.integers(-2, 12), step=st.integers(1, 4))
def test_iteration_count_matches_range(lb, extent, step):
    band = Band("i", Num(lb), Num(lb + extent), step, Seq())
    assert iteration_count(band) == len(range(lb, lb + extent, step))
