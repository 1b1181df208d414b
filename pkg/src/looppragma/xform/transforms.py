"""Pure tree rewrites, one function per loop transformation.

Every function takes a LoopTree plus handles (paths) and returns a Rewrite.
Legality is decided elsewhere; these functions only check structural
preconditions and raise PreconditionViolated when they do not hold.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

from ..diagnostics import PreconditionViolated
from ..expr import (BinOp, Call, Cond, Expr, Num, Var, free_vars, provably_le,
                    simplify, tighten, try_constant)
from ..looptree import (Band, Guard, Leaf, LoopTree, Node, Path, SectionMark, Seq,
                        counters_in, get, is_perfect_chain, iteration_count,
                        replace_at, splice, strip_names, substitute_node, walk)
from ..nameres import TRANSFORM


@dataclass(frozen=True)
class Rewrite:
    tree: LoopTree
    primary: Path | None  # outermost result loop, used by stacked directives
    introduced: tuple[str, ...] = ()


# -- helpers ------------------------------------------------------------------

def symbols(tree: LoopTree) -> set[str]:
    out = set(tree.params) | {a.name for a in tree.arrays}
    for _, n in walk(tree.root):
        if isinstance(n, Band):
            out.add(n.counter)
            out |= free_vars(n.lb) | free_vars(n.ub)
            if n.name:
                out.add(n.name)
        elif isinstance(n, SectionMark) and n.name:
            out.add(n.name)
        elif isinstance(n, Leaf) and n.label:
            out.add(n.label)
    return out


def fresh(base: str, taken: set[str]) -> str:
    if base not in taken:
        taken.add(base)
        return base
    k = 1
    while f"{base}_{k}" in taken:
        k += 1
    name = f"{base}_{k}"
    taken.add(name)
    return name


def _is_ident(s: str) -> bool:
    return s.isidentifier()


def _band(tree: LoopTree, path: Path, what: str) -> Band:
    try:
        node = get(tree.root, path)
    except (IndexError, TypeError):
        node = None
    if not isinstance(node, Band):
        raise PreconditionViolated(f"{what} needs a loop")
    return node


def _params(tree: LoopTree) -> tuple[str, ...]:
    return tree.params


def provably_empty(tree: LoopTree, lb: Expr, ub: Expr) -> bool:
    return provably_le(ub, lb, tree.params)


def _tight(tree: LoopTree, e: Expr) -> Expr:
    return tighten(simplify(e), tree.params)


def _extent(tree: LoopTree, b: Band) -> Expr:
    """Iteration count as an expression, never negative."""
    span = _tight(tree, Call("max", (simplify(b.ub - b.lb), Num(0))))
    if b.step == 1:
        return span
    return simplify((span + (b.step - 1)).floordiv(b.step))


def _rename_counters(node: Node, clash: set[str], taken: set[str]) -> Node:
    """Give inner bands whose counters are in ``clash`` fresh counters."""
    def rec(n: Node) -> Node:
        if isinstance(n, Seq):
            return Seq(tuple(rec(c) for c in n.children))
        if isinstance(n, Band):
            if n.counter in clash:
                new = fresh(n.counter, taken)
                body = substitute_node(n.body, {n.counter: Var(new)})
                n = replace(n, counter=new, body=body)
            return replace(n, body=rec(n.body))
        if isinstance(n, SectionMark):
            return replace(n, body=rec(n.body))
        if isinstance(n, Guard):
            return replace(n, then=rec(n.then), orelse=None if n.orelse is None else rec(n.orelse))
        return n
    return rec(node)


def _check_new_names(tree: LoopTree, names: Sequence[str | None], removed: Sequence[str | None] = ()) -> None:
    from ..diagnostics import DuplicateExplicitName
    existing = set(tree.names().entries) - {r for r in removed if r}
    seen = set()
    for n in names:
        if n is None:
            continue
        if n in existing or n in seen:
            raise DuplicateExplicitName(f"name '{n}' is already in use")
        seen.add(n)


def _seq_of(body: Seq | Node) -> Seq:
    return body if isinstance(body, Seq) else Seq((body,))


# -- vertical: stripmine, block, tile, interchange, coalesce -------------------

def stripmine(tree: LoopTree, path: Path, size: int, pit_id: str | None = None,
              strip_id: str | None = None) -> Rewrite:
    b = _band(tree, path, "stripmine")
    if size < 2:
        raise PreconditionViolated("strip size must be at least 2")
    _check_new_names(tree, [pit_id, strip_id], [b.name])
    taken = symbols(tree)
    if pit_id is not None and _is_ident(pit_id) and pit_id not in taken:
        pctr = fresh(pit_id, taken)
    elif pit_id is not None:
        pctr = fresh(f"{pit_id}_ctr", taken)
    else:
        pctr = fresh(f"pit_{b.counter}", taken)
    width = b.step * size
    p = Var(pctr)
    span = try_constant(b.ub - b.lb)
    if span is not None and span % width == 0:
        sub_ub = simplify(p + width)
    else:
        sub_ub = _tight(tree, Call("min", (simplify(p + width), b.ub)))
    strip = Band(b.counter, p, sub_ub, b.step, b.body,
                 strip_id if strip_id is not None else b.name,
                 TRANSFORM if strip_id is not None else b.origin,
                 b.annotations, (), b.line)
    pit = Band(pctr, b.lb, b.ub, width, Seq((strip,)),
               pit_id, TRANSFORM if pit_id is not None else None, (), (), b.line)
    new = tree.with_root(replace_at(tree.root, path, pit))
    return Rewrite(new, path, tuple(n for n in (pit_id, strip_id) if n))


def block(tree: LoopTree, path: Path, pit_size: int, pit_id: str | None = None,
          strip_id: str | None = None) -> Rewrite:
    b = _band(tree, path, "block")
    try:
        count = iteration_count(b, {})
    except Exception:
        raise PreconditionViolated("block needs a loop with a compile-time iteration count") from None
    _check_new_names(tree, [pit_id, strip_id], [b.name])
    taken = symbols(tree)
    if pit_id is not None and _is_ident(pit_id) and pit_id not in taken:
        pctr = fresh(pit_id, taken)
    elif pit_id is not None:
        pctr = fresh(f"{pit_id}_ctr", taken)
    else:
        pctr = fresh(f"pit_{b.counter}", taken)
    length = max(1, -(-count // pit_size))
    p = Var(pctr)
    lo = simplify(b.lb + (b.step * length) * p)
    hi = simplify(lo + b.step * length)
    if try_constant(b.ub - b.lb) == b.step * length * pit_size:
        sub_ub = hi
    else:
        sub_ub = simplify(Call("min", (hi, b.ub)))
    strip = Band(b.counter, lo, sub_ub, b.step, b.body,
                 strip_id if strip_id is not None else b.name,
                 TRANSFORM if strip_id is not None else b.origin,
                 b.annotations, (), b.line)
    pit = Band(pctr, Num(0), Num(pit_size), 1, Seq((strip,)),
               pit_id, TRANSFORM if pit_id is not None else None, (), (), b.line)
    return Rewrite(tree.with_root(replace_at(tree.root, path, pit)), path,
                   tuple(n for n in (pit_id, strip_id) if n))


def perfect_chain(tree: LoopTree, paths: Sequence[Path], what: str) -> None:
    if not paths:
        raise PreconditionViolated(f"{what} needs at least one loop")
    chain = is_perfect_chain(tree.root, paths[0], len(paths))
    if chain is None or list(chain) != list(paths):
        raise PreconditionViolated(f"{what} needs perfectly nested loops, listed outermost first")


def interchange(tree: LoopTree, chain: Sequence[Path], order: Sequence[int]) -> Rewrite:
    """Reorder a perfect chain; ``order[k]`` is the chain index placed at depth k."""
    perfect_chain(tree, chain, "interchange")
    if sorted(order) != list(range(len(chain))):
        raise PreconditionViolated("permutation must mention every loop of the nest exactly once")
    bands = [get(tree.root, p) for p in chain]
    placed: set[str] = set()
    counters = {b.counter for b in bands}
    for k in order:
        b = bands[k]
        deps = (free_vars(b.lb) | free_vars(b.ub)) & counters
        if not deps <= placed:
            missing = ", ".join(sorted(deps - placed))
            raise PreconditionViolated(
                f"bounds of loop '{b.name or b.counter}' depend on '{missing}' which would move inside it")
        placed.add(b.counter)
    body = bands[-1].body
    for k in reversed(order):
        body = Seq((replace(bands[k], body=body),))
    new = tree.with_root(replace_at(tree.root, chain[0], body.children[0]))
    return Rewrite(new, chain[0])


def tile(tree: LoopTree, chain: Sequence[Path], sizes: Sequence[int],
         pit_ids: Sequence[str | None] | None = None,
         tile_ids: Sequence[str | None] | None = None
         ) -> tuple[Rewrite, LoopTree, list[Path], list[int]]:
    """Strip-mine every loop of the chain, then move the pits outward.

    Returns the final rewrite plus the strip-mined tree, its chain and the
    interchange order so the caller can run the interchange legality check.
    """
    perfect_chain(tree, chain, "tile")
    if len(sizes) != len(chain):
        raise PreconditionViolated(f"tile needs {len(chain)} sizes, got {len(sizes)}")
    pit_ids = list(pit_ids) if pit_ids else [None] * len(chain)
    tile_ids = list(tile_ids) if tile_ids else [None] * len(chain)
    cur = tree
    for k in reversed(range(len(chain))):
        cur = stripmine(cur, chain[k], sizes[k], pit_ids[k], tile_ids[k]).tree
    depth = 2 * len(chain)
    mid = is_perfect_chain(cur.root, chain[0], depth)
    order = [2 * k for k in range(len(chain))] + [2 * k + 1 for k in range(len(chain))]
    r = interchange(cur, mid, order)
    ordered = [n for n in list(pit_ids) + list(tile_ids) if n]
    return (Rewrite(r.tree, chain[0], tuple(ordered)), cur, mid, order)


def coalesce(tree: LoopTree, chain: Sequence[Path], coalesced_id: str | None = None) -> Rewrite:
    perfect_chain(tree, chain, "coalesce")
    bands = [get(tree.root, p) for p in chain]
    outer_ctrs: set[str] = set()
    for b in bands:
        if (free_vars(b.lb) | free_vars(b.ub)) & outer_ctrs:
            raise PreconditionViolated(
                f"bounds of loop '{b.name or b.counter}' depend on an enclosing loop of the collapsed nest")
        outer_ctrs.add(b.counter)
    if len(bands) == 1:
        b = bands[0]
        if coalesced_id is None:
            return Rewrite(tree, chain[0])
        _check_new_names(tree, [coalesced_id], [b.name])
        new = replace(b, name=coalesced_id, origin=TRANSFORM)
        return Rewrite(tree.with_root(replace_at(tree.root, chain[0], new)), chain[0], (coalesced_id,))
    _check_new_names(tree, [coalesced_id], [b.name for b in bands])
    taken = symbols(tree)
    ctr = fresh("_".join(b.counter for b in bands), taken)
    c = Var(ctr)
    extents = [_extent(tree, b) for b in bands]
    total: Expr = Num(1)
    for e in extents:
        total = simplify(total * e)
    mapping: dict[str, Expr] = {}
    inner: Expr = Num(1)
    for k in reversed(range(len(bands))):
        b = bands[k]
        q = c if try_constant(inner) == 1 else simplify(BinOp("/", c, inner))
        idx = q if k == 0 else simplify(BinOp("%", q, extents[k]))
        mapping[b.counter] = simplify(b.lb + b.step * idx)
        inner = simplify(inner * extents[k])
    body = substitute_node(bands[-1].body, mapping)
    annotations = tuple(a for b in bands for a in b.annotations)
    new = Band(ctr, Num(0), total, 1, body, coalesced_id,
               TRANSFORM if coalesced_id else None, annotations, (), bands[0].line)
    return Rewrite(tree.with_root(replace_at(tree.root, chain[0], new)), chain[0],
                   (coalesced_id,) if coalesced_id else ())


# -- horizontal: distribute, fuse, reorder, concatenate --------------------------

def distribute(tree: LoopTree, chain: Sequence[Path], groups: Sequence[Sequence[int]],
               group_names: Sequence[str], distributed_ids: Sequence[str] | None = None) -> Rewrite:
    """Split the innermost body of ``chain`` into one copy of the nest per group.

    ``groups`` lists body child indices per output loop, in output order.
    """
    perfect_chain(tree, chain, "distribute")
    bands = [get(tree.root, p) for p in chain]
    body = bands[-1].body
    if distributed_ids is not None and len(distributed_ids) != len(groups):
        raise PreconditionViolated(
            f"distributed_ids needs {len(groups)} names, got {len(distributed_ids)}")
    removed = [b.name for b in bands]
    new_names: list[str | None] = []
    copies: list[Node] = []
    last = len(groups) - 1
    for g, members in enumerate(groups):
        inner = Seq(tuple(body.children[k] for k in members))
        names = []
        for d, b in enumerate(bands):
            if d == 0 and distributed_ids is not None:
                names.append((distributed_ids[g], TRANSFORM))
            elif g == last:
                names.append((b.name, b.origin))
            elif b.name is not None:
                names.append((f"{b.name}_{group_names[g]}", TRANSFORM))
            else:
                names.append((None, None))
        node: Node = inner
        for d in reversed(range(len(bands))):
            nm, origin = names[d]
            node = replace(bands[d], body=_seq_of(node), name=nm, origin=origin, pending=())
        copies.append(node)
        new_names.extend(nm for nm, _ in names if nm and nm not in removed)
    _check_new_names(tree, new_names, removed)
    new_root = splice(tree.root, chain[0], tuple(copies))
    introduced = tuple(list(distributed_ids or []) + [n for n in new_names if n not in (distributed_ids or [])])
    return Rewrite(tree.with_root(new_root), chain[0], tuple(dict.fromkeys(introduced)))


def _siblings(paths: Sequence[Path], what: str) -> tuple[Path, list[int]]:
    if len(paths) < 2:
        raise PreconditionViolated(f"{what} needs at least two loops")
    parent = paths[0][:-1]
    idx = [p[-1] for p in paths]
    if any(p[:-1] != parent for p in paths):
        raise PreconditionViolated(f"{what} needs sibling loops")
    if idx != list(range(idx[0], idx[0] + len(idx))):
        raise PreconditionViolated(f"{what} needs adjacent loops listed in program order")
    return parent, idx


def fuse(tree: LoopTree, paths: Sequence[Path], fused_id: str | None = None) -> tuple[Rewrite, Path, list[int]]:
    """Merge adjacent sibling loops with identical iteration spaces.

    Also returns the fused body path and the body-index to source-loop map for
    the legality check.
    """
    parent, idx = _siblings(paths, "fuse")
    bands = [_band(tree, p, "fuse") for p in paths]
    first = bands[0]
    for b in bands[1:]:
        if (b.lb, b.ub, b.step) != (first.lb, first.ub, first.step):
            raise PreconditionViolated(
                f"loops '{first.name or first.counter}' and '{b.name or b.counter}' have different "
                f"iteration spaces; shift or scale them first")
    _check_new_names(tree, [fused_id], [b.name for b in bands])
    taken = symbols(tree)
    kids: list[Node] = []
    groups: list[int] = []
    for g, b in enumerate(bands):
        body: Node = b.body
        if g > 0:
            body = _rename_counters(body, {first.counter}, taken)
            body = substitute_node(body, {b.counter: Var(first.counter)})
        kids.extend(body.children)
        groups.extend([g] * len(body.children))
    annotations = tuple(dict.fromkeys(a for b in bands for a in b.annotations))
    fused = replace(first, body=Seq(tuple(kids)),
                    name=fused_id if fused_id is not None else first.name,
                    origin=TRANSFORM if fused_id is not None else first.origin,
                    annotations=annotations, pending=())
    parent_seq = get(tree.root, parent)
    children = parent_seq.children[:idx[0]] + (fused,) + parent_seq.children[idx[-1] + 1:]
    new_root = replace_at(tree.root, parent, Seq(children))
    fpath = parent + (idx[0],)
    return (Rewrite(tree.with_root(new_root), fpath, (fused_id,) if fused_id else ()),
            fpath + (0,), groups)


def reorder(tree: LoopTree, seq: Path, new_pos: Sequence[int]) -> Rewrite:
    s = get(tree.root, seq)
    if not isinstance(s, Seq) or sorted(new_pos) != list(range(len(s.children))):
        raise PreconditionViolated("reorder needs a permutation of sibling constructs")
    kids: list[Node | None] = [None] * len(s.children)
    for k, c in enumerate(s.children):
        kids[new_pos[k]] = c
    new = tree.with_root(replace_at(tree.root, seq, Seq(tuple(kids))))
    return Rewrite(new, None)


def concatenate(tree: LoopTree, paths: Sequence[Path], concatenated_id: str | None = None) -> Rewrite:
    if len(paths) == 1:
        b = _band(tree, paths[0], "concatenate")
        if concatenated_id is None:
            return Rewrite(tree, paths[0])
        _check_new_names(tree, [concatenated_id], [b.name])
        return Rewrite(tree.with_root(replace_at(tree.root, paths[0],
                                                 replace(b, name=concatenated_id, origin=TRANSFORM))),
                       paths[0], (concatenated_id,))
    parent, idx = _siblings(paths, "concatenate")
    bands = [_band(tree, p, "concatenate") for p in paths]
    if any(b.step != 1 for b in bands):
        raise PreconditionViolated("concatenate needs loops with unit step")
    _check_new_names(tree, [concatenated_id], [b.name for b in bands])
    taken = symbols(tree)
    first = bands[0]
    ctr = first.counter
    c = Var(ctr)
    start = first.lb
    offset: Expr = Num(0)
    pieces: list[tuple[Expr, Seq]] = []
    for g, b in enumerate(bands):
        ext = _extent(tree, b)
        # original counter = c - start - offset + lb
        value = simplify(c - start - offset + b.lb)
        body: Node = b.body
        if g > 0:
            body = _rename_counters(body, {ctr}, taken)
        body = substitute_node(body, {b.counter: value})
        offset = simplify(offset + ext)
        pieces.append((simplify(start + offset), body))
    tail: Seq = pieces[-1][1]
    for bound, body in reversed(pieces[:-1]):
        tail = Seq((Guard(Cond("<", c, bound), body, tail, first.line),))
    annotations = tuple(dict.fromkeys(a for b in bands for a in b.annotations))
    band = Band(ctr, start, simplify(start + offset), 1, tail,
                concatenated_id if concatenated_id is not None else first.name,
                TRANSFORM if concatenated_id is not None else first.origin,
                annotations, (), first.line)
    parent_seq = get(tree.root, parent)
    children = parent_seq.children[:idx[0]] + (band,) + parent_seq.children[idx[-1] + 1:]
    new_root = replace_at(tree.root, parent, Seq(children))
    return Rewrite(tree.with_root(new_root), parent + (idx[0],),
                   (concatenated_id,) if concatenated_id else ())


# -- re-indexing: reverse, shift, scale --------------------------------------------

def reverse(tree: LoopTree, path: Path) -> Rewrite:
    b = _band(tree, path, "reverse")
    c = Var(b.counter)
    if b.step == 1:
        lb, ub = simplify(1 - b.ub), simplify(1 - b.lb)
    else:
        last = simplify(b.lb + b.step * BinOp("/", simplify(b.ub - b.lb - 1), Num(b.step)))
        lb, ub = simplify(-last), simplify(1 - b.lb)
    body = substitute_node(b.body, {b.counter: simplify(-c)})
    new = replace(b, lb=lb, ub=ub, body=body)
    return Rewrite(tree.with_root(replace_at(tree.root, path, new)), path)


def shift(tree: LoopTree, path: Path, offset: Expr) -> Rewrite:
    b = _band(tree, path, "shift")
    offset = simplify(offset)
    bad = free_vars(offset) - set(tree.params)
    if bad:
        raise PreconditionViolated(f"shift offset may only use parameters, found {', '.join(sorted(bad))}")
    if try_constant(offset) == 0:
        return Rewrite(tree, path)
    c = Var(b.counter)
    body = substitute_node(b.body, {b.counter: simplify(c - offset)})
    new = replace(b, lb=simplify(b.lb + offset), ub=simplify(b.ub + offset), body=body)
    return Rewrite(tree.with_root(replace_at(tree.root, path, new)), path)


def scale(tree: LoopTree, path: Path, factor: int) -> Rewrite:
    b = _band(tree, path, "scale")
    if factor < 1:
        raise PreconditionViolated("scale factor must be a positive integer")
    if factor == 1:
        return Rewrite(tree, path)
    c = Var(b.counter)
    body = substitute_node(b.body, {b.counter: simplify(BinOp("/", c, Num(factor)))})
    new = replace(b, lb=simplify(b.lb * factor), ub=simplify(b.ub * factor - (factor - 1)),
                  step=b.step * factor, body=body)
    return Rewrite(tree.with_root(replace_at(tree.root, path, new)), path)


# -- split, peel, unroll -------------------------------------------------------------

def split_threshold(b: Band, pred: Cond) -> Expr:
    """Smallest counter value from which on ``pred`` is true (or false)."""
    diff = simplify(BinOp("-", pred.left, pred.right))
    from ..expr import atoms_linear
    lin = atoms_linear(diff, lambda a: b.counter not in free_vars(a))
    if lin is None:
        raise PreconditionViolated("split predicate must be affine in the loop counter")
    const, terms = lin
    a = terms.pop(b.counter, 0)
    if a == 0:
        raise PreconditionViolated(f"split predicate does not depend on counter '{b.counter}'")
    from ..expr import _Lin, _rebuild  # canonical rebuild of the remainder
    rest = _rebuild(_Lin(const, terms))
    op = pred.op
    if a < 0:
        a, rest = -a, simplify(-rest)
        op = {"<": ">", "<=": ">=", ">": "<", ">=": "<="}[op]
    neg = simplify(-rest)
    # a*c + rest (op) 0
    if op in (">", "<="):
        return simplify(BinOp("/", neg, Num(a)) + 1)
    return simplify(BinOp("/", simplify(neg + (a - 1)), Num(a)))


def split_at(tree: LoopTree, path: Path, t: Expr) -> Rewrite:
    b = _band(tree, path, "split")
    t = simplify(t)
    if b.step == 1:
        cut = _tight(tree, Call("max", (t, b.lb)))
    else:
        span = simplify(Call("max", (t, b.lb)) - b.lb)
        cut = _tight(tree, b.lb + b.step * BinOp("/", simplify(span + (b.step - 1)), Num(b.step)))
    first_ub = _tight(tree, Call("min", (cut, b.ub)))
    first = replace(b, ub=first_ub, pending=())
    second = strip_names(replace(b, lb=cut, pending=()))
    out = []
    for loop in (first, second):
        if not provably_empty(tree, loop.lb, loop.ub):
            out.append(loop)
    if first not in out and out:
        out[0] = replace(out[0], name=b.name, origin=b.origin)
    new_root = splice(tree.root, path, tuple(out))
    return Rewrite(tree.with_root(new_root), path if out else None)


def split(tree: LoopTree, path: Path, pred: Cond) -> Rewrite:
    b = _band(tree, path, "split")
    return split_at(tree, path, split_threshold(b, pred))


def peel(tree: LoopTree, path: Path, count: int, side: str = "begin") -> Rewrite:
    b = _band(tree, path, "peel")
    if side == "begin":
        t = simplify(b.lb + b.step * count)
    else:
        n = _extent(tree, b)
        t = simplify(b.lb + b.step * (n - count))
    return split_at(tree, path, t)


def _copies(body: Seq, counter: str, step: int, factor: int, base: Expr | None = None) -> list[Node]:
    out: list[Node] = []
    for k in range(factor):
        value = simplify(Var(counter) + k * step) if base is None else simplify(base + k * step)
        copy = substitute_node(body, {counter: value}) if (k or base is not None) else body
        if k:
            copy = strip_names(copy)
        out.extend(copy.children)
    return out


def unroll(tree: LoopTree, path: Path, factor: int) -> Rewrite:
    b = _band(tree, path, "unroll")
    if factor < 2:
        raise PreconditionViolated("unroll factor must be at least 2")
    s = b.step
    main = replace(b, ub=simplify(b.ub - s * (factor - 1)), step=s * factor,
                   body=Seq(tuple(_copies(b.body, b.counter, s, factor))), pending=())
    span = _tight(tree, Call("max", (simplify(b.ub - b.lb), Num(0))))
    start = simplify(b.lb + (s * factor) * BinOp("/", simplify(span + (s - 1)), Num(s * factor)))
    rest = strip_names(replace(b, lb=start, pending=()))
    out: list[Node] = [main]
    if not provably_empty(tree, rest.lb, rest.ub):
        out.append(rest)
    new_root = splice(tree.root, path, tuple(out))
    return Rewrite(tree.with_root(new_root), path)


def unroll_full(tree: LoopTree, path: Path) -> Rewrite:
    b = _band(tree, path, "unroll full")
    lb, ub = try_constant(b.lb), try_constant(b.ub)
    if lb is None or ub is None:
        raise PreconditionViolated("full unrolling needs compile-time loop bounds")
    values = list(range(lb, ub, b.step))
    out: list[Node] = []
    for k, v in enumerate(values):
        copy = substitute_node(b.body, {b.counter: Num(v)})
        if k:
            copy = strip_names(copy)
        out.extend(copy.children)
    new_root = splice(tree.root, path, tuple(out))
    return Rewrite(tree.with_root(new_root), None)


def unrollandjam(tree: LoopTree, path: Path, factor: int) -> Rewrite:
    b = _band(tree, path, "unrollandjam")
    if factor < 2:
        raise PreconditionViolated("unroll-and-jam factor must be at least 2")
    if len(b.body.children) != 1 or not isinstance(b.body.children[0], Band):
        raise PreconditionViolated("unroll-and-jam needs a loop whose body is a single inner loop")
    inner = b.body.children[0]
    if b.counter in free_vars(inner.lb) | free_vars(inner.ub):
        raise PreconditionViolated("inner loop bounds depend on the unrolled loop")
    if b.counter == inner.counter or b.counter in counters_in(inner.body):
        raise PreconditionViolated("inner loops reuse the outer counter")
    s = b.step
    jammed = replace(inner, body=Seq(tuple(_copies(inner.body, b.counter, s, factor))), pending=())
    main = replace(b, ub=simplify(b.ub - s * (factor - 1)), step=s * factor,
                   body=Seq((jammed,)), pending=())
    span = _tight(tree, Call("max", (simplify(b.ub - b.lb), Num(0))))
    start = simplify(b.lb + (s * factor) * BinOp("/", simplify(span + (s - 1)), Num(s * factor)))
    rest = strip_names(replace(b, lb=start, pending=()))
    out: list[Node] = [main]
    if not provably_empty(tree, rest.lb, rest.ub):
        out.append(rest)
    return Rewrite(tree.with_root(splice(tree.root, path, tuple(out))), path)
