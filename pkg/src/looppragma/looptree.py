"""Schedule-tree-like IR: bands (loops), sequences, statement leaves, sections, guards.

Nodes are immutable; transformations build new trees.  A node is addressed by
a path of child indices from the root sequence.  Band, SectionMark and Guard
children live in nested sequences: step ``0`` enters a band/section body or a
guard's then-branch, step ``1`` a guard's else-branch.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Iterator, Mapping, Union

from .diagnostics import NameResolutionError
from .expr import (Cond, Expr, Ref, Var, evaluate, simplify, simplify_value,
                   substitute, substitute_cond, to_source)
from .frontend.ast import ArrayDecl, Assign, Block, ForLoop, If, Program, Stmt
from .frontend.directive import Directive
from . import nameres
from .nameres import IMPLICIT, NameTable

Path = tuple[int, ...]


@dataclass(frozen=True)
class Seq:
    children: tuple["Node", ...] = ()


@dataclass(frozen=True)
class Band:
    counter: str
    lb: Expr
    ub: Expr  # exclusive
    step: int
    body: Seq
    name: str | None = None
    origin: str | None = None
    annotations: tuple[Directive, ...] = ()
    pending: tuple[Directive, ...] = ()
    line: int | None = field(default=None, compare=False)


@dataclass(frozen=True)
class Leaf:
    label: str
    target: Ref
    op: str
    value: Expr
    instance: tuple[Expr, ...] = ()
    annotations: tuple[Directive, ...] = ()
    line: int | None = field(default=None, compare=False)

    def accesses(self) -> list["AccessRef"]:
        from .expr import refs
        out = [AccessRef(r.array, r.index, "read") for r in refs(self.value)]
        for r in self.target.index:
            out.extend(AccessRef(x.array, x.index, "read") for x in refs(r))
        if self.op == "=":
            out.append(AccessRef(self.target.array, self.target.index, "write"))
        else:
            out.append(AccessRef(self.target.array, self.target.index, "read", reduction=self.op))
            out.append(AccessRef(self.target.array, self.target.index, "write", reduction=self.op))
        return out


@dataclass(frozen=True)
class SectionMark:
    name: str | None
    body: Seq
    annotations: tuple[Directive, ...] = ()
    line: int | None = field(default=None, compare=False)


@dataclass(frozen=True)
class Guard:
    cond: Cond
    then: Seq
    orelse: Seq | None = None
    line: int | None = field(default=None, compare=False)


Node = Union[Seq, Band, Leaf, SectionMark, Guard]


@dataclass(frozen=True)
class AccessRef:
    array: str
    subscripts: tuple[Expr, ...]
    mode: str  # "read" | "write"
    reduction: str | None = None  # compound operator when part of `+=` etc.


@dataclass(frozen=True)
class LoopTree:
    root: Seq
    params: tuple[str, ...] = ()
    arrays: tuple[ArrayDecl, ...] = ()
    directives: tuple[Directive, ...] = ()
    ambiguous: tuple[tuple[str, tuple[int | None, ...]], ...] = ()
    orphans: tuple[Directive, ...] = ()
    file: str = field(default="<input>", compare=False)

    def array(self, name: str) -> ArrayDecl:
        for a in self.arrays:
            if a.name == name:
                return a
        raise KeyError(name)

    def node(self, path: Path) -> Node:
        return get(self.root, path)

    def with_root(self, root: Seq) -> "LoopTree":
        return replace(self, root=root)

    def names(self) -> NameTable:
        return nameres.table_from_tree(self)


# -- path helpers -------------------------------------------------------------

def child_seqs(node: Node) -> tuple[Seq, ...]:
    if isinstance(node, (Band, SectionMark)):
        return (node.body,)
    if isinstance(node, Guard):
        return (node.then,) if node.orelse is None else (node.then, node.orelse)
    return ()


def get(root: Node, path: Path) -> Node:
    node = root
    for k in path:
        if isinstance(node, Seq):
            node = node.children[k]
        else:
            node = child_seqs(node)[k]
    return node


def _with_child(node: Node, k: int, new: Node) -> Node:
    if isinstance(node, Seq):
        kids = list(node.children)
        kids[k] = new
        return Seq(tuple(kids))
    if isinstance(node, (Band, SectionMark)):
        return replace(node, body=new)
    if isinstance(node, Guard):
        return replace(node, then=new) if k == 0 else replace(node, orelse=new)
    raise ValueError(f"cannot descend into {type(node).__name__}")


def replace_at(root: Node, path: Path, new: Node) -> Node:
    if not path:
        return new
    head, rest = path[0], path[1:]
    if isinstance(root, Seq):
        child = root.children[head]
    else:
        child = child_seqs(root)[head]
    return _with_child(root, head, replace_at(child, rest, new))


def splice(root: Seq, path: Path, nodes: tuple[Node, ...]) -> Seq:
    """Replace the node at ``path`` (a sequence element) by ``nodes``."""
    parent_path, k = path[:-1], path[-1]
    parent = get(root, parent_path)
    if not isinstance(parent, Seq):
        raise ValueError("splice target must be a sequence element")
    kids = parent.children[:k] + tuple(nodes) + parent.children[k + 1:]
    return replace_at(root, parent_path, Seq(kids))


def walk(node: Node, prefix: Path = ()) -> Iterator[tuple[Path, Node]]:
    """Pre-order traversal yielding (path, node); sequences are not yielded."""
    if isinstance(node, Seq):
        for k, c in enumerate(node.children):
            yield from walk(c, prefix + (k,))
        return
    yield prefix, node
    for k, s in enumerate(child_seqs(node)):
        yield from walk(s, prefix + (k,))


def bands_on_path(root: Node, path: Path) -> list[tuple[Path, Band]]:
    """Bands strictly enclosing the node at ``path``, outermost first."""
    out = []
    node = root
    for depth, k in enumerate(path):
        if isinstance(node, Band):
            out.append((path[:depth], node))
        node = node.children[k] if isinstance(node, Seq) else child_seqs(node)[k]
    return out


def leaves(root: Node) -> list[tuple[Path, Leaf]]:
    return [(p, n) for p, n in walk(root) if isinstance(n, Leaf)]


def map_tree(node: Node, fn: Callable[[Node], Node | None]) -> Node:
    """Bottom-up rebuild; ``fn`` may return a replacement or None to keep."""
    if isinstance(node, Seq):
        new = Seq(tuple(map_tree(c, fn) for c in node.children))
    elif isinstance(node, Band):
        new = replace(node, body=map_tree(node.body, fn))
    elif isinstance(node, SectionMark):
        new = replace(node, body=map_tree(node.body, fn))
    elif isinstance(node, Guard):
        new = replace(node, then=map_tree(node.then, fn),
                      orelse=None if node.orelse is None else map_tree(node.orelse, fn))
    else:
        new = node
    out = fn(new)
    return new if out is None else out


def substitute_node(node: Node, mapping: Mapping[str, Expr]) -> Node:
    """Substitute counters throughout a subtree (bounds, subscripts, instances, guards)."""
    if not mapping:
        return node

    def fn(n: Node):
        if isinstance(n, Band):
            return replace(n, lb=substitute(n.lb, mapping), ub=substitute(n.ub, mapping))
        if isinstance(n, Leaf):
            target = substitute(n.target, mapping)
            return replace(n, target=target, value=substitute(n.value, mapping),
                           instance=tuple(substitute(e, mapping) for e in n.instance))
        if isinstance(n, Guard):
            return replace(n, cond=substitute_cond(n.cond, mapping))
        return None

    return map_tree(node, fn)


def counters_in(node: Node) -> set[str]:
    return {n.counter for _, n in walk(node) if isinstance(n, Band)}


def strip_names(node: Node) -> Node:
    """Copies made by unrolling and splitting drop the names inside them."""

    def fn(n: Node):
        if isinstance(n, Band) and n.name is not None:
            return replace(n, name=None, origin=None)
        if isinstance(n, SectionMark) and n.name is not None:
            return replace(n, name=None)
        return None

    return map_tree(node, fn)


def is_perfect_chain(root: Node, path: Path, depth: int) -> list[Path] | None:
    """Paths of ``depth`` perfectly nested bands starting at ``path``."""
    out = []
    p = path
    for d in range(depth):
        node = get(root, p)
        if not isinstance(node, Band):
            return None
        out.append(p)
        if d < depth - 1:
            if len(node.body.children) != 1:
                return None
            p = p + (0, 0)
    return out


# -- AST <-> tree -------------------------------------------------------------

def build_tree(program: Program, names: NameTable | None = None) -> LoopTree:
    names = names if names is not None else nameres.assign_names(program)
    by_path = {e.handle: e for e in names.entries.values()}
    used_labels = {s.label for s in program.walk() if isinstance(s, Assign) and s.label}
    counter = [0]
    loop_directives: list[Directive] = []
    orphans: list[Directive] = []

    def next_label() -> str:
        while f"S{counter[0]}" in used_labels:
            counter[0] += 1
        lab = f"S{counter[0]}"
        counter[0] += 1
        return lab

    def split_pragmas(pragmas, scope: Path, is_loop: bool):
        pending, annots = [], []
        for d in pragmas:
            if d.kind == "id":
                continue
            if d.target_kind == "loop":
                _check_scope(d, scope, names)
                loop_directives.append(d)
            elif d.category in ("transform", "unsupported"):
                (pending if is_loop else orphans).append(d)
            else:
                annots.append(d)
        return tuple(pending), tuple(annots)

    def conv_seq(stmts, prefix: Path, counters: tuple[str, ...], scope: Path) -> Seq:
        out: list[Node] = []
        for k, s in enumerate(stmts):
            out.extend(conv(s, prefix + (k,), counters, scope))
        return Seq(tuple(out))

    def conv(s: Stmt, path: Path, counters, scope: Path) -> list[Node]:
        if isinstance(s, ForLoop):
            pending, annots = split_pragmas(s.pragmas, scope, True)
            entry = by_path.get(path)
            body = conv_seq((s.body,), path, counters + (s.counter,), path)
            band = Band(s.counter, simplify(s.lb), simplify(s.ub), s.step, body,
                        entry.name if entry else None, entry.origin if entry else None,
                        annots, pending, s.line)
            return [band]
        if isinstance(s, Block):
            pending, annots = split_pragmas(s.pragmas, scope, False)
            inner = conv_seq(s.body, path, counters, scope)
            for d in s.trailing:
                if d.target_kind == "loop":
                    _check_scope(d, scope, names)
                    loop_directives.append(d)
                elif d.category in ("transform", "unsupported"):
                    orphans.append(d)
                else:
                    raise NameResolutionError(f"'{d.kind}' is not followed by a construct", d.location)
            entry = by_path.get(path)
            if entry is not None or annots:
                return [SectionMark(entry.name if entry else None, inner, annots, s.line)]
            return list(inner.children)
        if isinstance(s, If):
            split_pragmas(s.pragmas, scope, False)
            then = conv_seq((s.then,), path + (0,), counters, scope)
            orelse = None if s.orelse is None else conv_seq((s.orelse,), path + (1,), counters, scope)
            return [Guard(Cond(s.cond.op, simplify(s.cond.left), simplify(s.cond.right)),
                          then, orelse, s.line)]
        if isinstance(s, Assign):
            _, annots = split_pragmas(s.pragmas, scope, False)
            target = simplify_value(s.target)
            return [Leaf(s.label or next_label(), target, s.op, simplify_value(s.value),
                         tuple(Var(c) for c in counters), annots, s.line)]
        raise TypeError(s)

    root = conv_seq(program.body, (), (), ())
    for d in program.trailing:
        if d.target_kind == "loop":
            loop_directives.append(d)
        elif d.category in ("transform", "unsupported"):
            orphans.append(d)
        else:
            raise NameResolutionError(f"'{d.kind}' is not followed by a construct", d.location)
    ambiguous = tuple(sorted(names.ambiguous.items()))
    arrays = tuple(replace(a, dims=tuple(simplify(x) for x in a.dims)) for a in program.arrays)
    return LoopTree(root, program.params, arrays, tuple(loop_directives), ambiguous,
                    tuple(orphans), program.file)


def _check_scope(d: Directive, scope: Path, names: NameTable) -> None:
    """A nested loop(..) directive may only name source loops inside its enclosing construct."""
    if not scope:
        return
    for n in d.targets:
        entry = names.entries.get(n)
        if entry is not None and (entry.handle[:len(scope)] != scope or len(entry.handle) <= len(scope)):
            raise NameResolutionError(
                f"directive naming '{n}' must be placed before the outermost construct "
                f"containing its targets", d.location)


def _following(d: Directive) -> Directive:
    return replace(d, target_kind="following", targets=())


def _id_pragma(name: str, sentinel: str = "omp") -> Directive:
    from .expr import Var as _V
    return Directive("id", "following", (), (("id", (_V(name),)),), sentinel=sentinel)


def emit_ast(tree: LoopTree) -> Program:
    """Canonical syntax tree for a loop tree (pending directives are kept)."""

    def stmt_of(seq: Seq) -> Stmt:
        stmts = tuple(conv(c) for c in seq.children)
        if len(stmts) == 1 and not (isinstance(stmts[0], Block) and stmts[0].pragmas):
            return stmts[0]
        return Block(stmts)

    def conv(n: Node) -> Stmt:
        if isinstance(n, Band):
            pragmas = tuple(_following(d) for d in n.annotations) + n.pending
            if n.name is not None and n.origin != IMPLICIT:
                pragmas += (_id_pragma(n.name),)
            return ForLoop(n.counter, n.lb, n.ub, n.step, stmt_of(n.body), pragmas, n.line)
        if isinstance(n, SectionMark):
            pragmas = tuple(_following(d) for d in n.annotations)
            if n.name is not None:
                pragmas += (_id_pragma(n.name),)
            return Block(tuple(conv(c) for c in n.body.children), pragmas, (), n.line)
        if isinstance(n, Guard):
            return If(n.cond, stmt_of(n.then), None if n.orelse is None else stmt_of(n.orelse),
                      (), n.line)
        if isinstance(n, Leaf):
            return Assign(n.target, n.op, n.value, n.label,
                          tuple(_following(d) for d in n.annotations), n.line)
        raise TypeError(n)

    body = tuple(conv(c) for c in tree.root.children)
    trailing = tree.directives + tree.orphans
    return Program(tree.params, tree.arrays, body, trailing, tree.file)


def iteration_count(band: Band, bindings: Mapping[str, int] | None = None) -> int:
    env = dict(bindings or {})
    lb = evaluate(band.lb, env)
    ub = evaluate(band.ub, env)
    return max(0, -((lb - ub) // band.step))


def dump_ir(tree: LoopTree) -> str:
    """Indented one-node-per-line rendering."""
    lines: list[str] = []

    def ann(ds) -> str:
        return "".join(f" @{d.text()}" for d in ds)

    def rec(node: Node, depth: int) -> None:
        pad = "  " * depth
        if isinstance(node, Seq):
            for c in node.children:
                rec(c, depth)
            return
        if isinstance(node, Band):
            name = f" name={node.name}({node.origin})" if node.name else ""
            pend = "".join(f" pending[{d.text()}]" for d in node.pending)
            lines.append(f"{pad}Band {node.counter} = {to_source(node.lb)} .. {to_source(node.ub)} "
                         f"step {node.step}{name}{ann(node.annotations)}{pend}")
            rec(node.body, depth + 1)
        elif isinstance(node, SectionMark):
            lines.append(f"{pad}Section {node.name or '-'}{ann(node.annotations)}")
            rec(node.body, depth + 1)
        elif isinstance(node, Guard):
            lines.append(f"{pad}If {node.cond}")
            rec(node.then, depth + 1)
            if node.orelse is not None:
                lines.append(f"{pad}Else")
                rec(node.orelse, depth + 1)
        elif isinstance(node, Leaf):
            inst = ", ".join(to_source(e) for e in node.instance)
            lines.append(f"{pad}Leaf {node.label}: {to_source(node.target)} {node.op} "
                         f"{to_source(node.value)}  [{inst}]{ann(node.annotations)}")

    rec(tree.root, 0)
    return "\n".join(lines)


def alpha_equal(a: Node, b: Node) -> bool:
    """Structural equality up to renaming of loop counters, labels and loop names."""
    return _alpha(a, b, {}, {})


def _alpha(a: Node, b: Node, ma: dict, mb: dict) -> bool:
    if type(a) is not type(b):
        return False
    if isinstance(a, Seq):
        return len(a.children) == len(b.children) and all(
            _alpha(x, y, ma, mb) for x, y in zip(a.children, b.children))
    if isinstance(a, Band):
        ma2 = {**ma, a.counter: f"#c{len(ma)}"}
        mb2 = {**mb, b.counter: f"#c{len(mb)}"}
        return (a.step == b.step and _ren(a.lb, ma) == _ren(b.lb, mb)
                and _ren(a.ub, ma) == _ren(b.ub, mb) and _alpha(a.body, b.body, ma2, mb2))
    if isinstance(a, SectionMark):
        return _alpha(a.body, b.body, ma, mb)
    if isinstance(a, Guard):
        if a.cond.op != b.cond.op or _ren(a.cond.left, ma) != _ren(b.cond.left, mb) \
                or _ren(a.cond.right, ma) != _ren(b.cond.right, mb):
            return False
        if (a.orelse is None) != (b.orelse is None):
            return False
        return _alpha(a.then, b.then, ma, mb) and (
            a.orelse is None or _alpha(a.orelse, b.orelse, ma, mb))
    if isinstance(a, Leaf):
        return (a.op == b.op and _ren(a.target, ma) == _ren(b.target, mb)
                and _ren(a.value, ma) == _ren(b.value, mb))
    return a == b


def _ren(e: Expr, m: dict) -> Expr:
    return substitute(e, {k: Var(v) for k, v in m.items()})
