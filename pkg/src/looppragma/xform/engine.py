"""Directive scheduling: stacked directives, loop(...)-targeted directives, policy."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Sequence

from .. import deps
from ..deps import PROVEN, AssumeSet, DependenceGraph, Verdict
from ..diagnostics import (Level, LoopPragmaError, NameResolutionError, PreconditionViolated,
                           TransformError, UnknownName, UnsupportedTransformation)
from ..expr import Cond
from ..frontend.directive import Directive
from ..looptree import (Band, Leaf, LoopTree, Node, Path, SectionMark, Seq, get,
                        is_perfect_chain, replace_at)
from ..nameres import NameTable, resolve_targets
from . import transforms as T
from .plan import (ABORT, APPLIED, ERROR, PROCEED, RECORDED, REORDERING, SKIPPED,
                   PlannedTransform, TransformReport, apply_policy)

Analyzer = Callable[[LoopTree], DependenceGraph]

SINGLE_LOOP = {"stripmine", "block", "reverse", "shift", "scale", "split", "peel",
               "unroll", "unrollandjam"}


@dataclass
class ApplyResult:
    tree: LoopTree
    reports: list[TransformReport] = field(default_factory=list)
    aborted: bool = False
    reordering: bool = False  # some applied transformation may reorder instances

    @property
    def exit_status(self) -> int:
        if self.aborted:
            return 2
        if any(r.level != Level.INFO for r in self.reports):
            return 1
        return 0


class _Abort(Exception):
    pass


@dataclass
class _Step:
    rewrite: T.Rewrite
    verdict: Verdict
    planned: PlannedTransform


class Engine:
    def __init__(self, analyzer: Analyzer | None = None, assoc_reductions: bool = False,
                 policy_override: bool | None = None):
        self.analyzer = analyzer or deps.analyze
        self.assoc = assoc_reductions
        self.policy_override = policy_override
        self.reports: list[TransformReport] = []
        self.reordering = False

    # -- entry point ----------------------------------------------------------

    def run(self, tree: LoopTree, extra: Sequence[Directive] = ()) -> ApplyResult:
        try:
            for d in tree.orphans:
                self._error(self._policy(d), PreconditionViolated(
                    f"'{d.kind}' is not followed by a loop"))
            tree = replace(tree, orphans=())
            tree = self._stacks(tree)
            queue = list(tree.directives) + list(extra)
            tree = replace(tree, directives=())
            tree = self._targeted(tree, queue)
        except _Abort:
            return ApplyResult(tree, self.reports, True, self.reordering)
        tree.names()  # injectivity
        return ApplyResult(tree, self.reports, False, self.reordering)

    def _policy(self, d: Directive) -> Directive:
        if self.policy_override is None:
            return d
        return d.with_policy(replace(d.policy, assert_=self.policy_override))

    # -- untargeted stacks, innermost anchors first ---------------------------------

    def _stacks(self, tree: LoopTree) -> LoopTree:
        while True:
            found = _first_pending(tree.root)
            if found is None:
                return tree
            path, band = found
            tree = tree.with_root(replace_at(tree.root, path, replace(band, pending=())))
            current: Path | None = path
            for d in reversed(band.pending):
                d = self._policy(d)
                if current is None:
                    self._error(d, PreconditionViolated(
                        f"'{d.kind}' has no loop to apply to: the directive below it produced none"))
                    continue
                tree, current = self._apply(tree, d, current)

    # -- loop(...)-targeted directives, in textual order ------------------------------

    def _targeted(self, tree: LoopTree, queue: list[Directive]) -> LoopTree:
        pending = [self._policy(d) for d in queue]
        while pending:
            deferred = []
            progress = False
            for d in pending:
                try:
                    tree, _ = self._apply(tree, d, None)
                    progress = True
                except UnknownName:
                    deferred.append(d)
            if not progress:
                d = deferred[0]
                table = tree.names()
                resolve_targets(d, table)  # raises the UnknownName for the first one
                raise UnknownName("unresolved loop name", d.location)
            pending = deferred
        return tree

    # -- one directive ------------------------------------------------------------------

    def _apply(self, tree: LoopTree, d: Directive, anchor: Path | None) -> tuple[LoopTree, Path | None]:
        handles = self._handles(tree, d)
        if d.category in ("annotation", "assume"):
            if not handles:
                handles = [anchor] if anchor is not None else []
            for h in handles:
                tree = _annotate(tree, h, d)
            self.reports.append(TransformReport(d, RECORDED, reason="annotation attached"))
            return tree, anchor
        if d.category == "naming":
            return tree, anchor
        try:
            if d.category == "unsupported":
                raise UnsupportedTransformation(f"'{d.kind}' is not supported by this tool")
            step = self._plan(tree, d, handles, anchor)
        except NameResolutionError:
            raise
        except TransformError as exc:
            self._error(d, exc)
            return tree, anchor
        decision, level = apply_policy(step.verdict, d.policy)
        v = step.verdict
        if decision == PROCEED:
            new = step.rewrite.tree
            new.names()
            if d.kind in REORDERING:
                self.reordering = True
            reason = v.reason
            if v.status != PROVEN:
                reason = f"applied under assume_safety despite: {v.reason}"
            self.reports.append(TransformReport(d, APPLIED, v.status, reason, v.witness,
                                                step.rewrite.introduced, level))
            return new, step.rewrite.primary
        if decision == ABORT:
            self.reports.append(TransformReport(d, ERROR, v.status, v.reason, v.witness, (), level))
            raise _Abort()
        why = "suggest_only: not applied" if d.policy.suggest_only else "not applied"
        self.reports.append(TransformReport(d, SKIPPED, v.status, f"{why}; {v.reason}", v.witness,
                                            (), level))
        return tree, anchor

    def _error(self, d: Directive, exc: LoopPragmaError) -> None:
        if d.policy.abort_on_failure:
            self.reports.append(TransformReport(d, ERROR, None, exc.message, None, (), Level.ERROR))
            raise _Abort()
        self.reports.append(TransformReport(d, ERROR, None, f"skipped: {exc.message}", None, (),
                                            Level.WARNING))

    def _handles(self, tree: LoopTree, d: Directive) -> list[Path]:
        if d.target_kind != "loop":
            return []
        return resolve_targets(d, tree.names())

    # -- planning -----------------------------------------------------------------------

    def _graph(self, tree: LoopTree) -> tuple[DependenceGraph, AssumeSet]:
        return self.analyzer(tree), AssumeSet.from_tree(tree, self.assoc)

    def _plan(self, tree: LoopTree, d: Directive, handles: list[Path], anchor: Path | None) -> _Step:
        kind = d.kind
        names = tree.names()

        def step(rw: T.Rewrite, verdict: Verdict, **params) -> _Step:
            targets = tuple(handles) if handles else ((anchor,) if anchor is not None else ())
            return _Step(rw, verdict, PlannedTransform(kind, targets, params, d.policy, rw.introduced))

        if kind in SINGLE_LOOP:
            loops = [h for h in handles] or ([anchor] if anchor is not None else [])
            if len(loops) != 1:
                raise PreconditionViolated(f"'{kind}' applies to exactly one loop, got {len(loops)}")
            path = loops[0]
            band = get(tree.root, path)
            if not isinstance(band, Band):
                raise PreconditionViolated(f"'{kind}' needs a loop")
            if kind == "stripmine":
                rw = T.stripmine(tree, path, d.int_clause("strip_size"), d.name_clause("pit_id"),
                                 d.name_clause("strip_id"))
                return step(rw, deps.proven(kind))
            if kind == "block":
                rw = T.block(tree, path, d.int_clause("pit_size"), d.name_clause("pit_id"),
                             d.name_clause("strip_id"))
                return step(rw, deps.proven(kind))
            if kind == "reverse":
                graph, assumes = self._graph(tree)
                v = deps.check_reverse(graph, path, assumes, tree)
                return step(T.reverse(tree, path), v, band=path)
            if kind == "shift":
                return step(T.shift(tree, path, d.clause("offset")[0]), deps.proven(kind))
            if kind == "scale":
                return step(T.scale(tree, path, d.int_clause("factor")), deps.proven(kind))
            if kind == "split":
                pred = d.clause("indices")[0]
                assert isinstance(pred, Cond)
                return step(T.split(tree, path, pred), deps.proven(kind))
            if kind == "peel":
                return step(T.peel(tree, path, d.int_clause("count"), d.name_clause("side") or "begin"),
                            deps.proven(kind))
            if kind == "unroll":
                factor = d.int_clause("factor")
                if factor is None:
                    return step(T.unroll_full(tree, path), deps.proven(kind))
                return step(T.unroll(tree, path, factor), deps.proven(kind))
            if kind == "unrollandjam":
                factor = d.int_clause("factor")
                graph, assumes = self._graph(tree)
                v = deps.check_unrollandjam(graph, path, factor, assumes, tree)
                return step(T.unrollandjam(tree, path, factor), v, band=path, factor=factor)
        if kind == "tile":
            sizes = d.int_list("sizes")
            chain = handles or _chain_from(tree, anchor, len(sizes), kind)
            rw, mid_tree, mid, order = T.tile(tree, chain, sizes, d.names_clause("pit_ids"),
                                              d.names_clause("tile_ids"))
            graph, assumes = self._graph(mid_tree)
            perm = [mid[k] for k in order]
            v = deps.check_interchange(graph, mid, perm, assumes, mid_tree)
            return step(rw, v, chain=mid, perm=perm)
        if kind == "interchange":
            perm_names = d.names_clause("permutation")
            if handles:
                chain = handles
            else:
                depth = len(perm_names) if perm_names else 2
                chain = _chain_from(tree, anchor, depth, kind)
            T.perfect_chain(tree, chain, kind)
            chain_names = [_loop_name(tree, p) for p in chain]
            if perm_names:
                if sorted(perm_names) != sorted(chain_names):
                    raise PreconditionViolated(
                        f"permutation ({', '.join(perm_names)}) does not match the nest "
                        f"({', '.join(n or '?' for n in chain_names)})")
                order = [chain_names.index(n) for n in perm_names]
            else:
                order = list(reversed(range(len(chain))))
            graph, assumes = self._graph(tree)
            perm = [chain[k] for k in order]
            v = deps.check_interchange(graph, chain, perm, assumes, tree)
            return step(T.interchange(tree, chain, order), v, chain=chain, perm=perm)
        if kind == "coalesce":
            if handles:
                chain = handles
            else:
                chain = _maximal_chain(tree, anchor)
            return step(T.coalesce(tree, chain, d.name_clause("coalesced_id")), deps.proven(kind))
        if kind == "distribute":
            return self._distribute(tree, d, handles, anchor, names, step)
        if kind == "fuse":
            if not handles:
                raise PreconditionViolated("fuse needs loop(...) targets naming the loops to merge")
            rw, body, groups = T.fuse(tree, handles, d.name_clause("fused_id"))
            graph, assumes = self._graph(rw.tree)
            v = deps.check_fusion(graph, body, groups, assumes, rw.tree)
            return step(rw, v, body=body, groups=groups)
        if kind == "concatenate":
            if not handles:
                raise PreconditionViolated("concatenate needs loop(...) targets")
            return step(T.concatenate(tree, handles, d.name_clause("concatenated_id")),
                        deps.proven(kind))
        if kind == "reorder":
            return self._reorder(tree, d, handles, names, step)
        raise UnsupportedTransformation(f"'{kind}' is not supported by this tool")

    def _distribute(self, tree, d, handles, anchor, names: NameTable, step) -> _Step:
        loops = [h for h in handles if isinstance(get(tree.root, h), Band)]
        group_names = [n for n, h in zip(d.targets, handles)
                       if not isinstance(get(tree.root, h), Band)] if handles else []
        chain = loops or ([anchor] if anchor is not None else [])
        if not chain:
            raise PreconditionViolated("distribute needs a loop")
        T.perfect_chain(tree, chain, "distribute")
        if d.target_kind == "section":
            group_names = list(d.targets)
        if d.has("sections"):
            group_names = d.names_clause("sections")
        body_path = chain[-1] + (0,)
        body = get(tree.root, body_path)
        if group_names:
            groups = []
            covered = set()
            for n in group_names:
                h = names.lookup(n, d.location)
                if h.handle[:-1] != body_path:
                    raise PreconditionViolated(f"'{n}' is not directly inside the distributed loop body")
                if h.handle[-1] in covered:
                    raise PreconditionViolated(f"'{n}' appears twice in the partition")
                covered.add(h.handle[-1])
                groups.append([h.handle[-1]])
            if covered != set(range(len(body.children))):
                raise PreconditionViolated(
                    "the partition must cover every construct of the loop body; "
                    "give the remaining statements a section id")
        else:
            groups = [[k] for k in range(len(body.children))]
            group_names = [_child_name(c, k) for k, c in enumerate(body.children)]
        group_of_child = [0] * len(body.children)
        for g, members in enumerate(groups):
            for k in members:
                group_of_child[k] = g
        graph, assumes = self._graph(tree)
        v = deps.check_distribution(graph, chain[0], body_path, group_of_child, assumes, tree)
        rw = T.distribute(tree, chain, groups, group_names, d.names_clause("distributed_ids"))
        return step(rw, v, outer=chain[0], body=body_path, groups=group_of_child)

    def _reorder(self, tree, d, handles, names: NameTable, step) -> _Step:
        order_names = d.names_clause("order")
        order = [names.lookup(n, d.location).handle for n in order_names] if order_names else None
        members = handles or order
        if not members:
            raise PreconditionViolated("reorder needs the constructs to reorder")
        if order is None:
            order = list(reversed(members))
        seq = members[0][:-1]
        if any(p[:-1] != seq for p in members) or sorted(members) != sorted(order):
            raise PreconditionViolated("reorder needs sibling constructs, each named once")
        slots = sorted(p[-1] for p in members)
        n = len(get(tree.root, seq).children)
        new_pos = list(range(n))
        for slot, p in zip(slots, order):
            new_pos[p[-1]] = slot
        graph, assumes = self._graph(tree)
        v = deps.check_reorder(graph, seq, new_pos, assumes, tree)
        return step(T.reorder(tree, seq, new_pos), v, seq=seq, new_pos=new_pos)


# -- helpers --------------------------------------------------------------------------

def _post_order(node: Node, prefix: Path = ()):
    if isinstance(node, Seq):
        for k, c in enumerate(node.children):
            yield from _post_order(c, prefix + (k,))
        return
    from ..looptree import child_seqs
    for k, s in enumerate(child_seqs(node)):
        yield from _post_order(s, prefix + (k,))
    yield prefix, node


def _first_pending(root: Seq):
    for path, node in _post_order(root):
        if isinstance(node, Band) and node.pending:
            return path, node
    return None


def _chain_from(tree: LoopTree, anchor: Path | None, depth: int, what: str) -> list[Path]:
    if anchor is None:
        raise PreconditionViolated(f"'{what}' needs a loop")
    chain = is_perfect_chain(tree.root, anchor, depth)
    if chain is None:
        raise PreconditionViolated(f"'{what}' needs {depth} perfectly nested loops")
    return chain


def _maximal_chain(tree: LoopTree, anchor: Path | None) -> list[Path]:
    if anchor is None:
        raise PreconditionViolated("coalesce needs a loop")
    depth = 1
    while is_perfect_chain(tree.root, anchor, depth + 1) is not None:
        depth += 1
    return is_perfect_chain(tree.root, anchor, depth)


def _loop_name(tree: LoopTree, path: Path) -> str | None:
    node = get(tree.root, path)
    return node.name if isinstance(node, Band) else None


def _child_name(node: Node, k: int) -> str:
    if isinstance(node, (Band, SectionMark)) and node.name:
        return node.name
    if isinstance(node, Leaf):
        return node.label
    return str(k)


def _annotate(tree: LoopTree, path: Path, d: Directive) -> LoopTree:
    node = get(tree.root, path)
    ann = replace(d, target_kind="following", targets=())
    if isinstance(node, (Band, SectionMark, Leaf)):
        return tree.with_root(replace_at(tree.root, path, replace(node, annotations=node.annotations + (ann,))))
    return tree


def apply_all(tree: LoopTree, directives: Iterable[Directive] = (), *,
              analyzer: Analyzer | None = None, assoc_reductions: bool = False,
              policy_override: bool | None = None) -> ApplyResult:
    """Apply the tree's directives, then ``directives`` (loop-targeted), in composition order.

    Name errors (unknown, ambiguous, duplicate) raise; precondition failures and
    failed legality checks follow each directive's policy.
    """
    engine = Engine(analyzer, assoc_reductions, policy_override)
    return engine.run(tree, list(directives))
