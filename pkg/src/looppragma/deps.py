"""Data dependences between statement instances and transformation legality.

Each pair of accesses to the same array (one of them a write) is tested with
the ZIV, GCD and strong-SIV tests per subscript dimension.  Surviving
direction vectors over the common loops are then pruned with pit/strip
monotonicity (from strip-mining) and a Banerjee check over interval bounds,
where unbound parameters range over [1, inf).  What cannot be excluded is
kept, so the graph is a conservative over-approximation.  A violated
dependence becomes Disproven only once a concrete instance pair is found.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .expr import (BinOp, Call, Expr, Neg, Num, Var, atoms_linear, evaluate,
                   evaluate_cond, free_vars, provably_le, simplify, to_source)
from .looptree import (AccessRef, Band, Guard, Leaf, LoopTree, Node, Path, SectionMark,
                       Seq, bands_on_path, get, leaves, walk)

PROVEN, UNKNOWN, DISPROVEN = "Proven", "Unknown", "Disproven"
DIRS = ("<", "=", ">")


@dataclass(frozen=True)
class Dependence:
    source: Path
    sink: Path
    source_label: str
    sink_label: str
    array: str
    kind: str  # flow | anti | output
    levels: tuple[Path, ...]  # common bands, outermost first
    counters: tuple[str, ...]
    direction: tuple[str, ...]
    distance: tuple[int | None, ...]
    reduce: bool = False
    source_line: int | None = None
    sink_line: int | None = None

    @property
    def loop_independent(self) -> bool:
        return all(d == "=" for d in self.direction)

    @property
    def exact(self) -> bool:
        return all(d is not None for d in self.distance)

    def carried_index(self) -> int | None:
        for k, d in enumerate(self.direction):
            if d != "=":
                return k
        return None

    def carried_by(self) -> Path | None:
        k = self.carried_index()
        return None if k is None else self.levels[k]

    def distance_text(self) -> str:
        parts = []
        for d, s in zip(self.distance, self.direction):
            parts.append(str(d) if d is not None else s)
        return f"({', '.join(parts)})"

    def __str__(self) -> str:
        return (f"{self.source_label}:{self.source_line} -> {self.sink_label}:{self.sink_line} "
                f"{self.kind} distance{self.distance_text()}"
                + (f" on {','.join(self.counters)}" if self.counters else "")
                + f" [{self.array}]" + (" reduce" if self.reduce else ""))


@dataclass(frozen=True)
class DependenceGraph:
    deps: tuple[Dependence, ...]

    def __iter__(self):
        return iter(self.deps)

    def __len__(self) -> int:
        return len(self.deps)

    def between(self, a: Path, b: Path) -> list[Dependence]:
        return [d for d in self.deps if d.source == a and d.sink == b]

    def report(self) -> str:
        return "\n".join(str(d) for d in self.deps)


@dataclass(frozen=True)
class AssumeSet:
    parallel: frozenset[Path] = frozenset()
    min_depdist: tuple[tuple[Path, int], ...] = ()
    assoc_reductions: bool = False

    def min_dist(self, band: Path) -> int | None:
        for p, d in self.min_depdist:
            if p == band:
                return d
        return None

    @staticmethod
    def from_tree(tree: LoopTree, assoc_reductions: bool = False) -> "AssumeSet":
        par, dist = set(), []
        for path, node in walk(tree.root):
            if not isinstance(node, Band):
                continue
            for d in node.annotations:
                if d.kind in ("assume_parallel", "assume_coincident"):
                    par.add(path)
                elif d.kind == "assume_min_depdist":
                    v = d.int_clause("assume_min_depdist") or d.int_clause("distance")
                    dist.append((path, v))
        return AssumeSet(frozenset(par), tuple(dist), assoc_reductions)


@dataclass(frozen=True)
class Verdict:
    status: str
    reason: str = ""
    witness: str | None = None
    discharged: tuple[str, ...] = field(default=(), compare=False)

    def __str__(self) -> str:
        out = self.status
        if self.reason:
            out += f": {self.reason}"
        if self.witness:
            out += f" (witness {self.witness})"
        return out


# -- interval helpers for the bounded Banerjee check ---------------------------
# Bounds may be infinite: parameters range over [1, inf).

INF = math.inf
Interval = tuple  # (lo, hi), ints or +-inf


def _mul(c, x):
    return 0 if c == 0 or x == 0 else c * x


def _scale(c: int, r: Interval) -> Interval:
    a, b = _mul(c, r[0]), _mul(c, r[1])
    return (min(a, b), max(a, b))


def _add(x, y):
    v = x + y
    return None if v != v else v  # inf - inf


def _interval(e: Expr, env: Mapping[str, Interval]) -> Interval | None:
    if isinstance(e, Num):
        return e.value, e.value
    if isinstance(e, Var):
        return env.get(e.name)
    if isinstance(e, Neg):
        r = _interval(e.operand, env)
        return None if r is None else (-r[1], -r[0])
    if isinstance(e, Call) and e.func in ("min", "max"):
        rs = [_interval(a, env) for a in e.args]
        if any(r is None for r in rs):
            return None
        f = min if e.func == "min" else max
        return f(r[0] for r in rs), f(r[1] for r in rs)
    if isinstance(e, BinOp):
        a = _interval(e.left, env)
        b = _interval(e.right, env)
        if a is None or b is None:
            return None
        if e.op in "+-":
            if e.op == "-":
                b = (-b[1], -b[0])
            lo, hi = _add(a[0], b[0]), _add(a[1], b[1])
            return None if lo is None or hi is None else (lo, hi)
        if e.op == "*":
            cs = [_mul(x, y) for x in a for y in b]
            return min(cs), max(cs)
        if e.op in "/%" and b[0] == b[1] and b[0] > 0:
            c = b[0]
            if e.op == "/":
                return tuple(x if math.isinf(x) else x // c for x in a)
            if a[1] - a[0] < c and a[0] % c <= a[1] % c:
                return a[0] % c, a[1] % c
            return 0, c - 1
    return None


def _counter_ranges(bands: Sequence[tuple[Path, Band]], bindings: Mapping[str, int],
                    params: Sequence[str] = ()) -> list[Interval] | None | bool:
    """Intervals for each band counter; False when some band is provably empty."""
    env: dict[str, Interval] = {p: (1, INF) for p in params}
    env.update({k: (v, v) for k, v in bindings.items()})
    out = []
    for _, b in bands:
        lo = _interval(b.lb, env)
        hi = _interval(b.ub, env)
        if lo is None or hi is None:
            return None
        if hi[1] - 1 < lo[0]:
            return False
        r = (lo[0], hi[1] - 1)
        env[b.counter] = r
        out.append(r)
    return out


def _pair_extremes(a: int, b: int, r: Interval, d: str) -> tuple | None:
    """min/max of a*x - b*y over x, y in r with x (d) y; None when infeasible."""
    lo, hi = r
    if hi - lo < 1 and d != "=":
        return None
    if math.isinf(lo) or math.isinf(hi):
        # decouple: y = x + t (or x = y + t) with t in [1, hi - lo]; a sound superset
        if d == "=":
            return _scale(a - b, r)
        base = _scale(a - b, (lo, hi - 1))
        t = _scale(-b if d == "<" else a, (1, hi - lo))
        out = (_add(base[0], t[0]), _add(base[1], t[1]))
        return (-INF, INF) if None in out else out
    if d == "=":
        pts = [(lo, lo), (hi, hi)]
    elif d == "<":
        pts = [(lo, lo + 1), (lo, hi), (hi - 1, hi)]
    else:
        pts = [(lo + 1, lo), (hi, lo), (hi, hi - 1)]
    vals = [a * x - b * y for x, y in pts]
    return min(vals), max(vals)


# -- the analysis ----------------------------------------------------------------

@dataclass
class _Side:
    path: Path
    leaf: Leaf
    bands: list[tuple[Path, Band]]
    ranges: list[Interval] | None


def _dim_equation(src: Expr, snk: Expr, src_ctr: dict[str, str], snk_ctr: dict[str, str]):
    """``src - snk`` as (const, coeffs) over renamed counters and parameter atoms.

    Returns None when the dimension is not affine in the counters.
    """
    counters = set(src_ctr) | set(snk_ctr)

    def opaque(atom: Expr) -> bool:
        return not (free_vars(atom) & counters)

    a = atoms_linear(src, opaque)
    b = atoms_linear(snk, opaque)
    if a is None or b is None:
        return None
    coeffs: dict[object, int] = {}
    for k, v in a[1].items():
        key = src_ctr.get(k, ("p", k)) if isinstance(k, str) else ("p", to_source(k))
        coeffs[key] = coeffs.get(key, 0) + v
    for k, v in b[1].items():
        key = snk_ctr.get(k, ("p", k)) if isinstance(k, str) else ("p", to_source(k))
        coeffs[key] = coeffs.get(key, 0) - v
    return a[0] - b[0], {k: v for k, v in coeffs.items() if v}


def _strip_relations(bands: Sequence[tuple[Path, Band]]) -> list[tuple[int, int]]:
    """(pit level, strip level) pairs whose strips partition the pit's range."""
    out = []
    for si, (_, s) in enumerate(bands):
        for pi in range(si):
            p = bands[pi][1]
            lin = atoms_linear(s.lb, lambda a: False)
            if lin is None:
                continue
            const, terms = lin
            alpha = terms.get(p.counter, 0)
            if alpha <= 0:
                continue
            others = {k for k in terms if k != p.counter}
            if any(k == b.counter for _, b in bands for k in others):
                continue
            width = simplify(s.lb + alpha * p.step)
            args = s.ub.args if isinstance(s.ub, Call) and s.ub.func == "min" else (s.ub,)
            if any(provably_le(simplify(a), width) or simplify(a) == width for a in args):
                out.append((pi, si))
    return out


def _flip(d: str) -> str:
    return {"<": ">", ">": "<", "=": "="}[d]


def analyze(tree: LoopTree, bindings: Mapping[str, int] | None = None) -> DependenceGraph:
    """All dependences among the leaves of ``tree``.

    ``bindings`` optionally fixes parameter values, which lets the bounded
    Banerjee check run on parametric bounds.
    """
    bindings = dict(bindings or {})
    sides = []
    for path, leaf in leaves(tree.root):
        bands = bands_on_path(tree.root, path)
        ranges = _counter_ranges(bands, bindings, tree.params)
        if ranges is False:
            continue  # never executes
        sides.append(_Side(path, leaf, bands, ranges))
    found: dict[tuple, Dependence] = {}
    for x in range(len(sides)):
        for y in range(x, len(sides)):
            _analyze_pair(sides[x], sides[y], bindings, found)
    deps = sorted(found.values(), key=lambda d: (d.source, d.sink, d.array, d.kind, d.direction))
    return DependenceGraph(tuple(deps))


def _common(a: _Side, b: _Side) -> int:
    n = 0
    for (pa, _), (pb, _) in zip(a.bands, b.bands):
        if pa != pb:
            break
        n += 1
    return n


def _analyze_pair(a: _Side, b: _Side, bindings, found: dict) -> None:
    ncommon = _common(a, b)
    same = a.path == b.path
    src_ctr = {band.counter: ("s", k) for k, (_, band) in enumerate(a.bands)}
    snk_ctr = {band.counter: ("t", k) for k, (_, band) in enumerate(b.bands)}
    rel = _strip_relations(a.bands[:ncommon])
    acc_a = a.leaf.accesses()
    acc_b = b.leaf.accesses()
    for ia, ra in enumerate(acc_a):
        for ib, rb in enumerate(acc_b):
            if ra.array != rb.array or (ra.mode == "read" and rb.mode == "read"):
                continue
            if same and ib < ia:
                continue
            vectors = _test_pair(ra, rb, a, b, ncommon, src_ctr, snk_ctr, rel, bindings)
            for vec, dist in vectors:
                _record(a, b, ra, rb, ncommon, vec, dist, found)


def _test_pair(ra: AccessRef, rb: AccessRef, a: _Side, b: _Side, ncommon: int,
               src_ctr, snk_ctr, rel, bindings):
    allowed: list[set[str]] = [set(DIRS) for _ in range(ncommon)]
    dist: list[int | None] = [None] * ncommon
    banerjee_dims = []
    for sa, sb in zip(ra.subscripts, rb.subscripts):
        eq = _dim_equation(sa, sb, src_ctr, snk_ctr)
        if eq is None:
            continue
        const, coeffs = eq
        # parameters with bindings become constants
        for key in [k for k in coeffs if k[0] == "p" and isinstance(k[1], str) and k[1] in bindings]:
            const += coeffs.pop(key) * bindings[key[1]]
        if not coeffs:
            if const != 0:
                return []  # ZIV
            continue
        g = 0
        for v in coeffs.values():
            g = math.gcd(g, v)
        if const % g != 0:
            return []  # GCD
        params = [k for k in coeffs if k[0] == "p"]
        ctrs = [k for k in coeffs if k[0] != "p"]
        levels = {k[1] for k in ctrs}
        if not params and len(levels) == 1:
            (lvl,) = levels
            ca = coeffs.get(("s", lvl), 0)
            cb = coeffs.get(("t", lvl), 0)
            if lvl < ncommon and ca and ca == -cb and len(ctrs) == 2:
                # ca*x_s - ca*x_t + const = 0  ->  x_t - x_s = const / ca
                if const % ca != 0:
                    return []
                d = const // ca
                step = a.bands[lvl][1].step
                if d % step != 0:
                    return []
                if dist[lvl] is not None and dist[lvl] != d:
                    return []
                dist[lvl] = d
                allowed[lvl] &= {"<" if d > 0 else ">" if d < 0 else "="}
        if all(k[1].isidentifier() for k in params):
            banerjee_dims.append((const, coeffs))
    if any(not s for s in allowed):
        return []
    out = []
    for vec in itertools.product(*[sorted(s) for s in allowed]):
        if not _strip_ok(vec, rel):
            continue
        if a.ranges is not None and b.ranges is not None and \
                not all(_banerjee(c, co, vec, a, b, ncommon) for c, co in banerjee_dims):
            continue
        out.append((vec, tuple(dist)))
    return out


def _strip_ok(vec: tuple[str, ...], rel) -> bool:
    for pi, si in rel:
        if vec[si] == "=" and vec[pi] != "=":
            return False
        if vec[pi] in "<>" and vec[si] != vec[pi]:
            return False
    return True


def _banerjee(const: int, coeffs: dict, vec, a: _Side, b: _Side, ncommon: int) -> bool:
    """False when the dimension equation has no real solution under ``vec``."""
    lo = hi = const
    for lvl in range(ncommon):
        ca = coeffs.get(("s", lvl), 0)
        cb = -coeffs.get(("t", lvl), 0)
        ext = _pair_extremes(ca, cb, a.ranges[lvl], vec[lvl])
        if ext is None:
            return False
        lo, hi = _add(lo, ext[0]), _add(hi, ext[1])
        if lo is None or hi is None:
            return True
    for key, c in coeffs.items():
        if key[0] == "p":
            r = (1, INF)  # unbound parameter
        elif key[1] < ncommon:
            continue
        else:
            r = (a.ranges if key[0] == "s" else b.ranges)[key[1]]
        t = _scale(c, r)
        lo, hi = _add(lo, t[0]), _add(hi, t[1])
        if lo is None or hi is None:
            return True
    return lo <= 0 <= hi


def _record(a: _Side, b: _Side, ra: AccessRef, rb: AccessRef, ncommon: int,
            vec, dist, found: dict) -> None:
    first = next((d for d in vec if d != "="), "=")
    if first == ">":
        a, b, ra, rb = b, a, rb, ra
        vec = tuple(_flip(d) for d in vec)
        dist = tuple(None if d is None else -d for d in dist)
    elif first == "=":
        if a.path == b.path:
            return
        if b.path < a.path:
            a, b, ra, rb = b, a, rb, ra
    if ra.mode == "write" and rb.mode == "read":
        kind = "flow"
    elif ra.mode == "read":
        kind = "anti"
    else:
        kind = "output"
    reduce = ra.reduction is not None and ra.reduction == rb.reduction
    levels = tuple(p for p, _ in a.bands[:ncommon])
    counters = tuple(bd.counter for _, bd in a.bands[:ncommon])
    dep = Dependence(a.path, b.path, a.leaf.label, b.leaf.label, ra.array, kind, levels,
                     counters, vec, dist, reduce, a.leaf.line, b.leaf.line)
    key = (dep.source, dep.sink, dep.array, dep.kind, dep.direction, dep.distance)
    if key in found:
        old = found[key]
        if old.reduce and not reduce:
            found[key] = dep
    else:
        found[key] = dep


# -- legality -------------------------------------------------------------------

_WITNESS_BUDGET = 200_000


def _param_choices(params: Sequence[str]) -> list[dict[str, int]]:
    top = {0: 1, 1: 8, 2: 6}.get(len(params), 3)
    return [dict(zip(params, vals)) for vals in itertools.product(range(1, top + 1), repeat=len(params))]


def _instances(root: Node, path: Path, env: dict, budget: list[int]):
    """Counter environments under which the node at ``path`` executes, in order."""
    if not path:
        yield dict(env)
        return
    node = root
    k, rest = path[0], path[1:]
    if isinstance(node, Seq):
        yield from _instances(node.children[k], rest, env, budget)
    elif isinstance(node, Band):
        lo, hi = evaluate(node.lb, env), evaluate(node.ub, env)
        for v in range(lo, hi, node.step):
            budget[0] -= 1
            if budget[0] < 0:
                return
            env[node.counter] = v
            yield from _instances(node.body, rest, env, budget)
        env.pop(node.counter, None)
    elif isinstance(node, SectionMark):
        yield from _instances(node.body, rest, env, budget)
    elif isinstance(node, Guard):
        taken = evaluate_cond(node.cond, env)
        if taken and k == 0:
            yield from _instances(node.then, rest, env, budget)
        elif not taken and k == 1:
            yield from _instances(node.orelse, rest, env, budget)


_MODES = {"flow": ("write", "read"), "anti": ("read", "write"), "output": ("write", "write")}


def find_witness(dep: Dependence, tree: LoopTree, accept=None) -> str | None:
    """Search small parameter values for a concrete instance pair realizing ``dep``.

    ``accept(distance, source_env, sink_env)`` may further restrict the pair.
    """
    src_leaf, snk_leaf = get(tree.root, dep.source), get(tree.root, dep.sink)
    m_src, m_snk = _MODES[dep.kind]
    subs_src = [r.subscripts for r in src_leaf.accesses() if r.array == dep.array and r.mode == m_src]
    subs_snk = [r.subscripts for r in snk_leaf.accesses() if r.array == dep.array and r.mode == m_snk]
    common = dep.counters
    budget = [_WITNESS_BUDGET]
    for pv in _param_choices(tree.params):
        try:
            cells: dict[tuple, list[dict]] = {}
            for env in _instances(tree.root, dep.source, dict(pv), budget):
                for subs in subs_src:
                    cells.setdefault(tuple(evaluate(e, env) for e in subs), []).append(env)
            for env in _instances(tree.root, dep.sink, dict(pv), budget):
                for subs in subs_snk:
                    for senv in cells.get(tuple(evaluate(e, env) for e in subs), ()):
                        dist = tuple(env[c] - senv[c] for c in common)
                        if not _matches(dep, dist, dep.source == dep.sink and senv == env):
                            continue
                        if accept is not None and not accept(dist, senv, env):
                            continue
                        return _describe(dep, senv, env, pv, tree.params)
        except (KeyError, ZeroDivisionError):
            return None
        if budget[0] < 0:
            return None
    return None


def _matches(dep: Dependence, dist: tuple[int, ...], same_instance: bool) -> bool:
    for d, want, exact in zip(dist, dep.direction, dep.distance):
        sign = "<" if d > 0 else ">" if d < 0 else "="
        if sign != want or (exact is not None and exact != d):
            return False
    return not same_instance


def _describe(dep: Dependence, senv: dict, tenv: dict, pv: dict, params) -> str:
    src = ", ".join(f"{k}={v}" for k, v in senv.items() if k not in pv)
    snk = ", ".join(f"{k}={v}" for k, v in tenv.items() if k not in pv)
    at = f" with {', '.join(f'{k}={v}' for k, v in pv.items())}" if params else ""
    return f"{dep.source_label}({src}) -> {dep.sink_label}({snk}) {dep.kind} on {dep.array}{at}"


class _Checker:
    """Collects violations and decides the three-valued verdict."""

    def __init__(self, assumes: AssumeSet, tree: LoopTree | None, what: str,
                 reductions_ok: bool = False):
        self.assumes = assumes
        self.tree = tree
        self.what = what
        self.reductions_ok = reductions_ok
        self.violations: list[Dependence] = []
        self.discharged: list[str] = []

    def violate(self, dep: Dependence, accept=None) -> None:
        carried = dep.carried_by()
        if carried is not None and carried in self.assumes.parallel:
            self.discharged.append(f"{dep} (assumed parallel)")
            return
        if dep.reduce and self.reductions_ok and self.assumes.assoc_reductions:
            self.discharged.append(f"{dep} (associative reduction)")
            return
        self.violations.append((dep, accept))

    def verdict(self) -> Verdict:
        if not self.violations:
            return Verdict(PROVEN, f"{self.what}: all dependences preserved",
                           discharged=tuple(self.discharged))
        if self.tree is not None:
            for d, accept in self.violations:
                w = find_witness(d, self.tree, accept)
                if w is not None:
                    return Verdict(DISPROVEN, f"{self.what} reverses dependence {d}",
                                   w, tuple(self.discharged))
        d = self.violations[0][0]
        return Verdict(UNKNOWN, f"{self.what} may reverse dependence {d}",
                       None, tuple(self.discharged))


def _lex_ok(vec: Sequence[str]) -> bool:
    for d in vec:
        if d == "<":
            return True
        if d == ">":
            return False
    return True


def check_interchange(graph: DependenceGraph, chain: Sequence[Path], perm: Sequence[Path],
                      assumes: AssumeSet, tree: LoopTree | None = None) -> Verdict:
    """``chain`` lists perfectly nested bands outermost first; ``perm`` is their new order."""
    chk = _Checker(assumes, tree, "interchange")
    for dep in graph:
        if not all(p in dep.levels for p in chain):
            continue
        pos = [dep.levels.index(p) for p in chain]
        vec = list(dep.direction)
        old = {p: dep.direction[dep.levels.index(p)] for p in chain}
        for slot, p in zip(pos, perm):
            vec[slot] = old[p]
        if not _lex_ok(vec):
            chk.violate(dep)
    return chk.verdict()


def check_reverse(graph: DependenceGraph, band: Path, assumes: AssumeSet,
                  tree: LoopTree | None = None) -> Verdict:
    chk = _Checker(assumes, tree, "reversal")
    for dep in graph:
        if band not in dep.levels:
            continue
        k = dep.levels.index(band)
        vec = list(dep.direction)
        vec[k] = _flip(vec[k])
        if not _lex_ok(vec):
            chk.violate(dep)
    return chk.verdict()


def _child_under(path: Path, parent_seq: Path) -> int | None:
    n = len(parent_seq)
    if path[:n] != parent_seq or len(path) <= n:
        return None
    return path[n]


def check_fusion(fused_graph: DependenceGraph, body: Path, group_of_child: Sequence[int],
                 assumes: AssumeSet, tree: LoopTree | None = None) -> Verdict:
    """``body`` is the sequence path of the fused band's body in the candidate tree."""
    chk = _Checker(assumes, tree, "fusion", reductions_ok=True)
    for dep in fused_graph:
        cs = _child_under(dep.source, body)
        ct = _child_under(dep.sink, body)
        if cs is None or ct is None:
            continue
        if group_of_child[cs] > group_of_child[ct]:
            chk.violate(dep)
    return chk.verdict()


def check_distribution(graph: DependenceGraph, outer: Path, body: Path,
                       group_of_child: Sequence[int], assumes: AssumeSet,
                       tree: LoopTree | None = None) -> Verdict:
    """Distribute the bands from ``outer`` down to the one owning sequence ``body``."""
    chk = _Checker(assumes, tree, "distribution", reductions_ok=True)
    for dep in graph:
        cs = _child_under(dep.source, body)
        ct = _child_under(dep.sink, body)
        if cs is None or ct is None or group_of_child[cs] <= group_of_child[ct]:
            continue
        carried = dep.carried_by()
        if carried is not None and len(carried) < len(outer):
            continue  # carried outside the distributed bands
        chk.violate(dep)
    return chk.verdict()


def check_reorder(graph: DependenceGraph, seq: Path, new_pos: Sequence[int],
                  assumes: AssumeSet, tree: LoopTree | None = None) -> Verdict:
    """``new_pos[k]`` is the new index of the sibling at index ``k`` in sequence ``seq``."""
    chk = _Checker(assumes, tree, "reorder")
    for dep in graph:
        cs = _child_under(dep.source, seq)
        ct = _child_under(dep.sink, seq)
        if cs is None or ct is None or cs == ct:
            continue
        carried = dep.carried_by()
        if carried is not None and len(carried) < len(seq):
            continue
        if new_pos[cs] > new_pos[ct]:
            chk.violate(dep)
    return chk.verdict()


def check_unrollandjam(graph: DependenceGraph, band: Path, factor: int,
                       assumes: AssumeSet, tree: LoopTree | None = None) -> Verdict:
    """Jamming interleaves ``factor`` outer iterations inside the inner loops."""
    chk = _Checker(assumes, tree, "unroll-and-jam")
    step = get(tree.root, band).step if tree is not None else 1
    mind = assumes.min_dist(band)
    for dep in graph:
        if band not in dep.levels:
            continue
        k = dep.levels.index(band)
        if dep.direction[k] != "<" or any(d != "=" for d in dep.direction[:k]):
            continue
        inner = dep.direction[k + 1:]
        if _lex_ok(inner):
            continue
        d = dep.distance[k]
        iters = None if d is None else d // step
        if iters is None and mind is not None and mind >= factor:
            chk.discharged.append(f"{dep} (assumed min distance {mind})")
            continue
        if iters is not None and iters >= factor:
            continue
        chk.violate(dep, _same_jam_group(get(tree.root, band), factor) if tree is not None else None)
    return chk.verdict()


def _same_jam_group(b: Band, factor: int):
    """Both instances fall in one complete group of the jammed main loop."""
    width = b.step * factor

    def accept(dist, src, snk) -> bool:
        lb, ub = evaluate(b.lb, src), evaluate(b.ub, src)
        g1, g2 = (src[b.counter] - lb) // width, (snk[b.counter] - lb) // width
        return g1 == g2 and lb + width * g1 + b.step * (factor - 1) < ub
    return accept


def proven(what: str) -> Verdict:
    return Verdict(PROVEN, f"{what} preserves execution order")


def legal(planned, graph: DependenceGraph, assumes: AssumeSet,
          tree: LoopTree | None = None) -> Verdict:
    """Legality of a planned transformation (see ``xform.plan``)."""
    kind = planned.kind
    p = planned.params
    if kind == "interchange":
        return check_interchange(graph, p["chain"], p["perm"], assumes, tree)
    if kind == "reverse":
        return check_reverse(graph, p["band"], assumes, tree)
    if kind == "fuse":
        return check_fusion(graph, p["body"], p["groups"], assumes, tree)
    if kind == "distribute":
        return check_distribution(graph, p["outer"], p["body"], p["groups"], assumes, tree)
    if kind == "reorder":
        return check_reorder(graph, p["seq"], p["new_pos"], assumes, tree)
    if kind == "unrollandjam":
        return check_unrollandjam(graph, p["band"], p["factor"], assumes, tree)
    if kind == "tile":
        return check_interchange(graph, p["chain"], p["perm"], assumes, tree)
    return proven(kind)
