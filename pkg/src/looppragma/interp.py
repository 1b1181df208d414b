"""Reference interpreter and the equivalence oracle.

The loop tree is compiled once into nested Python closures.  Integer
arithmetic is exact and checked against the signed 64-bit range; floats are
binary64 evaluated strictly in source order.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Mapping, Union

import numpy as np

from .diagnostics import (ExecutionError, IntegerOverflow, Location, NonTermination, OutOfBounds,
                          UnboundParameter)
from .expr import BinOp, Call, Expr, Neg, Num, Real, Ref, Var, evaluate
from .frontend.ast import Program
from .looptree import Band, Guard, Leaf, LoopTree, SectionMark, Seq, build_tree

INT_MIN, INT_MAX = -(2 ** 63), 2 ** 63 - 1
DEFAULT_BUDGET = 10 ** 8

Env = dict


@dataclass(frozen=True)
class InitSpec:
    mode: str = "zeros"  # zeros | sequential | seeded
    seed: int = 0

    @staticmethod
    def zeros() -> "InitSpec":
        return InitSpec("zeros")

    @staticmethod
    def sequential() -> "InitSpec":
        return InitSpec("sequential")

    @staticmethod
    def seeded(seed: int) -> "InitSpec":
        return InitSpec("seeded", seed)


@dataclass
class ExecState:
    bindings: dict[str, int]
    shapes: dict[str, tuple[int, ...]]
    kinds: dict[str, str]
    stores: dict[str, list]
    trace: list[tuple[str, tuple[int, ...]]] = field(default_factory=list)
    accesses: list[tuple[int, str, int, str]] | None = None  # (trace position, array, cell, mode)

    def array(self, name: str) -> np.ndarray:
        dtype = np.int64 if self.kinds[name] == "int" else np.float64
        return np.array(self.stores[name], dtype=dtype).reshape(self.shapes[name])

    @property
    def arrays(self) -> dict[str, np.ndarray]:
        return {n: self.array(n) for n in self.stores}

    def format_memory(self) -> str:
        """Row-major dump, one array per block, stable formatting."""
        lines = []
        for name in sorted(self.stores):
            shape = "x".join(str(s) for s in self.shapes[name]) or "scalar"
            lines.append(f"{name} [{shape}]")
            vals = [_fmt(v) for v in self.stores[name]]
            width = self.shapes[name][-1] if self.shapes[name] else 1
            width = max(width, 1)
            for k in range(0, len(vals), width):
                lines.append("  " + " ".join(vals[k:k + width]))
        return "\n".join(lines)


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


class _Budget:
    __slots__ = ("left",)

    def __init__(self, n: int):
        self.left = n


def _check_int(v, where: Location):
    if isinstance(v, int) and not (INT_MIN <= v <= INT_MAX):
        raise IntegerOverflow(f"integer overflow: {v}", where)
    return v


def _compile_int(e: Expr, where: Location) -> Callable[[Env], int]:
    if isinstance(e, Num):
        v = e.value
        return lambda env: v
    if isinstance(e, Var):
        n = e.name
        return lambda env: env[n]
    if isinstance(e, Neg):
        f = _compile_int(e.operand, where)
        return lambda env: _check_int(-f(env), where)
    if isinstance(e, Call):
        fs = [_compile_int(a, where) for a in e.args]
        if e.func == "min":
            return lambda env: min(f(env) for f in fs)
        return lambda env: max(f(env) for f in fs)
    if isinstance(e, BinOp):
        a = _compile_int(e.left, where)
        b = _compile_int(e.right, where)
        op = e.op
        if op == "+":
            return lambda env: _check_int(a(env) + b(env), where)
        if op == "-":
            return lambda env: _check_int(a(env) - b(env), where)
        if op == "*":
            return lambda env: _check_int(a(env) * b(env), where)
        if op == "/":
            return lambda env: _div(a(env), b(env), where)
        return lambda env: _mod(a(env), b(env), where)
    raise TypeError(f"not an integer expression: {e}")


def _div(a: int, b: int, where: Location) -> int:
    if b == 0:
        raise ExecutionError("division by zero", where)
    return a // b


def _mod(a: int, b: int, where: Location) -> int:
    if b == 0:
        raise ExecutionError("modulo by zero", where)
    return a % b


class _Compiler:
    def __init__(self, state: ExecState, budget: _Budget, file: str, record: bool):
        self.state = state
        self.budget = budget
        self.file = file
        self.record = record

    def where(self, line) -> Location:
        return Location(self.file, line)

    def cell(self, ref: Ref, where: Location) -> Callable[[Env], int]:
        if ref.array not in self.state.shapes:
            raise OutOfBounds(f"unknown array '{ref.array}'", where)
        shape = self.state.shapes[ref.array]
        subs = [_compile_int(i, where) for i in ref.index]
        name = ref.array

        def f(env):
            flat = 0
            for k, (s, dim) in enumerate(zip(subs, shape)):
                v = s(env)
                if v < 0 or v >= dim:
                    idx = ", ".join(str(x(env)) for x in subs)
                    raise OutOfBounds(f"{name}[{idx}] is outside the array bounds {list(shape)}", where)
                flat = flat * dim + v
            return flat
        return f

    def value(self, e: Expr, where: Location, reads: list) -> Callable[[Env], Union[int, float]]:
        st = self.state
        if isinstance(e, Num):
            v = e.value
            return lambda env: v
        if isinstance(e, Real):
            v = e.value
            return lambda env: v
        if isinstance(e, Var):
            n = e.name
            return lambda env: env[n]
        if isinstance(e, Ref):
            cell = self.cell(e, where)
            store = st.stores[e.array]
            name = e.array
            if self.record:
                def rd(env):
                    c = cell(env)
                    reads.append((name, c))
                    return store[c]
                return rd
            return lambda env: store[cell(env)]
        if isinstance(e, Neg):
            f = self.value(e.operand, where, reads)
            return lambda env: _check_int(-f(env), where)
        if isinstance(e, Call):
            fs = [self.value(a, where, reads) for a in e.args]
            if e.func == "min":
                return lambda env: min(f(env) for f in fs)
            return lambda env: max(f(env) for f in fs)
        if isinstance(e, BinOp):
            a = self.value(e.left, where, reads)
            b = self.value(e.right, where, reads)
            return _arith(e.op, a, b, where)
        raise TypeError(e)

    def seq(self, s: Seq) -> Callable[[Env], None]:
        fs = [self.node(c) for c in s.children]
        if len(fs) == 1:
            return fs[0]

        def run(env):
            for f in fs:
                f(env)
        return run

    def node(self, n):
        if isinstance(n, Band):
            return self.band(n)
        if isinstance(n, SectionMark):
            return self.seq(n.body)
        if isinstance(n, Guard):
            return self.guard(n)
        if isinstance(n, Leaf):
            return self.leaf(n)
        raise TypeError(n)

    def band(self, b: Band):
        where = self.where(b.line)
        lb = _compile_int(b.lb, where)
        ub = _compile_int(b.ub, where)
        body = self.seq(b.body)
        step = b.step
        ctr = b.counter
        budget = self.budget

        def run(env):
            lo, hi = lb(env), ub(env)
            if lo >= hi:
                return
            count = (hi - lo + step - 1) // step
            if count > budget.left:
                raise NonTermination(f"instance budget exhausted in loop '{ctr}'", where)
            saved = env.get(ctr)
            for v in range(lo, hi, step):
                env[ctr] = v
                body(env)
            if saved is None:
                env.pop(ctr, None)
            else:
                env[ctr] = saved
        return run

    def guard(self, g: Guard):
        where = self.where(g.line)
        left = _compile_int(g.cond.left, where)
        right = _compile_int(g.cond.right, where)
        op = g.cond.op
        then = self.seq(g.then)
        orelse = self.seq(g.orelse) if g.orelse is not None else None
        cmp = _CMP[op]

        def run(env):
            if cmp(left(env), right(env)):
                then(env)
            elif orelse is not None:
                orelse(env)
        return run

    def leaf(self, s: Leaf):
        st = self.state
        where = self.where(s.line)
        reads: list = []
        rhs = self.value(s.value, where, reads)
        cell = self.cell(s.target, where)
        store = st.stores[s.target.array]
        is_int = st.kinds[s.target.array] == "int"
        inst = [_compile_int(e, where) for e in s.instance]
        label = s.label
        op = s.op
        trace = st.trace
        budget = self.budget
        record = self.record
        accesses = st.accesses
        name = s.target.array

        def run(env):
            budget.left -= 1
            if budget.left < 0:
                raise NonTermination("instance budget exhausted", where)
            if record:
                reads.clear()
            v = rhs(env)
            c = cell(env)
            if op != "=":
                old = store[c]
                if record:
                    reads.append((name, c))
                if op == "+=":
                    v = old + v
                elif op == "-=":
                    v = old - v
                else:
                    v = old * v
            if is_int:
                if isinstance(v, float):
                    v = int(v)
                _check_int(v, where)
            else:
                v = float(v)
            store[c] = v
            pos = len(trace)
            trace.append((label, tuple(f(env) for f in inst)))
            if record:
                for arr, rc in reads:
                    accesses.append((pos, arr, rc, "read"))
                accesses.append((pos, name, c, "write"))
        return run


_CMP = {
    "<": lambda a, b: a < b, "<=": lambda a, b: a <= b, ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b, "==": lambda a, b: a == b, "!=": lambda a, b: a != b,
}


def _arith(op: str, a, b, where: Location):
    def f(env):
        x, y = a(env), b(env)
        if isinstance(x, int) and isinstance(y, int):
            if op == "+":
                return _check_int(x + y, where)
            if op == "-":
                return _check_int(x - y, where)
            if op == "*":
                return _check_int(x * y, where)
            if op == "/":
                return _div(x, y, where)
            return _mod(x, y, where)
        x, y = float(x), float(y)
        if y == 0.0 and op in "/%":
            raise ExecutionError("division by zero", where)
        if op == "+":
            return x + y
        if op == "-":
            return x - y
        if op == "*":
            return x * y
        if op == "/":
            return x / y
        return math.fmod(x, y)
    return f


def _initial(kind: str, size: int, init: InitSpec, rng) -> list:
    if init.mode == "zeros":
        return [0] * size if kind == "int" else [0.0] * size
    if init.mode == "sequential":
        return list(range(size)) if kind == "int" else [float(k) for k in range(size)]
    if kind == "int":
        return [int(x) for x in rng.integers(-9, 10, size)]
    return [float(x) for x in rng.uniform(-1.0, 1.0, size)]


def run(program: Program | LoopTree, bindings: Mapping[str, int] | None = None,
        init: InitSpec | str = InitSpec(), *, budget: int = DEFAULT_BUDGET,
        record_accesses: bool = False) -> ExecState:
    """Execute under concrete parameter values; deterministic for a given seed."""
    tree = program if isinstance(program, LoopTree) else build_tree(program)
    if isinstance(init, str):
        init = InitSpec(init)
    bindings = dict(bindings or {})
    missing = [p for p in tree.params if p not in bindings]
    if missing:
        raise UnboundParameter(f"parameter(s) {', '.join(missing)} need a value", Location(tree.file))
    for p in tree.params:
        if not isinstance(bindings[p], int) or bindings[p] < 1:
            # transformations assume parameters are positive integers
            raise ExecutionError(f"parameter {p}={bindings[p]!r} must be a positive integer",
                                 Location(tree.file))
    rng = np.random.default_rng(init.seed)
    shapes, kinds, stores = {}, {}, {}
    for a in tree.arrays:
        try:
            shape = tuple(evaluate(d, bindings) for d in a.dims)
        except KeyError as exc:
            raise UnboundParameter(f"array '{a.name}' uses unbound symbol {exc}", Location(tree.file)) from None
        if any(s < 0 for s in shape):
            raise OutOfBounds(f"array '{a.name}' has negative extent {list(shape)}", Location(tree.file))
        shapes[a.name] = shape
        kinds[a.name] = "int" if a.kind == "int" else "float64"
        stores[a.name] = _initial(kinds[a.name], math.prod(shape), init, rng)
    state = ExecState(bindings, shapes, kinds, stores, [], [] if record_accesses else None)
    comp = _Compiler(state, _Budget(budget), tree.file, record_accesses)
    body = comp.seq(tree.root)
    body(dict(bindings))
    return state


@dataclass(frozen=True)
class Equivalence:
    equal: bool
    mode: str
    divergence: str | None = None
    max_deviation: float = 0.0

    def __bool__(self) -> bool:
        return self.equal

    def __str__(self) -> str:
        if self.equal:
            return f"equivalent ({self.mode}, max relative deviation {self.max_deviation:.3g})"
        return f"not equivalent ({self.mode}): {self.divergence}"


MODES = ("memory", "memory+trace-multiset", "memory+trace-order")


def equivalent(a: ExecState, b: ExecState, mode: str = "memory", rtol: float = 0.0) -> Equivalence:
    """Compare final memory, and optionally the statement-instance traces.

    ``rtol == 0`` demands bit-identical floats; otherwise floats may differ by
    that relative tolerance and the largest deviation is reported.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    if a.shapes != b.shapes:
        return Equivalence(False, mode, f"array shapes differ: {a.shapes} vs {b.shapes}")
    worst = 0.0
    first = None
    for name in sorted(a.stores):
        xs, ys = a.stores[name], b.stores[name]
        for k, (x, y) in enumerate(zip(xs, ys)):
            if x == y or (isinstance(x, float) and math.isnan(x) and math.isnan(y)):
                continue
            dev = math.inf
            if isinstance(x, float) and math.isfinite(x) and math.isfinite(y):
                dev = abs(x - y) / max(abs(x), abs(y))
            worst = max(worst, dev)
            if (dev > rtol or a.kinds[name] == "int") and first is None:
                idx = np.unravel_index(k, a.shapes[name]) if a.shapes[name] else ()
                first = f"{name}[{']['.join(str(int(i)) for i in idx)}]: {x!r} vs {y!r}"
    if first is not None:
        return Equivalence(False, mode, first, worst)
    if mode == "memory+trace-multiset":
        ca, cb = Counter(a.trace), Counter(b.trace)
        if ca != cb:
            extra = (ca - cb) or (cb - ca)
            inst = next(iter(extra))
            return Equivalence(False, mode, f"instance {_inst(inst)} occurs a different number of times", worst)
    elif mode == "memory+trace-order":
        for k, (x, y) in enumerate(zip(a.trace, b.trace)):
            if x != y:
                return Equivalence(False, mode, f"trace position {k}: {_inst(x)} vs {_inst(y)}", worst)
        if len(a.trace) != len(b.trace):
            return Equivalence(False, mode, f"trace lengths differ: {len(a.trace)} vs {len(b.trace)}", worst)
    return Equivalence(True, mode, None, worst)


def _inst(entry) -> str:
    label, vec = entry
    return f"{label}({', '.join(str(v) for v in vec)})"


def instance_order_violations(original: ExecState, transformed: ExecState, limit: int = 10) -> list[str]:
    """Brute-force oracle: dependent instance pairs whose order was reversed.

    Both states must have been run with ``record_accesses=True``.
    """
    pos = {entry: k for k, entry in enumerate(transformed.trace)}
    last_write: dict[tuple[str, int], int] = {}
    reads_since: dict[tuple[str, int], list[int]] = {}
    pairs = set()
    for p, arr, cell, mode in original.accesses:
        key = (arr, cell)
        if mode == "read":
            w = last_write.get(key)
            if w is not None and w != p:
                pairs.add((w, p))
            reads_since.setdefault(key, []).append(p)
        else:
            w = last_write.get(key)
            if w is not None and w != p:
                pairs.add((w, p))
            for r in reads_since.get(key, ()):
                if r != p:
                    pairs.add((r, p))
            reads_since[key] = []
            last_write[key] = p
    out = []
    for src, snk in sorted(pairs):
        a, b = original.trace[src], original.trace[snk]
        if a not in pos or b not in pos:
            out.append(f"instance {_inst(a if a not in pos else b)} missing after transformation")
        elif pos[a] > pos[b]:
            out.append(f"{_inst(a)} -> {_inst(b)} now runs in reverse order")
        if len(out) >= limit:
            break
    return out
