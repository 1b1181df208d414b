"""Expression nodes shared by bounds, subscripts and statement right-hand sides.

Integer expressions are kept as small trees.  ``simplify`` folds them into a
canonical linear form ``const + sum(coeff * atom)`` where an atom is either a
symbol name or an irreducible sub-tree (floor division, modulo, min/max,
products of symbols).  ``AffineExpr`` is the linear form restricted to plain
symbols; dependence analysis only ever works on those.

Integer ``/`` is floor division and ``%`` is the matching modulo.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Union


class Expr:
    __slots__ = ()

    def __str__(self) -> str:
        return to_source(self)

    # arithmetic sugar used heavily by the transformations
    def __add__(self, other: "Expr | int") -> "Expr":
        return simplify(BinOp("+", self, _lift(other)))

    def __radd__(self, other: int) -> "Expr":
        return simplify(BinOp("+", _lift(other), self))

    def __sub__(self, other: "Expr | int") -> "Expr":
        return simplify(BinOp("-", self, _lift(other)))

    def __rsub__(self, other: int) -> "Expr":
        return simplify(BinOp("-", _lift(other), self))

    def __mul__(self, other: "Expr | int") -> "Expr":
        return simplify(BinOp("*", self, _lift(other)))

    def __rmul__(self, other: int) -> "Expr":
        return simplify(BinOp("*", _lift(other), self))

    def __neg__(self) -> "Expr":
        return simplify(Neg(self))

    def floordiv(self, other: "Expr | int") -> "Expr":
        return simplify(BinOp("/", self, _lift(other)))


@dataclass(frozen=True, eq=True, repr=False)
class Num(Expr):
    value: int

    def __repr__(self) -> str:
        return f"Num({self.value})"


@dataclass(frozen=True, eq=True, repr=False)
class Real(Expr):
    value: float

    def __repr__(self) -> str:
        return f"Real({self.value!r})"


@dataclass(frozen=True, eq=True, repr=False)
class Var(Expr):
    name: str

    def __repr__(self) -> str:
        return f"Var({self.name!r})"


@dataclass(frozen=True, eq=True, repr=False)
class Ref(Expr):
    array: str
    index: tuple[Expr, ...]

    def __repr__(self) -> str:
        return f"Ref({self.array!r}, {self.index!r})"


@dataclass(frozen=True, eq=True, repr=False)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr

    def __repr__(self) -> str:
        return f"BinOp({self.op!r}, {self.left!r}, {self.right!r})"


@dataclass(frozen=True, eq=True, repr=False)
class Neg(Expr):
    operand: Expr

    def __repr__(self) -> str:
        return f"Neg({self.operand!r})"


@dataclass(frozen=True, eq=True, repr=False)
class Call(Expr):
    func: str
    args: tuple[Expr, ...]

    def __repr__(self) -> str:
        return f"Call({self.func!r}, {self.args!r})"


COMPARISONS = ("<", "<=", ">", ">=", "==", "!=")


@dataclass(frozen=True)
class Cond:
    """A single comparison ``left op right``; used by guards and split predicates."""

    op: str
    left: Expr
    right: Expr

    def __str__(self) -> str:
        return f"{to_source(self.left)} {self.op} {to_source(self.right)}"


def _lift(v: "Expr | int") -> Expr:
    return Num(v) if isinstance(v, int) else v


def var(name: str) -> Var:
    return Var(name)


# -- printing -----------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "%": 2}


def to_source(e: Expr, parent: int = 0, right_side: bool = False) -> str:
    if isinstance(e, Num):
        s = str(e.value)
        return f"({s})" if e.value < 0 and parent >= 2 else s
    if isinstance(e, Real):
        s = repr(e.value)
        return f"({s})" if e.value < 0 and parent >= 2 else s
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Ref):
        return e.array + "".join(f"[{to_source(i)}]" for i in e.index)
    if isinstance(e, Call):
        return f"{e.func}({', '.join(to_source(a) for a in e.args)})"
    if isinstance(e, Neg):
        s = "-" + to_source(e.operand, 3)
        return f"({s})" if parent >= 2 or (parent >= 1 and right_side) else s
    if isinstance(e, BinOp):
        p = _PREC[e.op]
        sep = f" {e.op} " if p == 1 else e.op
        s = f"{to_source(e.left, p)}{sep}{to_source(e.right, p, True)}"
        if p < parent or (p == parent and right_side):
            return f"({s})"
        return s
    raise TypeError(f"not an expression: {e!r}")


# -- traversal ----------------------------------------------------------------

def children(e: Expr) -> tuple[Expr, ...]:
    if isinstance(e, BinOp):
        return (e.left, e.right)
    if isinstance(e, Neg):
        return (e.operand,)
    if isinstance(e, Call):
        return e.args
    if isinstance(e, Ref):
        return e.index
    return ()


def free_vars(e: Expr) -> set[str]:
    if isinstance(e, Var):
        return {e.name}
    out: set[str] = set()
    for c in children(e):
        out |= free_vars(c)
    return out


def refs(e: Expr) -> list[Ref]:
    """Array references in evaluation order (subscripts before the ref itself)."""
    out: list[Ref] = []
    for c in children(e):
        out.extend(refs(c))
    if isinstance(e, Ref):
        out.append(e)
    return out


def is_integer_expr(e: Expr) -> bool:
    if isinstance(e, (Ref, Real)):
        return False
    return all(is_integer_expr(c) for c in children(e))


def substitute(e: Expr, mapping: Mapping[str, Expr]) -> Expr:
    """Replace free symbols; integer sub-trees are re-simplified."""
    if not mapping:
        return e
    out = _subst(e, mapping)
    return simplify_value(out)


def _subst(e: Expr, m: Mapping[str, Expr]) -> Expr:
    if isinstance(e, Var):
        return m.get(e.name, e)
    if isinstance(e, (Num, Real)):
        return e
    if isinstance(e, BinOp):
        return BinOp(e.op, _subst(e.left, m), _subst(e.right, m))
    if isinstance(e, Neg):
        return Neg(_subst(e.operand, m))
    if isinstance(e, Call):
        return Call(e.func, tuple(_subst(a, m) for a in e.args))
    if isinstance(e, Ref):
        return Ref(e.array, tuple(_subst(a, m) for a in e.index))
    raise TypeError(e)


def substitute_cond(c: Cond, mapping: Mapping[str, Expr]) -> Cond:
    return Cond(c.op, substitute(c.left, mapping), substitute(c.right, mapping))


# -- evaluation ---------------------------------------------------------------

def evaluate(e: Expr, env: Mapping[str, int]) -> int:
    """Evaluate an integer expression exactly."""
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        try:
            return env[e.name]
        except KeyError:
            raise KeyError(e.name) from None
    if isinstance(e, Neg):
        return -evaluate(e.operand, env)
    if isinstance(e, BinOp):
        a = evaluate(e.left, env)
        b = evaluate(e.right, env)
        return _int_op(e.op, a, b)
    if isinstance(e, Call):
        vals = [evaluate(a, env) for a in e.args]
        return min(vals) if e.func == "min" else max(vals)
    raise TypeError(f"not an integer expression: {to_source(e)}")


def _int_op(op: str, a: int, b: int) -> int:
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if b == 0:
        raise ZeroDivisionError("integer division by zero")
    if op == "/":
        return a // b
    return a % b


def evaluate_cond(c: Cond, env: Mapping[str, int]) -> bool:
    return _compare(c.op, evaluate(c.left, env), evaluate(c.right, env))


def _compare(op: str, a, b) -> bool:
    if op == "<":
        return a < b
    if op == "<=":
        return a <= b
    if op == ">":
        return a > b
    if op == ">=":
        return a >= b
    if op == "==":
        return a == b
    return a != b


def try_constant(e: Expr) -> int | None:
    e = simplify(e)
    return e.value if isinstance(e, Num) else None


# -- linear forms -------------------------------------------------------------

Key = Union[str, Expr]


class _Lin:
    """Mutable linear accumulator used during simplification."""

    __slots__ = ("const", "terms")

    def __init__(self, const: int = 0, terms: dict | None = None):
        self.const = const
        self.terms: dict[Key, int] = dict(terms or {})

    def add(self, other: "_Lin", scale: int = 1) -> "_Lin":
        out = _Lin(self.const + scale * other.const, self.terms)
        for k, v in other.terms.items():
            nv = out.terms.get(k, 0) + scale * v
            if nv:
                out.terms[k] = nv
            else:
                out.terms.pop(k, None)
        return out

    def scale(self, c: int) -> "_Lin":
        if c == 0:
            return _Lin()
        return _Lin(self.const * c, {k: v * c for k, v in self.terms.items()})

    def is_const(self) -> bool:
        return not self.terms


def _linearize(e: Expr) -> _Lin:
    if isinstance(e, Num):
        return _Lin(e.value)
    if isinstance(e, Var):
        return _Lin(0, {e.name: 1})
    if isinstance(e, Neg):
        return _linearize(e.operand).scale(-1)
    if isinstance(e, BinOp):
        if e.op in "+-":
            a = _linearize(e.left)
            b = _linearize(e.right)
            return a.add(b, 1 if e.op == "+" else -1)
        if e.op == "*":
            a = _linearize(e.left)
            b = _linearize(e.right)
            if a.is_const():
                return b.scale(a.const)
            if b.is_const():
                return a.scale(b.const)
            node = BinOp("*", _rebuild(a), _rebuild(b))
            return _Lin(0, {node: 1})
        if e.op in "/%":
            return _lin_divmod(e.op, _linearize(e.left), _linearize(e.right))
    if isinstance(e, Call):
        return _lin_minmax(e.func, [_linearize(a) for a in e.args])
    raise TypeError(f"cannot linearize {e!r}")


def _lin_divmod(op: str, num: _Lin, den: _Lin) -> _Lin:
    if den.is_const() and den.const != 0:
        c = den.const
        if num.is_const():
            return _Lin(_int_op(op, num.const, c))
        if c < 0:
            node = BinOp(op, _rebuild(num), Num(c))
            return _Lin(0, {node: 1})
        if op == "/" and c == 1:
            return num
        if op == "%" and c == 1:
            return _Lin()
        # floor((c*A + B) / c) == A + floor(B / c) for integer A
        q_const, r_const = divmod(num.const, c)
        whole = _Lin(q_const, {})
        rest = _Lin(r_const, {})
        for k, v in num.terms.items():
            if v % c == 0:
                whole.terms[k] = v // c
            else:
                rest.terms[k] = v
        if op == "%":
            if rest.is_const():
                return _Lin(rest.const % c)
            return _Lin(0, {BinOp("%", _rebuild(rest), Num(c)): 1})
        if rest.is_const():
            return whole.add(_Lin(rest.const // c))
        return whole.add(_Lin(0, {BinOp("/", _rebuild(rest), Num(c)): 1}))
    node = BinOp(op, _rebuild(num), _rebuild(den))
    return _Lin(0, {node: 1})


def _lin_minmax(func: str, args: list[_Lin]) -> _Lin:
    consts = [a.const for a in args if a.is_const()]
    rest = [a for a in args if not a.is_const()]
    if consts:
        folded = min(consts) if func == "min" else max(consts)
        rest.append(_Lin(folded))
    # drop arguments that differ only by a constant
    by_terms: dict[tuple, _Lin] = {}
    for a in rest:
        key = tuple(sorted(((_keystr(k), v) for k, v in a.terms.items())))
        if key in by_terms:
            old = by_terms[key]
            keep = (a.const < old.const) if func == "min" else (a.const > old.const)
            if keep:
                by_terms[key] = a
        else:
            by_terms[key] = a
    uniq = list(by_terms.values())
    if len(uniq) == 1:
        return uniq[0]
    rebuilt = [_rebuild(a) for a in uniq]
    rebuilt.sort(key=to_source)
    return _Lin(0, {Call(func, tuple(rebuilt)): 1})


def _keystr(k: Key) -> str:
    return k if isinstance(k, str) else "\x00" + to_source(k)


def _rebuild(lin: _Lin) -> Expr:
    keys = sorted(lin.terms, key=_keystr)
    out: Expr | None = None
    for k in keys:
        c = lin.terms[k]
        atom = Var(k) if isinstance(k, str) else k
        mag = abs(c)
        term = atom if mag == 1 else BinOp("*", Num(mag), atom)
        if out is None:
            out = term if c > 0 else Neg(term)
        else:
            out = BinOp("+" if c > 0 else "-", out, term)
    if out is None:
        return Num(lin.const)
    if lin.const > 0:
        out = BinOp("+", out, Num(lin.const))
    elif lin.const < 0:
        out = BinOp("-", out, Num(-lin.const))
    return out


def simplify(e: Expr) -> Expr:
    """Canonical form of an integer expression."""
    return _rebuild(_linearize(e))


def simplify_value(e: Expr) -> Expr:
    """Simplify every maximal integer sub-tree of a (possibly float) expression."""
    if is_integer_expr(e):
        return simplify(e)
    if isinstance(e, Ref):
        return Ref(e.array, tuple(simplify(i) for i in e.index))
    if isinstance(e, BinOp):
        return BinOp(e.op, simplify_value(e.left), simplify_value(e.right))
    if isinstance(e, Neg):
        return Neg(simplify_value(e.operand))
    if isinstance(e, Call):
        return Call(e.func, tuple(simplify_value(a) for a in e.args))
    return e


@dataclass(frozen=True)
class AffineExpr:
    """``constant + sum(coeff * symbol)`` with no zero coefficients."""

    constant: int
    terms: tuple[tuple[str, int], ...] = ()

    @staticmethod
    def of(constant: int = 0, terms: Mapping[str, int] | None = None) -> "AffineExpr":
        items = tuple(sorted((k, v) for k, v in (terms or {}).items() if v))
        return AffineExpr(constant, items)

    @staticmethod
    def from_expr(e: Expr) -> "AffineExpr | None":
        try:
            lin = _linearize(e)
        except TypeError:
            return None
        if any(not isinstance(k, str) for k in lin.terms):
            return None
        return AffineExpr.of(lin.const, lin.terms)

    def coeff(self, sym: str) -> int:
        for k, v in self.terms:
            if k == sym:
                return v
        return 0

    def symbols(self) -> set[str]:
        return {k for k, _ in self.terms}

    def as_dict(self) -> dict[str, int]:
        return dict(self.terms)

    def __add__(self, o: "AffineExpr") -> "AffineExpr":
        d = self.as_dict()
        for k, v in o.terms:
            d[k] = d.get(k, 0) + v
        return AffineExpr.of(self.constant + o.constant, d)

    def __sub__(self, o: "AffineExpr") -> "AffineExpr":
        return self + o.scale(-1)

    def scale(self, c: int) -> "AffineExpr":
        return AffineExpr.of(self.constant * c, {k: v * c for k, v in self.terms})

    def evaluate(self, env: Mapping[str, int]) -> int:
        return self.constant + sum(v * env[k] for k, v in self.terms)

    def to_expr(self) -> Expr:
        return _rebuild(_Lin(self.constant, dict(self.terms)))

    def __str__(self) -> str:
        return to_source(self.to_expr())


def atoms_linear(e: Expr, opaque: Callable[[Expr], bool]) -> tuple[int, dict[Key, int]] | None:
    """Linear form where non-linear atoms are kept only if ``opaque(atom)``.

    Returns None when some non-linear atom is rejected by ``opaque``.  Used by
    dependence analysis to treat counter-free parameter products as symbols.
    """
    try:
        lin = _linearize(e)
    except TypeError:
        return None
    for k in lin.terms:
        if not isinstance(k, str) and not opaque(k):
            return None
    return lin.const, dict(lin.terms)


# -- reasoning over positive parameters ---------------------------------------

def _quasi_affine(e: Expr) -> bool:
    if isinstance(e, (Num, Var)):
        return True
    if isinstance(e, Neg):
        return _quasi_affine(e.operand)
    if isinstance(e, BinOp):
        if e.op in "+-":
            return _quasi_affine(e.left) and _quasi_affine(e.right)
        if e.op == "*":
            if not (_quasi_affine(e.left) and _quasi_affine(e.right)):
                return False
            return try_constant(e.left) is not None or try_constant(e.right) is not None
        c = try_constant(e.right)
        return c is not None and c > 0 and _quasi_affine(e.left)
    return False


def _divisors(e: Expr) -> list[int]:
    out = []
    if isinstance(e, BinOp) and e.op in "/%":
        c = try_constant(e.right)
        if c:
            out.append(c)
    for ch in children(e):
        out.extend(_divisors(ch))
    return out


def provably_nonneg(e: Expr, params: Iterable[str] = (), box_limit: int = 20000) -> bool:
    """True when ``e >= 0`` for every assignment of positive integers to its symbols.

    Quasi-affine expressions over parameters are periodic-linear: shifting a
    parameter by the product of all divisors changes the value by a constant.
    Checking one period box plus non-negative increments is therefore exact.
    """
    e = simplify(e)
    c = try_constant(e)
    if c is not None:
        return c >= 0
    syms = sorted(free_vars(e))
    allowed = set(params)
    if allowed and not set(syms) <= allowed:
        return False
    if not _quasi_affine(e):
        return False
    period = 1
    for d in _divisors(e):
        period *= d
    if period ** len(syms) > box_limit:
        return False
    incr: list[int | None] = [None] * len(syms)
    for point in itertools.product(range(1, period + 1), repeat=len(syms)):
        env = dict(zip(syms, point))
        base = evaluate(e, env)
        if base < 0:
            return False
        for k, s in enumerate(syms):
            shifted = dict(env)
            shifted[s] += period
            delta = evaluate(e, shifted) - base
            if incr[k] is None:
                incr[k] = delta
            elif incr[k] != delta:
                return False
    return all(d is not None and d >= 0 for d in incr)


def provably_le(a: Expr, b: Expr, params: Iterable[str] = ()) -> bool:
    return provably_nonneg(simplify(BinOp("-", b, a)), params)


def tighten(e: Expr, params: Iterable[str] = ()) -> Expr:
    """Drop min/max arguments that are provably dominated."""
    e = simplify(e)
    if isinstance(e, Call) and e.func in ("min", "max"):
        args = [tighten(a, params) for a in e.args]
        keep = []
        for i, a in enumerate(args):
            dominated = False
            for j, b in enumerate(args):
                if i == j:
                    continue
                if e.func == "min" and provably_le(b, a, params) and (j < i or not provably_le(a, b, params)):
                    dominated = True
                if e.func == "max" and provably_le(a, b, params) and (j < i or not provably_le(b, a, params)):
                    dominated = True
                if dominated:
                    break
            if not dominated:
                keep.append(a)
        if len(keep) == 1:
            return keep[0]
        return simplify(Call(e.func, tuple(keep)))
    return e


def lcm(a: int, b: int) -> int:
    return a * b // math.gcd(a, b)
