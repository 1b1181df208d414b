"""Directive model, the directive catalog and per-kind clause schemas."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Union

from ..diagnostics import Location, MalformedClause
from ..expr import Cond, Expr, Num, Var, to_source, try_constant

DOTS = Var("...")

Arg = Union[Expr, Cond]

TRANSFORMS = frozenset({
    "stripmine", "block", "tile", "interchange", "coalesce", "concatenate",
    "distribute", "fuse", "reorder", "reverse", "shift", "scale", "split",
    "peel", "unroll", "unrollandjam",
})
ASSUMES = frozenset({"assume_parallel", "assume_coincident", "assume_min_depdist"})
ANNOTATIONS = frozenset({
    "parallel for", "parallel sections", "parallel", "for", "simd", "target",
    "thread_parallelize", "parallelize_thread", "vectorize", "expect_count",
    "pack", "ifconvert", "assume_associative", "assume_commutative",
    "assume_disjoint_access", "assume_nooverflow", "assume_noalias",
    "assume_dereferenceable", "expect_dead", "assume_unrelated",
    "assume_termination",
})
UNSUPPORTED = frozenset({"scatter", "curve", "wavefront", "specialize", "unswitch", "interleave"})
NAMING = frozenset({"id"})
KNOWN = TRANSFORMS | ASSUMES | ANNOTATIONS | UNSUPPORTED | NAMING

POLICY_SWITCHES = ("assert", "noassert", "noversioning", "assume_safety", "suggest_only")
CLAUSE_ALIASES = {"strip_width": "strip_size"}

# clause -> (argument shape, minimum for integers)
_INT, _INTS, _NAME, _NAMES, _EXPR, _COND, _SWITCH = (
    "int", "ints", "name", "names", "expr", "cond", "switch")

SCHEMA: dict[str, dict[str, tuple[str, int]]] = {
    "stripmine": {"strip_size": (_INT, 2), "pit_id": (_NAME, 0), "strip_id": (_NAME, 0)},
    "block": {"pit_size": (_INT, 1), "pit_id": (_NAME, 0), "strip_id": (_NAME, 0)},
    "tile": {"sizes": (_INTS, 1), "pit_ids": (_NAMES, 0), "tile_ids": (_NAMES, 0)},
    "interchange": {"permutation": (_NAMES, 0)},
    "coalesce": {"coalesced_id": (_NAME, 0)},
    "concatenate": {"concatenated_id": (_NAME, 0)},
    "distribute": {"sections": (_NAMES, 0), "distributed_ids": (_NAMES, 0)},
    "fuse": {"fused_id": (_NAME, 0)},
    "reorder": {"order": (_NAMES, 0)},
    "reverse": {},
    "shift": {"offset": (_EXPR, 0)},
    "scale": {"factor": (_INT, 1)},
    "split": {"indices": (_COND, 0)},
    "peel": {"count": (_INT, 0), "side": (_NAME, 0)},
    "unroll": {"factor": (_INT, 2), "full": (_SWITCH, 0)},
    "unrollandjam": {"factor": (_INT, 2)},
    "assume_parallel": {},
    "assume_coincident": {},
    "assume_min_depdist": {"assume_min_depdist": (_INT, 1), "distance": (_INT, 1)},
    "expect_count": {"exact": (_INT, 0), "avg": (_INT, 0), "min": (_INT, 0), "max": (_INT, 0)},
    "id": {"id": (_NAME, 0)},
}

REQUIRED = {
    "stripmine": ("strip_size",),
    "block": ("pit_size",),
    "tile": ("sizes",),
    "shift": ("offset",),
    "scale": ("factor",),
    "split": ("indices",),
    "peel": ("count",),
    "unrollandjam": ("factor",),
    "id": ("id",),
}


@dataclass(frozen=True)
class Policy:
    assert_: bool | None = None  # None: not written, behaves as noassert
    noversioning: bool = False
    assume_safety: bool = False
    suggest_only: bool = False

    @property
    def abort_on_failure(self) -> bool:
        return bool(self.assert_)

    def switches(self) -> list[str]:
        out = []
        if self.assert_ is True:
            out.append("assert")
        elif self.assert_ is False:
            out.append("noassert")
        if self.noversioning:
            out.append("noversioning")
        if self.assume_safety:
            out.append("assume_safety")
        if self.suggest_only:
            out.append("suggest_only")
        return out


@dataclass(frozen=True)
class Directive:
    kind: str
    target_kind: str = "following"  # "loop" | "section" | "following"
    targets: tuple[str, ...] = ()
    clauses: tuple[tuple[str, tuple[Arg, ...]], ...] = ()
    policy: Policy = Policy()
    sentinel: str = "omp"
    line: int | None = field(default=None, compare=False)
    file: str = field(default="<input>", compare=False)
    aliases: tuple[str, ...] = field(default=(), compare=False)

    @property
    def location(self) -> Location:
        return Location(self.file, self.line)

    @property
    def category(self) -> str:
        if self.kind in TRANSFORMS:
            return "transform"
        if self.kind in ASSUMES:
            return "assume"
        if self.kind in NAMING:
            return "naming"
        if self.kind in UNSUPPORTED:
            return "unsupported"
        return "annotation"

    def has(self, key: str) -> bool:
        return any(k == key for k, _ in self.clauses)

    def clause(self, key: str) -> tuple[Arg, ...] | None:
        for k, v in self.clauses:
            if k == key:
                return v
        return None

    def int_clause(self, key: str, default: int | None = None) -> int | None:
        args = self.clause(key)
        if not args:
            return default
        return try_constant(args[0])

    def int_list(self, key: str) -> list[int]:
        return [try_constant(a) for a in self.clause(key) or ()]

    def name_clause(self, key: str) -> str | None:
        args = self.clause(key)
        if not args:
            return None
        a = args[0]
        return a.name if isinstance(a, Var) else None

    def names_clause(self, key: str) -> list[str] | None:
        args = self.clause(key)
        if args is None:
            return None
        return [a.name for a in args if isinstance(a, Var)]

    def with_policy(self, policy: Policy) -> "Directive":
        return replace(self, policy=policy)

    def text(self) -> str:
        """Canonical pragma text after the sentinel."""
        if self.kind == "id" and self.target_kind == "following":
            return f"id({_arg_text(self.clause('id')[0])})"
        parts = []
        if self.target_kind in ("loop", "section"):
            parts.append(f"{self.target_kind}({', '.join(self.targets)})")
        parts.append(self.kind)
        for key, args in self.clauses:
            if not args:
                parts.append(key)
            else:
                parts.append(f"{key}({', '.join(_arg_text(a) for a in args)})")
        parts.extend(self.policy.switches())
        return " ".join(parts)

    def __str__(self) -> str:
        return f"#pragma {self.sentinel} {self.text()}"


def _arg_text(a: Arg) -> str:
    if isinstance(a, Cond):
        return str(a)
    return to_source(a)


def validate(d: Directive) -> None:
    """Check clause shapes against the catalog; raises MalformedClause."""
    loc = d.location
    seen = set()
    for key, _ in d.clauses:
        if key in seen:
            raise MalformedClause(f"duplicate clause '{key}' on '{d.kind}'", loc)
        seen.add(key)
    schema = SCHEMA.get(d.kind)
    if schema is None:
        return  # annotations and unsupported kinds accept free-form clauses
    for key, args in d.clauses:
        if key not in schema:
            raise MalformedClause(f"'{d.kind}' does not accept clause '{key}'", loc)
        shape, minimum = schema[key]
        _check_shape(d, key, args, shape, minimum, loc)
    for key in REQUIRED.get(d.kind, ()):
        if not d.has(key):
            raise MalformedClause(f"'{d.kind}' requires clause '{key}'", loc)
    if d.kind == "peel":
        side = d.name_clause("side")
        if side not in (None, "begin", "end"):
            raise MalformedClause("peel side must be 'begin' or 'end'", loc)
    if d.kind == "unroll" and d.has("full") and d.has("factor"):
        raise MalformedClause("unroll takes either factor(..) or full, not both", loc)
    if d.kind == "tile":
        n = len(d.clause("sizes") or ())
        for key in ("pit_ids", "tile_ids"):
            ids = d.clause(key)
            if ids is not None and len(ids) != n:
                raise MalformedClause(f"tile {key} needs {n} names", loc)
    if d.kind == "assume_min_depdist" and not (d.has("assume_min_depdist") or d.has("distance")):
        raise MalformedClause("assume_min_depdist requires a distance", loc)


def _check_shape(d: Directive, key: str, args, shape: str, minimum: int, loc: Location) -> None:
    if shape == _SWITCH:
        if args:
            raise MalformedClause(f"clause '{key}' takes no argument", loc)
        return
    if not args:
        raise MalformedClause(f"clause '{key}' needs an argument", loc)
    if shape in (_INT, _NAME, _EXPR, _COND) and len(args) != 1:
        raise MalformedClause(f"clause '{key}' takes exactly one argument", loc)
    for a in args:
        if shape in (_INT, _INTS):
            v = try_constant(a) if isinstance(a, Expr) else None
            if v is None:
                raise MalformedClause(f"clause '{key}' needs an integer literal", loc)
            if v < minimum:
                raise MalformedClause(f"clause '{key}' must be >= {minimum}, got {v}", loc)
        elif shape in (_NAME, _NAMES):
            if not isinstance(a, Var):
                raise MalformedClause(f"clause '{key}' needs a name", loc)
            if a is DOTS or a.name == "...":
                if shape == _NAME or d.kind != "interchange":
                    raise MalformedClause(f"'...' is not allowed in '{key}'", loc)
        elif shape == _EXPR:
            if isinstance(a, Cond):
                raise MalformedClause(f"clause '{key}' needs an expression", loc)
        elif shape == _COND:
            if not isinstance(a, Cond) or a.op in ("==", "!="):
                raise MalformedClause(f"clause '{key}' needs a predicate with <, <=, > or >=", loc)


def make(kind: str, *, targets: tuple[str, ...] = (), target_kind: str | None = None,
         policy: Policy = Policy(), **clauses) -> Directive:
    """Programmatic constructor: ``make("tile", targets=("i", "j"), sizes=(4, 4))``."""
    items = []
    for key, val in clauses.items():
        if val is True:
            items.append((key, ()))
            continue
        vals = val if isinstance(val, (tuple, list)) else (val,)
        args = []
        for v in vals:
            if isinstance(v, int):
                args.append(Num(v))
            elif isinstance(v, str):
                args.append(Var(v))
            else:
                args.append(v)
        items.append((key, tuple(args)))
    if target_kind is None:
        target_kind = "loop" if targets else "following"
    d = Directive(kind, target_kind, tuple(targets), tuple(items), policy)
    validate(d)
    return d
