"""Loop and section names: explicit ``id(..)``, implicit counter names, lookup.

Loops and sections share one namespace.  A loop is implicitly named after its
counter unless it carries an ``id``, some other construct is explicitly named
the same, or another loop uses the same counter.  The last case is only an
error once a directive refers to the name.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable

from .diagnostics import (AmbiguousName, BadRange, DuplicateExplicitName,
                          Location, NameResolutionError, UnknownName)
from .frontend.ast import Block, ForLoop, If, Program, Stmt
from .frontend.directive import Directive

if TYPE_CHECKING:
    from .looptree import LoopTree

Path = tuple[int, ...]

EXPLICIT, IMPLICIT, TRANSFORM = "explicit-id", "implicit-counter", "transformation-output"


@dataclass(frozen=True)
class NameEntry:
    name: str
    kind: str  # "loop" | "section"
    origin: str
    handle: Path
    line: int | None = None


@dataclass
class NameTable:
    entries: dict[str, NameEntry] = field(default_factory=dict)
    suppressed: set[str] = field(default_factory=set)
    ambiguous: dict[str, tuple[int | None, ...]] = field(default_factory=dict)
    file: str = "<input>"

    def add(self, entry: NameEntry) -> None:
        old = self.entries.get(entry.name)
        if old is not None and old.handle != entry.handle:
            raise DuplicateExplicitName(
                f"name '{entry.name}' is used for two constructs (lines {old.line} and {entry.line})",
                Location(self.file, entry.line))
        self.entries[entry.name] = entry

    def lookup(self, name: str, where: Location | None = None) -> NameEntry:
        entry = self.entries.get(name)
        if entry is not None:
            return entry
        if name in self.ambiguous:
            lines = ", ".join(str(x) for x in self.ambiguous[name])
            raise AmbiguousName(f"ambiguous loop name '{name}': loops at lines {lines} "
                                f"all use counter '{name}'", where)
        raise UnknownName(f"no loop or section named '{name}'", where)

    def loops_in_order(self) -> list[NameEntry]:
        return sorted((e for e in self.entries.values() if e.kind == "loop"), key=lambda e: e.handle)

    def dump(self) -> str:
        """``name  kind  origin  file:line`` per entry, in schedule order."""
        rows = []
        for e in sorted(self.entries.values(), key=lambda e: (e.handle, e.name)):
            loc = f"{self.file}:{e.line}" if e.line is not None else f"{self.file}:-"
            rows.append(f"{e.name}  {e.kind}  {e.origin}  {loc}")
        return "\n".join(rows)


def _id_of(stmt: Stmt, file: str) -> str | None:
    ids = [d for d in stmt.pragmas if d.kind == "id"]
    if not ids:
        return None
    for d in ids:
        if d.target_kind != "following":
            raise NameResolutionError("renaming a loop through loop(..) id(..) is not supported",
                                      d.location)
    if len(ids) > 1:
        raise DuplicateExplicitName("construct has more than one id(..)", ids[1].location)
    if not isinstance(stmt, (ForLoop, Block)):
        raise NameResolutionError("id(..) applies to loops and compound statements only",
                                  ids[0].location)
    return ids[0].name_clause("id")


def _walk(body: Iterable[Stmt], prefix: Path):
    for k, s in enumerate(body):
        path = prefix + (k,)
        yield path, s
        if isinstance(s, ForLoop):
            yield from _walk((s.body,), path)
        elif isinstance(s, Block):
            yield from _walk(s.body, path)
        elif isinstance(s, If):
            yield from _walk((s.then,), path + (0,))
            if s.orelse is not None:
                yield from _walk((s.orelse,), path + (1,))


def assign_names(program: Program) -> NameTable:
    """Names for the source program, keyed by syntax-tree path."""
    table = NameTable(file=program.file)
    loops: list[tuple[Path, ForLoop]] = []
    explicit_lines: dict[str, int | None] = {}
    for path, s in _walk(program.body, ()):
        ident = _id_of(s, program.file)
        if isinstance(s, ForLoop):
            loops.append((path, s))
        if ident is None:
            continue
        if ident in explicit_lines:
            raise DuplicateExplicitName(
                f"id '{ident}' is given twice (lines {explicit_lines[ident]} and {s.line})",
                Location(program.file, s.line))
        explicit_lines[ident] = s.line
        kind = "loop" if isinstance(s, ForLoop) else "section"
        table.add(NameEntry(ident, kind, EXPLICIT, path, s.line))
    counters: dict[str, list[tuple[Path, ForLoop]]] = {}
    for path, s in loops:
        counters.setdefault(s.counter, []).append((path, s))
    for path, s in loops:
        if _id_of(s, program.file) is not None:
            continue
        name = s.counter
        if name in explicit_lines:
            table.suppressed.add(name)
            continue
        if len(counters[name]) > 1:
            table.suppressed.add(name)
            table.ambiguous[name] = tuple(l.line for _, l in counters[name])
            continue
        table.add(NameEntry(name, "loop", IMPLICIT, path, s.line))
    return table


def table_from_tree(tree: "LoopTree") -> NameTable:
    """Current names of a loop tree; enforces injectivity."""
    from .looptree import Band, SectionMark, walk

    table = NameTable(file=tree.file)
    table.ambiguous = dict(tree.ambiguous)
    for path, node in walk(tree.root):
        if isinstance(node, Band) and node.name is not None:
            table.add(NameEntry(node.name, "loop", node.origin or IMPLICIT, path, node.line))
        elif isinstance(node, SectionMark) and node.name is not None:
            table.add(NameEntry(node.name, "section", EXPLICIT, path, node.line))
    for name in list(table.ambiguous):
        if name in table.entries:
            del table.ambiguous[name]
    return table


def ellipsis_expand(names: list[str] | tuple[str, ...], table: NameTable,
                    where: Location | None = None) -> list[str]:
    """Expand ``a, ..., b`` to the loops between a and b in schedule order."""
    out: list[str] = []
    order = [e.name for e in table.loops_in_order()]
    k = 0
    names = list(names)
    while k < len(names):
        n = names[k]
        if n != "...":
            out.append(n)
            k += 1
            continue
        if not out or k + 1 >= len(names) or names[k + 1] == "...":
            raise BadRange("'...' must stand between two loop names", where)
        start, end = out[-1], names[k + 1]
        for endpoint in (start, end):
            table.lookup(endpoint, where)
            if endpoint not in order:
                raise BadRange(f"'{endpoint}' is not a loop", where)
        a, b = order.index(start), order.index(end)
        if a > b:
            raise BadRange(f"range '{start}, ..., {end}' runs backwards in schedule order", where)
        out.extend(order[a + 1:b + 1])
        k += 2
    return out


def resolve_targets(directive: Directive, table: NameTable) -> list[Path]:
    """Handles of the named targets, in the order written.

    An empty list means the directive applies to the construct that follows it.
    """
    where = directive.location
    if directive.target_kind == "following" or not directive.targets:
        return []
    names = ellipsis_expand(directive.targets, table, where)
    handles = []
    for n in names:
        entry = table.lookup(n, where)
        if directive.target_kind == "loop" and entry.kind == "section" and directive.kind != "distribute":
            raise NameResolutionError(
                f"section '{n}' can only stand for a loop in a distribute directive", where)
        handles.append(entry.handle)
    return handles
