"""Syntax tree of a LoopLang translation unit.

Source positions are excluded from equality so that a printed and re-parsed
program compares equal to the original.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Union

from ..expr import Cond, Expr, Ref
from .directive import Directive

ELEMENT_KINDS = ("int", "float64")


@dataclass(frozen=True)
class ArrayDecl:
    name: str
    kind: str  # "int" | "float64"
    dims: tuple[Expr, ...]
    line: int | None = field(default=None, compare=False)


@dataclass(frozen=True)
class Assign:
    target: Ref
    op: str  # "=", "+=", "-=", "*="
    value: Expr
    label: str | None = None
    pragmas: tuple[Directive, ...] = ()
    line: int | None = field(default=None, compare=False)


@dataclass(frozen=True)
class ForLoop:
    counter: str
    lb: Expr
    ub: Expr  # exclusive
    step: int
    body: "Stmt"
    pragmas: tuple[Directive, ...] = ()
    line: int | None = field(default=None, compare=False)


@dataclass(frozen=True)
class Block:
    body: tuple["Stmt", ...]
    pragmas: tuple[Directive, ...] = ()
    trailing: tuple[Directive, ...] = ()
    line: int | None = field(default=None, compare=False)


@dataclass(frozen=True)
class If:
    cond: Cond
    then: "Stmt"
    orelse: "Stmt | None" = None
    pragmas: tuple[Directive, ...] = ()
    line: int | None = field(default=None, compare=False)


Stmt = Union[Assign, ForLoop, Block, If]


@dataclass(frozen=True)
class Program:
    params: tuple[str, ...] = ()
    arrays: tuple[ArrayDecl, ...] = ()
    body: tuple[Stmt, ...] = ()
    trailing: tuple[Directive, ...] = ()
    file: str = field(default="<input>", compare=False)

    def array(self, name: str) -> ArrayDecl:
        for a in self.arrays:
            if a.name == name:
                return a
        raise KeyError(name)

    @property
    def directives(self) -> list[Directive]:
        """Every directive in textual order."""
        out: list[Directive] = []
        for s in self.body:
            out.extend(_stmt_directives(s))
        out.extend(self.trailing)
        return out

    def walk(self) -> Iterator[Stmt]:
        for s in self.body:
            yield from walk_stmt(s)


def _stmt_directives(s: Stmt) -> list[Directive]:
    out = list(s.pragmas)
    if isinstance(s, ForLoop):
        out.extend(_stmt_directives(s.body))
    elif isinstance(s, Block):
        for c in s.body:
            out.extend(_stmt_directives(c))
        out.extend(s.trailing)
    elif isinstance(s, If):
        out.extend(_stmt_directives(s.then))
        if s.orelse is not None:
            out.extend(_stmt_directives(s.orelse))
    return out


def walk_stmt(s: Stmt) -> Iterator[Stmt]:
    yield s
    if isinstance(s, ForLoop):
        yield from walk_stmt(s.body)
    elif isinstance(s, Block):
        for c in s.body:
            yield from walk_stmt(c)
    elif isinstance(s, If):
        yield from walk_stmt(s.then)
        if s.orelse is not None:
            yield from walk_stmt(s.orelse)
