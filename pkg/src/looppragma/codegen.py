"""Source emission for loop trees and syntax trees."""
from __future__ import annotations

from .expr import BinOp, Num, to_source, try_constant
from .frontend.ast import ArrayDecl, Assign, Block, ForLoop, If, Program, Stmt
from .frontend.directive import Directive
from .looptree import LoopTree, emit_ast

STYLES = ("looplang", "pretty-c")
_INDENT = "  "
_C_TYPES = {"int": "int", "float64": "double"}


def emit(tree: LoopTree | Program, style: str = "looplang", sentinel: str = "omp") -> str:
    """Deterministic text for a loop tree; ``looplang`` output parses back."""
    if style not in STYLES:
        raise ValueError(f"unknown style {style!r}; expected one of {', '.join(STYLES)}")
    program = tree if isinstance(tree, Program) else emit_ast(tree)
    return _Printer(style, sentinel).program(program)


def print_program(program: Program, sentinel: str = "omp") -> str:
    return emit(program, "looplang", sentinel)


def _upper(ub) -> tuple[str, str]:
    """Loop condition operator and bound; `e + 1` with symbolic e prints as `<= e`."""
    if try_constant(ub) is None and isinstance(ub, BinOp) and ub.op == "+" and ub.right == Num(1):
        return "<=", to_source(ub.left)
    return "<", to_source(ub)


class _Printer:
    def __init__(self, style: str, sentinel: str):
        self.c = style == "pretty-c"
        self.sentinel = sentinel
        self.lines: list[str] = []

    def out(self, depth: int, text: str) -> None:
        self.lines.append(_INDENT * depth + text)

    def pragma(self, depth: int, d: Directive) -> None:
        self.out(depth, f"#pragma {self.sentinel} {d.text()}")

    def program(self, p: Program) -> str:
        if p.params:
            prefix = "const int" if self.c else "param int"
            self.out(0, f"{prefix} {', '.join(p.params)};")
        for a in p.arrays:
            self.out(0, self.decl(a))
        for s in p.body:
            self.stmt(s, 0)
        for d in p.trailing:
            self.pragma(0, d)
        return "\n".join(self.lines) + "\n"

    def decl(self, a: ArrayDecl) -> str:
        dims = "".join(f"[{to_source(d)}]" for d in a.dims)
        kind = _C_TYPES[a.kind] if self.c else ("int" if a.kind == "int" else "double")
        prefix = "" if self.c else "array "
        return f"{prefix}{kind} {a.name}{dims};"

    def stmt(self, s: Stmt, depth: int) -> None:
        for d in s.pragmas:
            self.pragma(depth, d)
        if isinstance(s, ForLoop):
            op, bound = _upper(s.ub)
            inc = f"{s.counter} += {s.step}"
            self.out(depth, f"for (int {s.counter} = {to_source(s.lb)}; {s.counter} {op} {bound}; {inc})")
            self.body(s.body, depth)
        elif isinstance(s, Block):
            self.out(depth, "{")
            for c in s.body:
                self.stmt(c, depth + 1)
            for d in s.trailing:
                self.pragma(depth + 1, d)
            self.out(depth, "}")
        elif isinstance(s, If):
            self.out(depth, f"if ({s.cond})")
            self.body(s.then, depth)
            if s.orelse is not None:
                self.out(depth, "else")
                self.body(s.orelse, depth)
        elif isinstance(s, Assign):
            text = f"{to_source(s.target)} {s.op} {to_source(s.value)};"
            if s.label is not None:
                text = f"{text}  /* {s.label} */" if self.c else f"{s.label}: {text}"
            self.out(depth, text)
        else:
            raise TypeError(s)

    def body(self, s: Stmt, depth: int) -> None:
        if isinstance(s, Block) and not s.pragmas:
            self.stmt(s, depth)
        else:
            self.stmt(s, depth + 1)
