"""LoopLang source and pragma parsing."""
from .ast import ArrayDecl, Assign, Block, ForLoop, If, Program, Stmt
from .directive import Directive, Policy, make
from .parser import ParserConfig, parse_directive, parse_program

__all__ = [
    "ArrayDecl", "Assign", "Block", "Directive", "ForLoop", "If", "ParserConfig",
    "Policy", "Program", "Stmt", "make", "parse_directive", "parse_program",
]
