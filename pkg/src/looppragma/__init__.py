"""Loop-transformation pragmas for the LoopLang toy language.

Parse a program, build its loop tree, apply the directives under their legality
and policy rules, then emit source or run the result through the interpreter.
"""
from .codegen import emit
from .deps import analyze
from .diagnostics import Level, LoopPragmaError
from .frontend import ParserConfig, parse_directive, parse_program
from .interp import InitSpec, equivalent, run
from .looptree import LoopTree, build_tree, dump_ir
from .xform import ApplyResult, apply_all


def load(source: str, file: str = "<input>", sentinel: str = "omp") -> LoopTree:
    """Parse LoopLang text straight into a loop tree."""
    return build_tree(parse_program(source, ParserConfig(sentinel=sentinel, file=file)))


__version__ = "0.1.0"

__all__ = [
    "ApplyResult", "InitSpec", "Level", "LoopPragmaError", "LoopTree", "ParserConfig",
    "analyze", "apply_all", "build_tree", "dump_ir", "emit", "equivalent", "load",
    "parse_directive", "parse_program", "run",
]
