"""Command-line driver: ``looppragma <command> file.ll.c [options]``.

Exit codes: 0 success, 1 diagnostics with skipped directives, 2 assert abort,
name error, runtime error or failed verification, 3 usage or parse error.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import deps
from .codegen import STYLES, emit
from .diagnostics import ExecutionError, LoopPragmaError, NameResolutionError, ParseError
from .frontend import ParserConfig, parse_program
from .interp import DEFAULT_BUDGET, InitSpec, equivalent, run
from .looptree import build_tree, dump_ir
from .xform import apply_all, reports_json

EXIT_OK, EXIT_SKIPPED, EXIT_FAIL, EXIT_USAGE = 0, 1, 2, 3
_VERIFY_MODES = {"memory": "memory", "trace": "memory+trace-multiset",
                 "trace-order": "memory+trace-order"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _param(text: str) -> tuple[str, int]:
    name, sep, value = text.partition("=")
    try:
        if not sep or not name.isidentifier():
            raise ValueError
        return name, int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected NAME=INT, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="looppragma", description="Loop-transformation pragmas for LoopLang.")
    sub = p.add_subparsers(dest="command", metavar="command", parser_class=_Parser)

    def common(sp, policy=True):
        sp.add_argument("input", help="LoopLang source file")
        sp.add_argument("--sentinel", default="omp", help="pragma sentinel (default: omp)")
        if policy:
            sp.add_argument("--policy", choices=("assert", "noassert"),
                            help="override every directive's assert/noassert switch")
            sp.add_argument("--assoc-reductions", action="store_true",
                            help="treat +=/*= reductions as reassociable for fusion and distribution")
            sp.add_argument("--report", metavar="FILE", help="write the JSON transform report")

    def binding(sp):
        sp.add_argument("--param", action="append", type=_param, default=[], metavar="NAME=INT")
        sp.add_argument("--seed", type=int, default=0, help="seed for pseudorandom array contents")
        sp.add_argument("--init", choices=("seeded", "zeros", "sequential"), default="seeded")
        sp.add_argument("--budget", type=int, default=DEFAULT_BUDGET, help="statement-instance limit")

    sp = sub.add_parser("transform", help="apply the directives and emit the result")
    common(sp)
    sp.add_argument("-o", "--output", metavar="FILE")
    sp.add_argument("--style", choices=STYLES, default="looplang")

    sp = sub.add_parser("check", help="report dependences and legality without emitting code")
    common(sp)

    sp = sub.add_parser("run", help="interpret the program as written")
    common(sp, policy=False)
    binding(sp)
    sp.add_argument("--trace", metavar="FILE", help="write the statement-instance trace")

    sp = sub.add_parser("verify", help="apply the directives and compare against the original")
    common(sp)
    binding(sp)
    sp.add_argument("--mode", choices=tuple(_VERIFY_MODES), default="memory")

    sp = sub.add_parser("dump-ir", help="print the loop tree")
    common(sp, policy=False)
    sp.add_argument("--transformed", action="store_true", help="dump after applying directives")

    sp = sub.add_parser("dump-names", help="print the loop and section name table")
    common(sp, policy=False)
    return p


def _load(args):
    path = Path(args.input)
    text = path.read_text()
    program = parse_program(text, ParserConfig(sentinel=args.sentinel, file=str(path)))
    return build_tree(program)


def _apply(args, tree, out=None):
    override = None if args.policy is None else args.policy == "assert"
    result = apply_all(tree, policy_override=override, assoc_reductions=args.assoc_reductions)
    for r in result.reports:
        print(r.line_text(), file=out or sys.stderr)
    if args.report:
        Path(args.report).write_text(reports_json(result.reports) + "\n")
    return result


def _init(args) -> InitSpec:
    return InitSpec.seeded(args.seed) if args.init == "seeded" else InitSpec(args.init)


def _write(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def _cmd_transform(args) -> int:
    result = _apply(args, _load(args))
    if result.aborted:
        return EXIT_FAIL
    _write(emit(result.tree, args.style, args.sentinel), args.output)
    return result.exit_status


def _cmd_check(args) -> int:
    tree = _load(args)
    graph = deps.analyze(tree)
    print(f"dependences: {len(graph)}")
    if len(graph):
        print(graph.report())
    result = _apply(args, tree, sys.stdout)
    return result.exit_status


def _cmd_run(args) -> int:
    state = run(_load(args), dict(args.param), _init(args), budget=args.budget)
    print(state.format_memory())
    if args.trace:
        Path(args.trace).write_text("".join(
            f"{label}({', '.join(map(str, inst))})\n" for label, inst in state.trace))
    return EXIT_OK


def _cmd_verify(args) -> int:
    tree = _load(args)
    result = _apply(args, tree)
    if result.aborted:
        return EXIT_FAIL
    bindings = dict(args.param)
    before = run(tree, bindings, _init(args), budget=args.budget)
    after = run(result.tree, bindings, _init(args), budget=args.budget)
    verdict = equivalent(before, after, _VERIFY_MODES[args.mode], 1e-12 if result.reordering else 0.0)
    print(verdict)
    if not verdict:
        return EXIT_FAIL
    return result.exit_status


def _cmd_dump_ir(args) -> int:
    tree = _load(args)
    if args.transformed:
        result = apply_all(tree)
        if result.aborted:
            return EXIT_FAIL
        tree = result.tree
    print(dump_ir(tree))
    return EXIT_OK


def _cmd_dump_names(args) -> int:
    print(_load(args).names().dump())
    return EXIT_OK


_COMMANDS = {"transform": _cmd_transform, "check": _cmd_check, "run": _cmd_run,
             "verify": _cmd_verify, "dump-ir": _cmd_dump_ir, "dump-names": _cmd_dump_names}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else argv
    if not argv:
        parser.print_help(sys.stderr)
        return EXIT_USAGE
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    if args.command is None:
        parser.print_help(sys.stderr)
        return EXIT_USAGE
    try:
        return _COMMANDS[args.command](args)
    except OSError as exc:
        print(f"looppragma: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ParseError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (NameResolutionError, ExecutionError) as exc:
        print(exc, file=sys.stderr)
        return EXIT_FAIL
    except LoopPragmaError as exc:
        print(exc, file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
