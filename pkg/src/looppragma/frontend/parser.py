"""Recursive-descent parser for LoopLang and the loop-transformation pragma grammar.

See docs/looplang.md for the grammar.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

from ..diagnostics import (Location, MalformedClause, NonAffineExpression,
                           NonCanonicalLoop, ParseError, UnknownTransformation)
from ..expr import (COMPARISONS, BinOp, Call, Cond, Expr, Neg, Num, Real, Ref,
                    Var, try_constant)
from .ast import ArrayDecl, Assign, Block, ForLoop, If, Program, Stmt
from .directive import (CLAUSE_ALIASES, DOTS, KNOWN, POLICY_SWITCHES, Directive,
                        Policy, validate)
from .lexer import Token, tokenize, tokenize_fragment

_KIND_ALIASES = {"unroll_and_jam": "unrollandjam", "collapse": "coalesce"}
_ARRAY_KINDS = {"int": "int", "double": "float64", "float64": "float64", "float": "float64"}
_KEYWORDS = {"for", "if", "else", "param", "array", "int", "double", "min", "max"}


@dataclass(frozen=True)
class ParserConfig:
    sentinel: str = "omp"
    file: str = "<input>"


def parse_program(source_text: str, config: ParserConfig | None = None) -> Program:
    config = config or ParserConfig()
    tokens = tokenize(source_text, config.file)
    return _Parser(tokens, config).program()


def parse_directive(pragma_text: str, config: ParserConfig | None = None, line: int | None = None) -> Directive:
    """Parse one pragma; the ``#pragma`` prefix and the sentinel are optional."""
    config = config or ParserConfig()
    text = pragma_text.strip()
    if text.startswith("#"):
        text = text[1:].lstrip()
        if text.startswith("pragma"):
            text = text[len("pragma"):].strip()
    body = _strip_sentinel(text, config.sentinel)
    if body is None:
        body = text
    return _parse_directive_body(body, config, line or 1)


def _strip_sentinel(text: str, sentinel: str) -> str | None:
    words = sentinel.split()
    rest = text
    for k, w in enumerate(words):
        last = k == len(words) - 1
        if w == "loop" and last and rest.startswith("loop") and rest[4:].lstrip().startswith("("):
            return rest  # hybrid `clang loop(names) ...` form
        if not (rest.startswith(w) and (len(rest) == len(w) or not (rest[len(w)].isalnum() or rest[len(w)] == "_"))):
            return None
        rest = rest[len(w):].lstrip()
    return rest


def _parse_directive_body(body: str, config: ParserConfig, line: int) -> Directive:
    toks = tokenize_fragment(body, line, config.file)
    p = _Parser(toks, config)
    return p.directive()


class _Parser:
    def __init__(self, tokens: list[Token], config: ParserConfig):
        self.toks = tokens
        self.pos = 0
        self.cfg = config
        self.params: list[str] = []
        self.arrays: dict[str, ArrayDecl] = {}
        self.counters: list[str] = []

    # -- token helpers --------------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.toks[self.pos]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.pos + k, len(self.toks) - 1)]

    def loc(self, t: Token | None = None) -> Location:
        t = t or self.tok
        return Location(self.cfg.file, t.line, t.col)

    def at(self, value: str, kind: str | None = None) -> bool:
        t = self.tok
        return t.value == value and (kind is None or t.kind == kind) and t.kind != "pragma"

    def accept(self, value: str) -> bool:
        if self.at(value):
            self.pos += 1
            return True
        return False

    def expect(self, value: str) -> Token:
        if not self.at(value):
            got = self.tok.value or self.tok.kind
            raise ParseError(f"expected '{value}', got '{got}'", self.loc())
        t = self.tok
        self.pos += 1
        return t

    def ident(self) -> str:
        t = self.tok
        if t.kind != "ident":
            raise ParseError(f"expected identifier, got '{t.value or t.kind}'", self.loc())
        self.pos += 1
        return t.value

    # -- program --------------------------------------------------------------

    def program(self) -> Program:
        arrays: list[ArrayDecl] = []
        body: list[Stmt] = []
        pending: list[Directive] = []
        while self.tok.kind != "eof":
            if self.tok.kind == "pragma":
                d = self.pragma_token()
                if d is not None:
                    pending.append(d)
                continue
            if self.at("param", "ident"):
                self.no_pragmas(pending)
                self.param_decl()
            elif self.at("array", "ident"):
                self.no_pragmas(pending)
                arrays.append(self.array_decl())
            else:
                body.append(self.statement(tuple(pending)))
                pending = []
        return Program(tuple(self.params), tuple(arrays), tuple(body), tuple(pending), self.cfg.file)

    def no_pragmas(self, pending: list[Directive]) -> None:
        if pending:
            raise ParseError("a pragma cannot precede a declaration",
                             Location(self.cfg.file, pending[-1].line))

    def pragma_token(self) -> Directive | None:
        t = self.tok
        self.pos += 1
        body = _strip_sentinel(t.value, self.cfg.sentinel)
        if body is None:
            return None  # foreign pragma
        return _parse_directive_body(body, self.cfg, t.line)

    def param_decl(self) -> None:
        self.expect("param")
        self.expect("int")
        while True:
            t = self.tok
            name = self.ident()
            self.check_fresh(name, t)
            self.params.append(name)
            if not self.accept(","):
                break
        self.expect(";")

    def array_decl(self) -> ArrayDecl:
        t0 = self.expect("array")
        kt = self.tok
        kind = _ARRAY_KINDS.get(self.ident())
        if kind is None:
            raise ParseError(f"unknown element type '{kt.value}'", self.loc(kt))
        t = self.tok
        name = self.ident()
        self.check_fresh(name, t)
        dims = []
        while self.accept("["):
            e = self.expr()
            self.check_index(e, self.loc(t), allow_counters=False)
            dims.append(e)
            self.expect("]")
        if not dims:
            raise ParseError(f"array '{name}' needs at least one dimension", self.loc(t))
        self.expect(";")
        decl = ArrayDecl(name, kind, tuple(dims), t0.line)
        self.arrays[name] = decl
        return decl

    def check_fresh(self, name: str, t: Token) -> None:
        if name in _KEYWORDS or name in self.params or name in self.arrays:
            raise ParseError(f"'{name}' is already declared", self.loc(t))

    # -- statements -----------------------------------------------------------

    def statement(self, pragmas: tuple[Directive, ...]) -> Stmt:
        t = self.tok
        if self.at("for", "ident"):
            return self.for_loop(pragmas)
        if self.at("{"):
            return self.block(pragmas)
        if self.at("if", "ident"):
            return self.if_stmt(pragmas)
        if t.kind == "ident":
            return self.assignment(pragmas)
        raise ParseError(f"expected a statement, got '{t.value or t.kind}'", self.loc())

    def block(self, pragmas: tuple[Directive, ...]) -> Block:
        t0 = self.expect("{")
        body: list[Stmt] = []
        pending: list[Directive] = []
        while not self.at("}"):
            if self.tok.kind == "eof":
                raise ParseError("unterminated block", self.loc(t0))
            if self.tok.kind == "pragma":
                d = self.pragma_token()
                if d is not None:
                    pending.append(d)
                continue
            body.append(self.statement(tuple(pending)))
            pending = []
        self.expect("}")
        return Block(tuple(body), pragmas, tuple(pending), t0.line)

    def sub_statement(self) -> Stmt:
        pending: list[Directive] = []
        while self.tok.kind == "pragma":
            d = self.pragma_token()
            if d is not None:
                pending.append(d)
        return self.statement(tuple(pending))

    def for_loop(self, pragmas: tuple[Directive, ...]) -> ForLoop:
        t0 = self.expect("for")
        self.expect("(")
        self.accept("int")
        ct = self.tok
        counter = self.ident()
        if counter in self.counters or counter in self.params or counter in self.arrays or counter in _KEYWORDS:
            raise NonCanonicalLoop(f"loop counter '{counter}' shadows another symbol", self.loc(ct))
        self.expect("=")
        lb = self.expr()
        self.check_index(lb, self.loc(ct))
        self.expect(";")
        t = self.tok
        if self.ident() != counter:
            raise NonCanonicalLoop("loop condition must test the loop counter", self.loc(t))
        if self.accept("<"):
            ub = self.expr()
        elif self.accept("<="):
            ub = BinOp("+", self.expr(), Num(1))
        else:
            raise NonCanonicalLoop("loop condition must be '<' or '<='", self.loc())
        self.check_index(ub, self.loc(t))
        self.expect(";")
        step = self.loop_step(counter)
        self.expect(")")
        self.counters.append(counter)
        try:
            body = self.sub_statement()
        finally:
            self.counters.pop()
        return ForLoop(counter, lb, ub, step, body, pragmas, t0.line)

    def loop_step(self, counter: str) -> int:
        t = self.tok
        if self.accept("++"):
            if self.ident() != counter:
                raise NonCanonicalLoop("increment must update the loop counter", self.loc(t))
            return 1
        if self.ident() != counter:
            raise NonCanonicalLoop("increment must update the loop counter", self.loc(t))
        if self.accept("++"):
            return 1
        if self.accept("+="):
            e = self.expr()
        elif self.accept("="):
            t2 = self.tok
            if self.ident() != counter:
                raise NonCanonicalLoop("increment must have the form i = i + c", self.loc(t2))
            self.expect("+")
            e = self.expr()
        else:
            raise NonCanonicalLoop("loop increment must be '+=' with a positive constant", self.loc())
        step = try_constant(e) if not isinstance(e, Real) else None
        if step is None or step <= 0:
            raise NonCanonicalLoop("loop step must be a positive integer literal", self.loc(t))
        return step

    def if_stmt(self, pragmas: tuple[Directive, ...]) -> If:
        t0 = self.expect("if")
        self.expect("(")
        cond = self.cond()
        self.check_index(cond.left, self.loc(t0))
        self.check_index(cond.right, self.loc(t0))
        self.expect(")")
        then = self.sub_statement()
        orelse = None
        if self.accept("else"):
            orelse = self.sub_statement()
        return If(cond, then, orelse, pragmas, t0.line)

    def assignment(self, pragmas: tuple[Directive, ...]) -> Assign:
        t0 = self.tok
        label = None
        if self.tok.kind == "ident" and self.peek().value == ":":
            label = self.ident()
            self.expect(":")
        t = self.tok
        name = self.ident()
        if name in self.counters:
            raise NonCanonicalLoop(f"loop counter '{name}' is written in the loop body", self.loc(t))
        if name not in self.arrays:
            raise ParseError(f"assignment to undeclared array '{name}'", self.loc(t))
        index = []
        while self.accept("["):
            index.append(self.expr())
            self.expect("]")
        target = Ref(name, tuple(index))
        op_t = self.tok
        if op_t.value not in ("=", "+=", "-=", "*="):
            raise ParseError(f"expected assignment operator, got '{op_t.value}'", self.loc())
        self.pos += 1
        value = self.expr()
        self.expect(";")
        self.check_value(target, self.loc(t))
        self.check_value(value, self.loc(op_t))
        return Assign(target, op_t.value, value, label, pragmas, t0.line)

    # -- expressions ----------------------------------------------------------

    def cond(self) -> Cond:
        left = self.expr()
        op = self.tok.value
        if op not in COMPARISONS:
            raise ParseError(f"expected comparison operator, got '{op}'", self.loc())
        self.pos += 1
        right = self.expr()
        return Cond(op, left, right)

    def expr(self) -> Expr:
        e = self.term()
        while self.tok.value in ("+", "-") and self.tok.kind == "op":
            op = self.tok.value
            self.pos += 1
            e = BinOp(op, e, self.term())
        return e

    def term(self) -> Expr:
        e = self.unary()
        while self.tok.value in ("*", "/", "%") and self.tok.kind == "op":
            op = self.tok.value
            self.pos += 1
            e = BinOp(op, e, self.unary())
        return e

    def unary(self) -> Expr:
        if self.accept("-"):
            return Neg(self.unary())
        if self.accept("+"):
            return self.unary()
        return self.primary()

    def primary(self) -> Expr:
        t = self.tok
        if t.kind == "int":
            self.pos += 1
            return Num(int(t.value))
        if t.kind == "float":
            self.pos += 1
            return Real(float(t.value))
        if self.accept("("):
            e = self.expr()
            self.expect(")")
            return e
        if t.kind == "ident":
            self.pos += 1
            if t.value in ("min", "max") and self.at("("):
                self.expect("(")
                args = [self.expr()]
                while self.accept(","):
                    args.append(self.expr())
                self.expect(")")
                return Call(t.value, tuple(args))
            if self.at("["):
                index = []
                while self.accept("["):
                    index.append(self.expr())
                    self.expect("]")
                return Ref(t.value, tuple(index))
            return Var(t.value)
        raise ParseError(f"unexpected '{t.value or t.kind}' in expression", self.loc())

    # -- semantic checks ------------------------------------------------------

    def check_index(self, e: Expr, loc: Location, allow_counters: bool = True) -> bool:
        """Integer expression must be affine in counters; returns counter-dependence."""
        if isinstance(e, Num):
            return False
        if isinstance(e, Var):
            if e.name in self.counters and allow_counters:
                return True
            if e.name in self.params:
                return False
            raise ParseError(f"unknown symbol '{e.name}' in integer expression", loc)
        if isinstance(e, Real):
            raise ParseError("floating-point literal in integer expression", loc)
        if isinstance(e, Ref):
            raise NonAffineExpression(f"array reference '{e.array}' in integer expression", loc)
        if isinstance(e, Neg):
            return self.check_index(e.operand, loc, allow_counters)
        if isinstance(e, Call):
            deps = [self.check_index(a, loc, allow_counters) for a in e.args]
            return any(deps)
        if isinstance(e, BinOp):
            left = self.check_index(e.left, loc, allow_counters)
            right = self.check_index(e.right, loc, allow_counters)
            if e.op in "+-":
                return left or right
            if e.op == "*":
                if (left and try_constant(e.right) is None) or (right and try_constant(e.left) is None):
                    raise NonAffineExpression(f"non-affine product '{e}'", loc)
                return left or right
            if right:
                raise NonAffineExpression(f"divisor depends on a loop counter in '{e}'", loc)
            return left
        raise ParseError(f"bad integer expression '{e}'", loc)

    def check_value(self, e: Expr, loc: Location) -> None:
        if isinstance(e, Ref):
            decl = self.arrays.get(e.array)
            if decl is None:
                raise ParseError(f"undeclared array '{e.array}'", loc)
            if len(e.index) != len(decl.dims):
                raise ParseError(f"array '{e.array}' has rank {len(decl.dims)}, "
                                 f"accessed with {len(e.index)} subscripts", loc)
            for i in e.index:
                self.check_index(i, loc)
            return
        if isinstance(e, Var):
            if e.name not in self.counters and e.name not in self.params:
                raise ParseError(f"unknown symbol '{e.name}'", loc)
            return
        if isinstance(e, (Num, Real)):
            return
        if isinstance(e, Neg):
            self.check_value(e.operand, loc)
        elif isinstance(e, (BinOp, Call)):
            for c in ((e.left, e.right) if isinstance(e, BinOp) else e.args):
                self.check_value(c, loc)

    # -- directives -----------------------------------------------------------

    def directive(self) -> Directive:
        line = self.tok.line
        loc = Location(self.cfg.file, line)
        target_kind, targets = "following", ()
        if self.tok.value in ("loop", "section") and self.peek().value == "(":
            target_kind = self.ident()
            self.expect("(")
            names = [self.target_name()]
            while self.accept(","):
                names.append(self.target_name())
            self.expect(")")
            targets = tuple(names)
        elif self.tok.value == "section" and self.peek().kind == "ident":
            self.pos += 1  # OpenMP `section` construct marker before `id(..)`
        if self.tok.kind != "ident":
            raise UnknownTransformation(f"expected a directive name, got '{self.tok.value}'", loc)
        kind = self.ident()
        if kind == "parallel" and self.tok.value in ("for", "sections"):
            kind = f"parallel {self.ident()}"
        kind = _KIND_ALIASES.get(kind, kind)
        if kind not in KNOWN:
            raise UnknownTransformation(f"unknown transformation '{kind}'", loc)
        clauses: list[tuple[str, tuple]] = []
        aliases: list[str] = []
        assert_: bool | None = None
        flags = {"noversioning": False, "assume_safety": False, "suggest_only": False}
        if self.at("("):
            clauses.append((kind, self.clause_args()))
        while self.tok.kind != "eof":
            if self.tok.kind != "ident":
                raise MalformedClause(f"unexpected '{self.tok.value}' in directive", loc)
            key = self.ident()
            if key in POLICY_SWITCHES and not self.at("("):
                if key in ("assert", "noassert"):
                    want = key == "assert"
                    if assert_ is not None and assert_ != want:
                        raise MalformedClause("'assert' and 'noassert' are mutually exclusive", loc)
                    assert_ = want
                else:
                    flags[key] = True
                continue
            if key in CLAUSE_ALIASES:
                aliases.append(key)
                key = CLAUSE_ALIASES[key]
            args = self.clause_args() if self.at("(") else ()
            clauses.append((key, args))
        policy = Policy(assert_, **flags)
        d = Directive(kind, target_kind, targets, tuple(clauses), policy,
                      self.cfg.sentinel, line, self.cfg.file, tuple(aliases))
        validate(d)
        return d

    def target_name(self) -> str:
        if self.accept("..."):
            return "..."
        return self.ident()

    def clause_args(self) -> tuple:
        self.expect("(")
        args = [self.clause_arg()]
        while self.accept(","):
            args.append(self.clause_arg())
        self.expect(")")
        return tuple(args)

    def clause_arg(self):
        if self.accept("..."):
            return DOTS
        e = self.expr()
        if self.tok.value in COMPARISONS and self.tok.kind == "op":
            op = self.tok.value
            self.pos += 1
            return Cond(op, e, self.expr())
        return e


def strip_locations(d: Directive) -> Directive:
    return replace(d, line=None)
