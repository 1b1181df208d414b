"""Random LoopLang programs paired with one applicable transformation directive.

Nests are at most three deep, use at most three arrays, and subscripts are
affine in the enclosing counters with coefficients in [-2, 2].  Every loop
extent is at most 6 once ``n`` is bound (1 <= n <= 6), so the programs are small
enough for the instance-pair oracle.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field

OFFSET = 32  # keeps every subscript non-negative: |sum| <= 2 * 5 * 3
DIM = 64


@dataclass
class _Loop:
    counter: str
    lb: str
    ub: str
    body: list = field(default_factory=list)  # _Loop | str

    def perfect_depth(self) -> int:
        if len(self.body) == 1 and isinstance(self.body[0], _Loop):
            return 1 + self.body[0].perfect_depth()
        return 1


@dataclass
class Case:
    source: str
    directive: str
    kind: str
    bindings: dict
    seed: int


class _Gen:
    def __init__(self, rng: random.Random):
        self.rng = rng
        self.counters = iter("abcdefghpqrstuvw")
        self.label = 0
        narr = rng.randint(1, 3)
        self.arrays = []
        for k in range(narr):
            rank = rng.choice((1, 1, 2))
            kind = rng.choice(("int", "double"))
            self.arrays.append((f"{'XYZ'[k]}", kind, rank))

    def subscript(self, ctrs: list[str]) -> str:
        # half the subscripts use one counter, which keeps many reorderings provable
        used = ctrs
        if ctrs and self.rng.random() < 0.5:
            used = [self.rng.choice(ctrs)]
        terms = []
        for c in used:
            coef = self.rng.randint(-2, 2)
            if coef:
                terms.append(f"{coef}*{c}" if abs(coef) != 1 else (c if coef == 1 else f"-{c}"))
        text = " + ".join(terms).replace("+ -", "- ")
        if text and len(used) == 1:
            return f"{text} + {OFFSET + self.rng.randint(-2, 2)}"
        return f"{text} + {OFFSET}" if text else str(OFFSET + self.rng.randint(-2, 2))

    def ref(self, arr, ctrs) -> str:
        name, _, rank = arr
        return name + "".join(f"[{self.subscript(ctrs)}]" for _ in range(rank))

    def statement(self, ctrs: list[str]) -> str:
        rng = self.rng
        target = rng.choice(self.arrays)
        srcs = [self.ref(rng.choice(self.arrays), ctrs) for _ in range(rng.randint(1, 2))]
        label = f"S{self.label}"
        self.label += 1
        op = rng.choice(("=", "=", "+="))
        if target[1] == "int":
            if op == "+=":
                value = f"{srcs[0]} % 7"
            else:
                value = f"({' + '.join(srcs)} + {rng.randint(1, 5)}) % 1009"
        else:
            parts = [f"0.5*{srcs[0]}"] + [f"0.25*{s}" for s in srcs[1:]]
            value = " + ".join(parts) + f" + {rng.randint(1, 3)}.0"
        return f"{label}: {self.ref(target, ctrs)} {op} {value};"

    def loop(self, depth: int, outer: list[str]) -> _Loop:
        rng = self.rng
        c = next(self.counters)
        lb = rng.choice(("0", "0", "1"))
        ub = rng.choice(("n", "n", "4", "5", "6", "n - 1"))
        if outer and rng.random() < 0.2:
            lb = outer[-1]
            ub = rng.choice(("n", "6"))
        node = _Loop(c, lb, ub)
        ctrs = outer + [c]
        if depth > 1:
            inner = self.loop(depth - 1, ctrs)
            if rng.random() < 0.7:
                node.body = [inner]
            else:
                before = [self.statement(ctrs) for _ in range(rng.randint(0, 1))]
                after = [self.statement(ctrs) for _ in range(rng.randint(0 if before else 1, 1))]
                node.body = before + [inner] + after
        else:
            node.body = [self.statement(ctrs) for _ in range(rng.randint(1, 2))]
        return node


def _emit(node, depth: int, out: list[str]) -> None:
    pad = "  " * depth
    if isinstance(node, str):
        out.append(pad + node)
        return
    out.append(f"{pad}for (int {node.counter} = {node.lb}; {node.counter} < {node.ub}; {node.counter} += 1) {{")
    for c in node.body:
        _emit(c, depth + 1, out)
    out.append(pad + "}")


def _loops(node, acc):
    if isinstance(node, _Loop):
        acc.append(node)
        for c in node.body:
            _loops(c, acc)
    return acc


def _chain(node: _Loop, depth: int) -> list[str]:
    out = [node.counter]
    while len(out) < depth:
        node = node.body[0]
        out.append(node.counter)
    return out


def _directive(rng: random.Random, nests: list[_Loop]) -> tuple[str, str]:
    loops = [l for n in nests for l in _loops(n, [])]
    options = ["reverse", "stripmine", "unroll", "shift", "scale", "split", "peel", "block"]
    chains = [l for l in loops if l.perfect_depth() >= 2]
    if chains:
        options += ["interchange", "interchange", "tile", "tile", "unrollandjam", "coalesce"]
    if any(sum(isinstance(c, _Loop) for c in l.body) + sum(isinstance(c, str) for c in l.body) >= 2
           for l in loops):
        options += ["distribute", "distribute"]
    if len(nests) >= 2:
        options += ["fuse", "fuse", "fuse", "concatenate", "reorder"]
    kind = rng.choice(options)
    one = rng.choice(loops).counter
    if kind == "reverse":
        return kind, f"loop({one}) reverse"
    if kind == "stripmine":
        return kind, f"loop({one}) stripmine strip_size({rng.randint(2, 3)})"
    if kind == "unroll":
        return kind, f"loop({one}) unroll factor({rng.randint(2, 3)})"
    if kind == "shift":
        return kind, f"loop({one}) shift offset({rng.randint(-2, 3)})"
    if kind == "scale":
        return kind, f"loop({one}) scale factor({rng.randint(2, 3)})"
    if kind == "split":
        return kind, f"loop({one}) split indices({one} > {rng.randint(0, 4)})"
    if kind == "peel":
        return kind, f"loop({one}) peel count({rng.randint(1, 2)})"
    if kind == "block":
        return kind, f"loop({one}) block pit_size({rng.randint(2, 3)})"
    if kind in ("interchange", "tile", "unrollandjam", "coalesce"):
        top = rng.choice(chains)
        depth = rng.randint(2, min(3, top.perfect_depth()))
        chain = _chain(top, depth)
        if kind == "interchange":
            perm = chain[:]
            while perm == chain:
                rng.shuffle(perm)
            return kind, f"loop({', '.join(chain)}) interchange permutation({', '.join(perm)})"
        if kind == "tile":
            sizes = ", ".join(str(rng.randint(2, 3)) for _ in chain)
            return kind, f"loop({', '.join(chain)}) tile sizes({sizes})"
        if kind == "unrollandjam":
            return kind, f"loop({chain[0]}) unrollandjam factor({rng.randint(2, 3)})"
        return kind, f"loop({', '.join(chain)}) coalesce"
    if kind == "distribute":
        cands = [l for l in loops if len(l.body) >= 2]
        return kind, f"loop({rng.choice(cands).counter}) distribute"
    a, b = nests[0].counter, nests[1].counter
    if kind == "reorder":
        return kind, f"loop({a}, {b}) reorder"
    return kind, f"loop({a}, {b}) {kind}"


def generate(seed: int) -> Case:
    rng = random.Random(seed)
    g = _Gen(rng)
    nests = [g.loop(rng.randint(1, 3), []) for _ in range(rng.choice((1, 1, 2)))]
    if len(nests) == 2 and rng.random() < 0.6:
        # matching iteration spaces make fusion and reordering applicable
        nests[1].lb, nests[1].ub = nests[0].lb, nests[0].ub
    kind, directive = _directive(rng, nests)
    lines = ["param int n;"]
    for name, elem, rank in g.arrays:
        lines.append(f"array {elem} {name}{f'[{DIM}]' * rank};")
    for n in nests:
        _emit(n, 0, lines)
    lines.append(f"#pragma omp {directive}")
    return Case("\n".join(lines) + "\n", directive, kind, {"n": rng.randint(1, 6)}, seed)


def corpus(count: int, start: int = 0) -> list[Case]:
    return [generate(s) for s in range(start, start + count)]
