"""First-order sentences over graphs, in a bounded stock of variables.

Formulas talk about one symmetric relation ``~`` (adjacency) and equality.
Concrete syntax, tightest first: ``!``, ``&``, ``|``, ``->`` (right
associative), ``<->`` (non-associative); quantifiers are written ``Ex.`` and
``Ax.`` and bind exactly the unary formula after the dot. Variables are
lowercase identifiers; reusing a name deeper in the formula rebinds it, which
is what makes a fixed variable budget expressive.

evaluate() is plain Tarskian truth on a finite graph, compiled to flat node
arrays so the kernel lane can run the quantifier loops.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from . import kernels
from .graphs import Graph


class ParseError(ValueError):
    def __init__(self, message: str, pos: int):
        super().__init__(f"{message} (at position {pos})")
        self.pos = pos


class Formula:
    """Base class; concrete nodes are the frozen dataclasses below."""

    __slots__ = ()

    def __str__(self) -> str:
        return canonical_print(self)


@dataclass(frozen=True)
class Adj(Formula):
    left: str
    right: str


@dataclass(frozen=True)
class Eq(Formula):
    left: str
    right: str


@dataclass(frozen=True)
class Not(Formula):
    body: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Iff(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Exists(Formula):
    var: str
    body: Formula


@dataclass(frozen=True)
class Forall(Formula):
    var: str
    body: Formula


_TOKEN = re.compile(r"<->|->|[EA]|[a-z][a-z0-9_]*|[&|!~=().]")
_WS = re.compile(r"\s*")


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def error(self, message: str):
        raise ParseError(message, self.pos)

    def peek(self) -> str | None:
        self.pos = _WS.match(self.text, self.pos).end()
        if self.pos >= len(self.text):
            return None
        m = _TOKEN.match(self.text, self.pos)
        if m is None:
            self.error(f"unexpected character {self.text[self.pos]!r}")
        return m.group()

    def take(self) -> str:
        tok = self.peek()
        if tok is None:
            self.error("unexpected end of input")
        self.pos += len(tok)
        return tok

    def expect(self, tok: str) -> None:
        got = self.peek()
        if got != tok:
            self.error(f"expected {tok!r}, found {got!r}")
        self.pos += len(tok)

    def variable(self) -> str:
        tok = self.peek()
        if tok is None or not re.fullmatch(r"[a-z][a-z0-9_]*", tok):
            self.error(f"expected a variable, found {tok!r}")
        self.pos += len(tok)
        return tok

    def iff(self) -> Formula:
        left = self.implies()
        if self.peek() == "<->":
            self.take()
            return Iff(left, self.implies())
        return left

    def implies(self) -> Formula:
        left = self.disjunction()
        if self.peek() == "->":
            self.take()
            return Implies(left, self.implies())
        return left

    def disjunction(self) -> Formula:
        f = self.conjunction()
        while self.peek() == "|":
            self.take()
            f = Or(f, self.conjunction())
        return f

    def conjunction(self) -> Formula:
        f = self.unary()
        while self.peek() == "&":
            self.take()
            f = And(f, self.unary())
        return f

    def unary(self) -> Formula:
        tok = self.peek()
        if tok == "!":
            self.take()
            return Not(self.unary())
        if tok in ("E", "A"):
            self.take()
            var = self.variable()
            self.expect(".")
            body = self.unary()
            return Exists(var, body) if tok == "E" else Forall(var, body)
        return self.atom()

    def atom(self) -> Formula:
        tok = self.peek()
        if tok == "(":
            self.take()
            f = self.iff()
            self.expect(")")
            return f
        left = self.variable()
        op = self.peek()
        if op == "~":
            self.take()
            return Adj(left, self.variable())
        if op == "=":
            self.take()
            return Eq(left, self.variable())
        self.error(f"expected '~' or '=' after {left!r}, found {op!r}")


def parse(text: str) -> Formula:
    p = _Parser(text)
    f = p.iff()
    if p.peek() is not None:
        p.error(f"trailing input {p.peek()!r}")
    return f


_BINOP = {And: "&", Or: "|", Implies: "->", Iff: "<->"}


def canonical_print(f: Formula) -> str:
    """Unambiguous text form; parse(canonical_print(f)) == f."""
    if isinstance(f, Adj):
        return f"({f.left}~{f.right})"
    if isinstance(f, Eq):
        return f"({f.left}={f.right})"
    if isinstance(f, Not):
        return "!" + canonical_print(f.body)
    if isinstance(f, Exists):
        return f"E{f.var}." + canonical_print(f.body)
    if isinstance(f, Forall):
        return f"A{f.var}." + canonical_print(f.body)
    op = _BINOP[type(f)]
    return f"({canonical_print(f.left)}{op}{canonical_print(f.right)})"


def variables(f: Formula) -> frozenset:
    """Every variable name occurring in f, free or bound."""
    if isinstance(f, (Adj, Eq)):
        return frozenset((f.left, f.right))
    if isinstance(f, Not):
        return variables(f.body)
    if isinstance(f, (Exists, Forall)):
        return variables(f.body) | {f.var}
    return variables(f.left) | variables(f.right)


def distinct_variables(f: Formula) -> int:
    """Size of the variable stock the formula uses."""
    return len(variables(f))


def quantifier_depth(f: Formula) -> int:
    if isinstance(f, (Adj, Eq)):
        return 0
    if isinstance(f, Not):
        return quantifier_depth(f.body)
    if isinstance(f, (Exists, Forall)):
        return 1 + quantifier_depth(f.body)
    return max(quantifier_depth(f.left), quantifier_depth(f.right))


def free_variables(f: Formula) -> frozenset:
    if isinstance(f, (Adj, Eq)):
        return frozenset((f.left, f.right))
    if isinstance(f, Not):
        return free_variables(f.body)
    if isinstance(f, (Exists, Forall)):
        return free_variables(f.body) - {f.var}
    return free_variables(f.left) | free_variables(f.right)


def is_sentence(f: Formula) -> bool:
    return not free_variables(f)


_KIND = {Adj: 0, Eq: 1, Not: 2, And: 3, Or: 4, Implies: 5, Iff: 6, Exists: 7, Forall: 8}


def compile_formula(f: Formula):
    """Flatten to (kind, arg1, arg2, root, slot_of_name) node arrays."""
    slots = {name: i for i, name in enumerate(sorted(variables(f)))}
    kind: list[int] = []
    a1: list[int] = []
    a2: list[int] = []

    def emit(node: Formula) -> int:
        k = _KIND[type(node)]
        if isinstance(node, (Adj, Eq)):
            x, y = slots[node.left], slots[node.right]
        elif isinstance(node, Not):
            x, y = emit(node.body), 0
        elif isinstance(node, (Exists, Forall)):
            x, y = slots[node.var], emit(node.body)
        else:
            x, y = emit(node.left), emit(node.right)
        kind.append(k)
        a1.append(x)
        a2.append(y)
        return len(kind) - 1

    root = emit(f)
    return (
        np.array(kind, dtype=np.int8),
        np.array(a1, dtype=np.int32),
        np.array(a2, dtype=np.int32),
        root,
        slots,
    )


def evaluate(f: Formula, g: Graph, env: dict | None = None) -> bool:
    """Truth of f in g under env, which must cover the free variables."""
    env = dict(env or {})
    missing = free_variables(f) - env.keys()
    if missing:
        raise ValueError(f"unbound free variables: {sorted(missing)}")
    for name, v in env.items():
        if not 1 <= v <= g.n:
            raise ValueError(f"env maps {name} to {v}, outside 1..{g.n}")
    kind, a1, a2, root, slots = compile_formula(f)
    env_arr = np.zeros(max(len(slots), 1), dtype=np.int32)
    for name, slot in slots.items():
        env_arr[slot] = env.get(name, 0)
    return bool(
        kernels.eval_formula(kind, a1, a2, root, env_arr, g._indptr, g._nbrs, g.n)
    )
