"""
Expression trees for the surface language.

Grammar (lowest to highest precedence):

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('-' | '+') unary | power
    power  := atom (('^' | '**') unary)?
    atom   := NUMBER | 'pi' | VARIABLE | FUNC '(' expr ')' | '(' expr ')'

Unary minus directly in front of a numeric literal folds into a negative
constant, so the canonical printer output parses back to the same tree.
"""

import itertools
import math
import re
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Sequence, Tuple, Union

import numpy as np

import dual_numbers
from error_handler import (
    ArityError,
    SurfaceSyntaxError,
    UnknownIdentifierError,
)


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class UnaryOp:
    op: str
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Node"


Node = Union[Const, Var, UnaryOp, BinOp, Call]

SURFACE_VARIABLES = frozenset({"u1", "u2"})
SPACE_VARIABLES = frozenset({"x", "y", "z"})
DENSITY_VARIABLES = frozenset({"H", "K"})

NAMED_CONSTANTS = {"pi": math.pi}

_TOKEN_RE = re.compile(
    r"\s*(?:"
    r"(?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>\*\*|[-+*/^(),])"
    r")"
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    position: int


def tokenize(text: str, offset: int = 0) -> List[Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        match = _TOKEN_RE.match(text, pos)
        if not match or match.end() == pos:
            start = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise SurfaceSyntaxError(f"unexpected character {text[start]!r}", offset + start)
        kind = match.lastgroup
        tokens.append(Token(kind, match.group(kind), offset + match.start(kind)))
        pos = match.end()
    tokens.append(Token("end", "", offset + len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, variables: FrozenSet[str], offset: int):
        self.tokens = tokenize(text, offset)
        self.index = 0
        self.variables = variables

    @property
    def current(self) -> Token:
        return self.tokens[self.index]

    def advance(self) -> Token:
        token = self.tokens[self.index]
        self.index += 1
        return token

    def expect(self, text: str):
        token = self.current
        if token.text != text:
            found = token.text or "end of input"
            raise SurfaceSyntaxError(f"expected {text!r}, found {found!r}", token.position)
        return self.advance()

    def parse(self) -> Node:
        node = self.expr()
        if self.current.kind != "end":
            raise SurfaceSyntaxError(f"unexpected {self.current.text!r}", self.current.position)
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.current.text in ("+", "-"):
            op = self.advance().text
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.current.text in ("*", "/"):
            op = self.advance().text
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Node:
        if self.current.text == "-":
            self.advance()
            if self.current.kind == "number" and self.tokens[self.index + 1].text not in ("^", "**"):
                return Const(-float(self.advance().text))
            return UnaryOp("-", self.unary())
        if self.current.text == "+":
            self.advance()
            return self.unary()
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.current.text in ("^", "**"):
            self.advance()
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Node:
        token = self.current
        if token.kind == "number":
            self.advance()
            return Const(float(token.text))
        if token.kind == "name":
            self.advance()
            if token.text in dual_numbers.FUNCTIONS:
                if self.current.text != "(":
                    raise ArityError(f"function {token.text!r} needs one argument", token.position)
                self.advance()
                arg = self.expr()
                if self.current.text == ",":
                    raise ArityError(f"function {token.text!r} takes exactly one argument",
                                     self.current.position)
                self.expect(")")
                return Call(token.text, arg)
            if token.text in self.variables:
                if self.current.text == "(":
                    raise ArityError(f"{token.text!r} is not a function", self.current.position)
                return Var(token.text)
            if token.text in NAMED_CONSTANTS:
                return Const(NAMED_CONSTANTS[token.text])
            raise UnknownIdentifierError(f"unknown identifier {token.text!r}", token.position)
        if token.text == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        found = token.text or "end of input"
        raise SurfaceSyntaxError(f"unexpected {found!r}", token.position)


def parse_expr(text: str, variables: Iterable[str] = SURFACE_VARIABLES, offset: int = 0) -> Node:
    """Parse one expression over the given variable names."""
    return _Parser(text, frozenset(variables), offset).parse()


def split_components(text: str, count: int) -> List[Tuple[str, int]]:
    """Split ``text`` on ';' into ``count`` pieces, keeping start offsets."""
    pieces = []
    start = 0
    for part in text.split(";"):
        pieces.append((part, start))
        start += len(part) + 1
    if len(pieces) != count:
        raise ArityError(f"expected {count} ';'-separated expressions, found {len(pieces)}", len(text))
    return pieces


def print_expr(node: Node) -> str:
    """Canonical, fully parenthesized printer."""
    if isinstance(node, Const):
        text = repr(float(node.value))
        return f"({text})" if node.value < 0 or text.startswith("-") else text
    if isinstance(node, Var):
        return node.name
    if isinstance(node, UnaryOp):
        inner = print_expr(node.operand)
        if isinstance(node.operand, Const) and not inner.startswith("("):
            inner = f"({inner})"
        return f"(-{inner})"
    if isinstance(node, BinOp):
        return f"({print_expr(node.left)} {node.op} {print_expr(node.right)})"
    if isinstance(node, Call):
        return f"{node.func}({print_expr(node.arg)})"
    raise TypeError(f"not an expression node: {node!r}")


def node_count(node: Node) -> int:
    if isinstance(node, (Const, Var)):
        return 1
    if isinstance(node, UnaryOp):
        return 1 + node_count(node.operand)
    if isinstance(node, BinOp):
        return 1 + node_count(node.left) + node_count(node.right)
    return 1 + node_count(node.arg)


def variables(node: Node) -> FrozenSet[str]:
    if isinstance(node, Var):
        return frozenset({node.name})
    if isinstance(node, Const):
        return frozenset()
    if isinstance(node, UnaryOp):
        return variables(node.operand)
    if isinstance(node, BinOp):
        return variables(node.left) | variables(node.right)
    return variables(node.arg)


def evaluate(node: Node, env: Dict[str, object]):
    """Evaluate a tree; values may be floats, numpy arrays, or Duals."""
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Var):
        return env[node.name]
    if isinstance(node, UnaryOp):
        return -evaluate(node.operand, env)
    if isinstance(node, Call):
        return dual_numbers.FUNCTIONS[node.func](evaluate(node.arg, env))

    left = evaluate(node.left, env)
    if node.op == "^" and isinstance(node.right, Const):
        return dual_numbers.power(left, node.right.value)
    right = evaluate(node.right, env)
    if node.op == "+":
        return left + right
    if node.op == "-":
        return left - right
    if node.op == "*":
        return left * right
    if node.op == "/":
        return left / right
    return dual_numbers.power(left, right)


def taylor_partials(nodes: Sequence[Node], names: Sequence[str], values: Sequence, order: int) -> Dict[tuple, np.ndarray]:
    """All partial derivatives of ``nodes`` up to ``order``, exact via nested duals.

    Keys are sorted tuples of variable indices: ``()`` is the value, ``(0,)``
    the derivative by ``names[0]``, ``(0, 1)`` the mixed second derivative and
    so on. Each entry stacks the node results on the last axis.
    """
    shape = np.broadcast(*[np.asarray(v) for v in values]).shape
    out: Dict[tuple, np.ndarray] = {}
    combos = itertools.combinations_with_replacement(range(len(names)), order) if order else [()]
    for combo in combos:
        env = {
            name: dual_numbers.seed(np.asarray(value, dtype=float), [axis == k for axis in combo])
            for k, (name, value) in enumerate(zip(names, values))
        }
        results = [evaluate(node, env) for node in nodes]
        for mask in itertools.product((False, True), repeat=len(combo)):
            key = tuple(sorted(axis for axis, chosen in zip(combo, mask) if chosen))
            if key in out:
                continue
            out[key] = np.stack(
                [np.broadcast_to(np.asarray(dual_numbers.coefficient(r, mask), dtype=float), shape)
                 for r in results],
                axis=-1,
            )
    return out
