# -*- coding: utf-8 -*-
"""
reebpa/expr_dsl.py

Scalar expression language for chart variables.

Contact-form components, vector fields and model parameters arrive in JSON
configs as strings such as "2*r^2*cos(2*th)^2". This module parses them with
a Pratt (top-down operator precedence) parser into an immutable tree and
evaluates that tree with numpy, so the same tree evaluates a single point or
a whole (t, r, th) grid in one call. Zero Python loops over grid cells.

Grammar (highest binding first):
    ^        right-associative
    unary -
    * /
    + -
Names:     t r th x y      (variables)
           pi              (constant)
           sin cos exp sqrt abs   (unary functions)

Error offsets are UTF-8 byte offsets into the source text.
"""

from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass
from typing import Callable, Mapping, Union

import numpy as np

from reebpa.errors import ExprDomainError, ExprSyntaxError, UnboundVariableError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]
Binding = Mapping[str, ArrayLike]

VARIABLES = ("t", "r", "th", "x", "y")
CONSTANTS = {"pi": math.pi}
FUNCTIONS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "sin":  np.sin,
    "cos":  np.cos,
    "exp":  np.exp,
    "sqrt": np.sqrt,
    "abs":  np.abs,
}

# Left binding powers of the infix operators
BINARY_BP = {"+": 10, "-": 10, "*": 20, "/": 20, "^": 30}
UNARY_MINUS_BP = 25

DERIV_STEP = 1e-4


# ---------------------------------------------------------------------------
# Tree
# ---------------------------------------------------------------------------

def _finite_or_raise(value, what: str):
    arr = np.asarray(value)
    if not np.all(np.isfinite(arr)):
        raise ExprDomainError(f"{what} produced a non-finite value")
    return value


class Expression:
    """Base class of all expression nodes. Nodes are immutable."""

    def evaluate(self, binding: Binding) -> ArrayLike:  # pragma: no cover - abstract
        raise NotImplementedError

    def to_text(self) -> str:  # pragma: no cover - abstract
        raise NotImplementedError

    def free_variables(self) -> frozenset:
        return frozenset()

    def __call__(self, **binding) -> ArrayLike:
        return evaluate(self, binding)

    def __str__(self) -> str:
        return self.to_text()


@dataclass(frozen=True)
class Num(Expression):
    value: float

    def evaluate(self, binding):
        return self.value

    def to_text(self) -> str:
        return repr(float(self.value))


@dataclass(frozen=True)
class Var(Expression):
    name: str

    def evaluate(self, binding):
        try:
            return binding[self.name]
        except KeyError:
            raise UnboundVariableError(self.name) from None

    def to_text(self) -> str:
        return self.name

    def free_variables(self) -> frozenset:
        return frozenset({self.name})


@dataclass(frozen=True)
class Const(Expression):
    name: str

    def evaluate(self, binding):
        return CONSTANTS[self.name]

    def to_text(self) -> str:
        return self.name


@dataclass(frozen=True)
class Neg(Expression):
    operand: Expression

    def evaluate(self, binding):
        return -np.asarray(self.operand.evaluate(binding), dtype=float)

    def to_text(self) -> str:
        return f"(-{self.operand.to_text()})"

    def free_variables(self) -> frozenset:
        return self.operand.free_variables()


@dataclass(frozen=True)
class BinOp(Expression):
    op: str
    left: Expression
    right: Expression

    def evaluate(self, binding):
        lhs = np.asarray(self.left.evaluate(binding), dtype=float)
        rhs = np.asarray(self.right.evaluate(binding), dtype=float)
        with np.errstate(all="ignore"):
            if self.op == "+":
                return lhs + rhs
            if self.op == "-":
                return lhs - rhs
            if self.op == "*":
                return lhs * rhs
            if self.op == "/":
                if np.any(rhs == 0.0):
                    raise ExprDomainError("division by zero")
                return lhs / rhs
            # "^": a negative base with a non-integer exponent, or 0 to a
            # negative power, has no real value.
            return _finite_or_raise(np.power(lhs, rhs), "power")

    def to_text(self) -> str:
        return f"({self.left.to_text()} {self.op} {self.right.to_text()})"

    def free_variables(self) -> frozenset:
        return self.left.free_variables() | self.right.free_variables()


@dataclass(frozen=True)
class Call(Expression):
    name: str
    arg: Expression

    def evaluate(self, binding):
        value = np.asarray(self.arg.evaluate(binding), dtype=float)
        if self.name == "sqrt" and np.any(value < 0.0):
            raise ExprDomainError("sqrt of a negative value")
        with np.errstate(all="ignore"):
            return _finite_or_raise(FUNCTIONS[self.name](value), self.name)

    def to_text(self) -> str:
        return f"{self.name}({self.arg.to_text()})"

    def free_variables(self) -> frozenset:
        return self.arg.free_variables()


# ---------------------------------------------------------------------------
# Tokenizer
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _Token:
    kind: str        # NUM | NAME | OP | LPAREN | RPAREN | END
    text: str
    offset: int      # UTF-8 byte offset


_TOKEN_RE = re.compile(
    r"\s*(?:"
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^−])"
    r"|(?P<lparen>\()"
    r"|(?P<rparen>\))"
    r")"
)


def _tokenize(text: str) -> list[_Token]:
    # byte offset of every character position
    byte_at = [0]
    for ch in text:
        byte_at.append(byte_at[-1] + len(ch.encode("utf-8")))

    tokens: list[_Token] = []
    pos = 0
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", byte_at[pos], text)
        kind = m.lastgroup.upper()
        start = m.start(m.lastgroup)
        tok_text = m.group(m.lastgroup)
        if tok_text == "−":
            tok_text = "-"
        tokens.append(_Token(kind, tok_text, byte_at[start]))
        pos = m.end()
    tokens.append(_Token("END", "", byte_at[len(text)]))
    return tokens


# ---------------------------------------------------------------------------
# Pratt parser
# ---------------------------------------------------------------------------

class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0

    @property
    def token(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def error(self, message: str, tok: _Token):
        raise ExprSyntaxError(message, tok.offset, self.text)

    def lbp(self, tok: _Token) -> int:
        if tok.kind == "OP":
            return BINARY_BP[tok.text]
        return 0

    def expression(self, rbp: int = 0) -> Expression:
        left = self.nud(self.advance())
        while rbp < self.lbp(self.token):
            left = self.led(self.advance(), left)
        return left

    def nud(self, tok: _Token) -> Expression:
        if tok.kind == "NUM":
            value = float(tok.text)
            if not math.isfinite(value):
                self.error("numeric literal out of range", tok)
            return Num(value)
        if tok.kind == "NAME":
            return self._name(tok)
        if tok.kind == "OP" and tok.text == "-":
            return Neg(self.expression(UNARY_MINUS_BP))
        if tok.kind == "LPAREN":
            inner = self.expression(0)
            if self.token.kind != "RPAREN":
                self.error("unbalanced parenthesis", self.token)
            self.advance()
            return inner
        if tok.kind == "END":
            self.error("unexpected end of expression", tok)
        self.error(f"unexpected token {tok.text!r}", tok)

    def led(self, tok: _Token, left: Expression) -> Expression:
        bp = BINARY_BP[tok.text]
        # right associativity: bind the right operand one notch looser
        right = self.expression(bp - 1 if tok.text == "^" else bp)
        return BinOp(tok.text, left, right)

    def _name(self, tok: _Token) -> Expression:
        name = tok.text
        if name in FUNCTIONS:
            if self.token.kind != "LPAREN":
                self.error(f"function '{name}' requires an argument list", self.token)
            self.advance()
            arg = self.expression(0)
            if self.token.kind != "RPAREN":
                self.error("unbalanced parenthesis", self.token)
            self.advance()
            return Call(name, arg)
        if name in VARIABLES:
            return Var(name)
        if name in CONSTANTS:
            return Const(name)
        self.error(f"unknown identifier '{name}'", tok)

    def parse(self) -> Expression:
        tree = self.expression(0)
        if self.token.kind == "RPAREN":
            self.error("unbalanced parenthesis", self.token)
        if self.token.kind != "END":
            self.error(f"trailing token {self.token.text!r}", self.token)
        return tree


# ---------------------------------------------------------------------------
# Public API
# ---------------------------------------------------------------------------

def parse(text: str) -> Expression:
    """Parse expression source into a tree.

    Raises:
        ExprSyntaxError: with the UTF-8 byte offset of the offending token.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    return _Parser(text).parse()


def as_expression(value) -> Expression:
    """Accept an Expression, a source string or a plain number (config values)."""
    if isinstance(value, Expression):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not expressions")
    if isinstance(value, (int, float)):
        return Num(float(value))
    return parse(str(value))


def evaluate(e: Expression, binding: Binding) -> ArrayLike:
    """Evaluate `e` under `binding`.

    Scalars in, float out. Arrays in, broadcast ndarray out.

    Raises:
        UnboundVariableError: a free variable of `e` is missing from `binding`.
        ExprDomainError:      division by zero, sqrt of a negative value, or a
                              power / function with no finite real value.
    """
    missing = e.free_variables() - set(binding)
    if missing:
        raise UnboundVariableError(sorted(missing)[0])
    out = np.asarray(e.evaluate(binding), dtype=float)
    return float(out) if out.ndim == 0 else out


def richardson_derivative(fn: Callable[[np.ndarray], ArrayLike], x, h) -> ArrayLike:
    """Central difference with one Richardson step.

    D(h) = (f(x+h) - f(x-h)) / 2h, result = (4 D(h/2) - D(h)) / 3.
    `fn` must accept arrays; `x` and `h` broadcast together.
    """
    x = np.asarray(x, dtype=float)
    h = np.asarray(h, dtype=float)

    def central(step):
        return (np.asarray(fn(x + step)) - np.asarray(fn(x - step))) / (2.0 * step)

    return (4.0 * central(h / 2.0) - central(h)) / 3.0


def num_deriv(e: Expression, var: str, binding: Binding, h: float = DERIV_STEP) -> ArrayLike:
    """Numeric partial derivative of `e` with respect to `var` at `binding`.

    Raises:
        ValueError:      h <= 0.
        ExprDomainError: the stencil leaves the domain of `e`.
    """
    if h <= 0:
        raise ValueError(f"step h must be positive, got {h}")
    if var not in binding:
        raise UnboundVariableError(var)
    base = dict(binding)

    def along(value):
        base[var] = value
        return evaluate(e, base)

    out = richardson_derivative(along, binding[var], h)
    out = np.asarray(out, dtype=float)
    return float(out) if out.ndim == 0 else out
