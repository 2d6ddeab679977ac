"""Coefficient functions gamma(t): a tiny expression language.

Grammar (whitespace-insensitive)::

    sum     := product (('+' | '-') product)*
    product := unary ('*' unary)*
    unary   := '-' unary | power
    power   := atom (('^' | '**') INT)?
    atom    := NUMBER | 't' | FUNC '(' sum ')' | '(' sum ')'
    FUNC    := 'sin' | 'cos' | 'exp'

so ``-t^2`` is ``-(t^2)`` and ``2*-t`` is allowed. Exponents are nonnegative
integer literals. Evaluation accepts floats or numpy arrays.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .errors import ExprSyntaxError

DEFAULT_GRID = 4096


class Expr:
    __slots__ = ()

    def __add__(self, other):
        return Add(self, _lift(other))

    def __mul__(self, other):
        return Mul(self, _lift(other))

    def __neg__(self):
        return Neg(self)

    def __str__(self):
        return to_text(self)


def _lift(x) -> Expr:
    return x if isinstance(x, Expr) else Const(float(x))


@dataclass(frozen=True)
class Const(Expr):
    value: float


@dataclass(frozen=True)
class Var(Expr):
    pass


@dataclass(frozen=True)
class Add(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Sub(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Mul(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exponent: int


@dataclass(frozen=True)
class Sin(Expr):
    arg: Expr


@dataclass(frozen=True)
class Cos(Expr):
    arg: Expr


@dataclass(frozen=True)
class Exp(Expr):
    arg: Expr


T = Var()
FUNCS = {"sin": Sin, "cos": Cos, "exp": Exp}

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>\*\*|[-+*^()]))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            offset = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ExprSyntaxError(f"unexpected character {text[offset]!r}", _byte_offset(text, offset))
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


def _byte_offset(text: str, char_offset: int) -> int:
    return len(text[:char_offset].encode("utf-8"))


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def fail(self, message: str, tok=None):
        tok = tok or self.peek()
        raise ExprSyntaxError(message, _byte_offset(self.text, tok[2]))

    def take(self, value: str):
        tok = self.peek()
        if tok[1] != value or tok[0] == "num":
            self.fail(f"expected {value!r}" + (f", found {tok[1]!r}" if tok[1] else ", found end of input"))
        self.i += 1

    def parse(self) -> Expr:
        e = self.sum()
        if self.peek()[0] != "end":
            self.fail(f"unexpected {self.peek()[1]!r}")
        return e

    def sum(self) -> Expr:
        e = self.product()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.peek()[1]
            self.i += 1
            rhs = self.product()
            e = Add(e, rhs) if op == "+" else Sub(e, rhs)
        return e

    def product(self) -> Expr:
        e = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] == "*":
            self.i += 1
            e = Mul(e, self.unary())
        return e

    def unary(self) -> Expr:
        if self.peek()[0] == "op" and self.peek()[1] == "-":
            self.i += 1
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        tok = self.peek()
        if tok[0] == "op" and tok[1] in ("^", "**"):
            self.i += 1
            num = self.peek()
            if num[0] != "num" or not re.fullmatch(r"\d+", num[1]):
                self.fail("exponent must be a nonnegative integer literal", num)
            self.i += 1
            return Pow(base, int(num[1]))
        return base

    def atom(self) -> Expr:
        kind, value, _ = tok = self.peek()
        if kind == "num":
            self.i += 1
            v = float(value)
            if not math.isfinite(v):
                self.fail("numeric literal out of range", tok)
            return Const(v)
        if kind == "name":
            self.i += 1
            if value == "t":
                return T
            if value in FUNCS:
                self.take("(")
                arg = self.sum()
                self.take(")")
                return FUNCS[value](arg)
            self.fail(f"unknown identifier {value!r}", tok)
        if kind == "op" and value == "(":
            self.i += 1
            e = self.sum()
            self.take(")")
            return e
        self.fail("expected a number, 't', a function or '('" if kind != "end" else "unexpected end of input")


def parse(text: str) -> Expr:
    if not text or not text.strip():
        raise ExprSyntaxError("empty expression", 0)
    return _Parser(text).parse()


def to_text(e: Expr) -> str:
    """Fully parenthesized text that parses back to the same tree."""
    if isinstance(e, Const):
        if e.value < 0 or math.copysign(1.0, e.value) < 0:
            return f"(0 - {repr(-e.value)})"
        return repr(e.value)
    if isinstance(e, Var):
        return "t"
    if isinstance(e, Add):
        return f"({to_text(e.left)} + {to_text(e.right)})"
    if isinstance(e, Sub):
        return f"({to_text(e.left)} - {to_text(e.right)})"
    if isinstance(e, Mul):
        return f"({to_text(e.left)} * {to_text(e.right)})"
    if isinstance(e, Neg):
        return f"(-{to_text(e.arg)})"
    if isinstance(e, Pow):
        base = to_text(e.base)
        if isinstance(e.base, Pow) or (isinstance(e.base, Const) and base.startswith("(0 -")):
            base = f"({base})"
        return f"{base}^{e.exponent}"
    for name, cls in FUNCS.items():
        if isinstance(e, cls):
            return f"{name}({to_text(e.arg)})"
    raise TypeError(f"not an expression node: {e!r}")


def evaluate(e: Expr, t):
    """Value of e at t (float or numpy array)."""
    if isinstance(e, Const):
        return e.value + 0.0 * t if isinstance(t, np.ndarray) else e.value
    if isinstance(e, Var):
        return t
    if isinstance(e, Add):
        return evaluate(e.left, t) + evaluate(e.right, t)
    if isinstance(e, Sub):
        return evaluate(e.left, t) - evaluate(e.right, t)
    if isinstance(e, Mul):
        return evaluate(e.left, t) * evaluate(e.right, t)
    if isinstance(e, Neg):
        return -evaluate(e.arg, t)
    if isinstance(e, Pow):
        return evaluate(e.base, t) ** e.exponent
    if isinstance(e, Sin):
        return np.sin(evaluate(e.arg, t))
    if isinstance(e, Cos):
        return np.cos(evaluate(e.arg, t))
    if isinstance(e, Exp):
        return np.exp(evaluate(e.arg, t))
    raise TypeError(f"not an expression node: {e!r}")


def eval_float(e: Expr, t: float) -> float:
    return float(evaluate(e, float(t)))


# constant-folding constructors used by the differentiator

def _add(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value + b.value)
    if a == Const(0.0):
        return b
    if b == Const(0.0):
        return a
    return Add(a, b)


def _mul(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value * b.value)
    if a == Const(0.0) or b == Const(0.0):
        return Const(0.0)
    if a == Const(1.0):
        return b
    if b == Const(1.0):
        return a
    return Mul(a, b)


def _neg(a: Expr) -> Expr:
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def _derive(e: Expr) -> Expr:
    if isinstance(e, Const):
        return Const(0.0)
    if isinstance(e, Var):
        return Const(1.0)
    if isinstance(e, Add):
        return _add(_derive(e.left), _derive(e.right))
    if isinstance(e, Sub):
        return _add(_derive(e.left), _neg(_derive(e.right)))
    if isinstance(e, Mul):
        return _add(_mul(_derive(e.left), e.right), _mul(e.left, _derive(e.right)))
    if isinstance(e, Neg):
        return _neg(_derive(e.arg))
    if isinstance(e, Pow):
        if e.exponent == 0:
            return Const(0.0)
        inner = Const(1.0) if e.exponent == 1 else (e.base if e.exponent == 2 else Pow(e.base, e.exponent - 1))
        return _mul(_mul(Const(float(e.exponent)), inner), _derive(e.base))
    if isinstance(e, Sin):
        return _mul(Cos(e.arg), _derive(e.arg))
    if isinstance(e, Cos):
        return _neg(_mul(Sin(e.arg), _derive(e.arg)))
    if isinstance(e, Exp):
        return _mul(e, _derive(e.arg))
    raise TypeError(f"not an expression node: {e!r}")


def differentiate(e: Expr, j: int = 1) -> Expr:
    if j < 1:
        raise ValueError("derivative order must be >= 1")
    for _ in range(j):
        e = _derive(e)
    return e


def is_zero(e: Expr) -> bool:
    return isinstance(e, Const) and e.value == 0.0


def bound_abs(e: Expr, gridpoints: int = DEFAULT_GRID) -> float:
    """max |e(t)| over a uniform grid on [0, 1].

    A grid estimate, not a certified bound.
    """
    if gridpoints < 2:
        raise ValueError("need at least two grid points")
    grid = np.linspace(0.0, 1.0, gridpoints)
    return float(np.max(np.abs(evaluate(e, grid))))
