"""One-variable coefficient formulas: lexer, Pratt parser, printer and evaluators.

Grammar (highest binding first)::

    atom    := number | x | func '(' args ')' | '(' expr ')'
    power   := atom '^' power              (right associative)
    unary   := '-' unary | power
    product := unary (('*' | '/') unary)*
    sum     := product (('+' | '-') product)*

Functions: sin, cos, exp, sqrt, abs (one argument), clamp(x, lo, hi).
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .exceptions import EvaluationError, ExprSyntaxError, UnknownIdentifierError

UNARY_FUNCS = ("sin", "cos", "exp", "sqrt", "abs")
BINARY_OPS = ("+", "-", "*", "/", "^")


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Unary:
    op: str  # "neg" or one of UNARY_FUNCS
    arg: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Clamp:
    arg: "Expr"
    lo: "Expr"
    hi: "Expr"


Expr = Union[Const, Var, Unary, Binary, Clamp]

# ---------------------------------------------------------------- lexer

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str  # number | name | op | end
    text: str
    offset: int  # byte offset into the UTF-8 source


def _tokenize(source: str) -> list[_Token]:
    tokens = []
    pos = 0
    byte_pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {source[pos]!r}", byte_pos)
        text = m.group()
        if m.lastgroup != "ws":
            tokens.append(_Token(m.lastgroup, text, byte_pos))
        pos = m.end()
        byte_pos += len(text.encode("utf-8"))
    tokens.append(_Token("end", "", byte_pos))
    return tokens


# ---------------------------------------------------------------- parser

# binding powers: + - : 10, * / : 20, prefix minus : 30, ^ : 40
_INFIX_BP = {"+": 10, "-": 10, "*": 20, "/": 20, "^": 40}
_PREFIX_NEG_BP = 30


class _Parser:
    def __init__(self, source: str):
        self.tokens = _tokenize(source)
        self.i = 0

    @property
    def tok(self) -> _Token:
        return self.tokens[self.i]

    def advance(self) -> _Token:
        t = self.tokens[self.i]
        self.i += 1
        return t

    def expect(self, text: str) -> None:
        if self.tok.text != text or self.tok.kind == "end":
            got = "end of input" if self.tok.kind == "end" else repr(self.tok.text)
            raise ExprSyntaxError(f"expected {text!r}, got {got}", self.tok.offset)
        self.advance()

    def parse(self) -> Expr:
        e = self.expression(0)
        if self.tok.kind != "end":
            raise ExprSyntaxError(f"unexpected token {self.tok.text!r}", self.tok.offset)
        return e

    def expression(self, rbp: int) -> Expr:
        left = self.nud(self.advance())
        while self.tok.kind == "op" and _INFIX_BP.get(self.tok.text, 0) > rbp:
            op = self.advance().text
            bp = _INFIX_BP[op]
            # ^ is right associative: parse the right side at a lower power
            right = self.expression(bp - 1 if op == "^" else bp)
            left = Binary(op, left, right)
        return left

    def nud(self, t: _Token) -> Expr:
        if t.kind == "number":
            return Const(float(t.text))
        if t.kind == "name":
            if t.text == "x":
                return Var()
            if t.text in UNARY_FUNCS:
                self.expect("(")
                arg = self.expression(0)
                self.expect(")")
                return Unary(t.text, arg)
            if t.text == "clamp":
                self.expect("(")
                arg = self.expression(0)
                self.expect(",")
                lo = self.expression(0)
                self.expect(",")
                hi = self.expression(0)
                self.expect(")")
                return Clamp(arg, lo, hi)
            raise UnknownIdentifierError(f"unknown identifier {t.text!r}", t.offset)
        if t.kind == "op" and t.text == "-":
            return Unary("neg", self.expression(_PREFIX_NEG_BP))
        if t.kind == "op" and t.text == "(":
            e = self.expression(0)
            self.expect(")")
            return e
        what = "end of input" if t.kind == "end" else repr(t.text)
        raise ExprSyntaxError(f"unexpected {what}", t.offset)


def parse_expr(source: str) -> Expr:
    """Parse formula text into an expression tree."""
    if not source or not source.strip():
        raise ExprSyntaxError("empty formula", 0)
    return _Parser(source).parse()


# ---------------------------------------------------------------- printer

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}
_ATOM = 5


def _prec(e: Expr) -> int:
    if isinstance(e, Binary):
        return _PREC[e.op]
    if isinstance(e, Unary) and e.op == "neg":
        return _PREC["neg"]
    return _ATOM


def to_source(e: Expr) -> str:
    """Render with the minimal parentheses needed to re-parse to the same tree."""
    if isinstance(e, Const):
        if not math.isfinite(e.value) or e.value < 0:
            raise ValueError("only finite non-negative constants are printable")
        return repr(float(e.value))
    if isinstance(e, Var):
        return "x"
    if isinstance(e, Clamp):
        return f"clamp({to_source(e.arg)}, {to_source(e.lo)}, {to_source(e.hi)})"
    if isinstance(e, Unary):
        if e.op == "neg":
            inner = to_source(e.arg)
            return f"-{inner}" if _prec(e.arg) >= _PREC["neg"] else f"-({inner})"
        return f"{e.op}({to_source(e.arg)})"
    p = _PREC[e.op]
    left, right = to_source(e.left), to_source(e.right)
    if e.op == "^":
        lpar, rpar = _prec(e.left) <= p, _prec(e.right) < p
    else:
        lpar, rpar = _prec(e.left) < p, _prec(e.right) <= p
    if lpar:
        left = f"({left})"
    if rpar:
        right = f"({right})"
    return f"{left} {e.op} {right}" if p == 1 else f"{left}{e.op}{right}"


# ---------------------------------------------------------------- evaluation


def _check(v: float) -> float:
    if not math.isfinite(v):
        raise EvaluationError("non-finite intermediate value")
    return v


def _sqrt(v: float) -> float:
    if v < 0:
        raise EvaluationError(f"sqrt of negative argument {v!r}")
    return math.sqrt(v)


def _div(a: float, b: float) -> float:
    if b == 0:
        raise EvaluationError("division by zero")
    return _check(a / b)


def _pow(a: float, b: float) -> float:
    try:
        return _check(math.pow(a, b))
    except (ValueError, OverflowError, ZeroDivisionError) as exc:
        raise EvaluationError(f"invalid power {a!r}^{b!r}") from exc


def _exp(v: float) -> float:
    try:
        return math.exp(v)
    except OverflowError as exc:
        raise EvaluationError(f"exp overflow at {v!r}") from exc


_SCALAR_UNARY = {
    "neg": lambda v: -v,
    "sin": math.sin,
    "cos": math.cos,
    "exp": _exp,
    "sqrt": _sqrt,
    "abs": abs,
}
_SCALAR_BINARY = {
    "+": lambda a, b: _check(a + b),
    "-": lambda a, b: _check(a - b),
    "*": lambda a, b: _check(a * b),
    "/": _div,
    "^": _pow,
}


def compile_expr(e: Expr) -> Callable[[float], float]:
    """Build a nested closure evaluating ``e`` on Python floats.

    Several times faster than walking the tree, which matters in the Euler loop.
    """
    if isinstance(e, Const):
        v = float(e.value)
        return lambda x: v
    if isinstance(e, Var):
        return lambda x: x
    if isinstance(e, Unary):
        f, g = _SCALAR_UNARY[e.op], compile_expr(e.arg)
        return lambda x: f(g(x))
    if isinstance(e, Binary):
        f, l, r = _SCALAR_BINARY[e.op], compile_expr(e.left), compile_expr(e.right)
        return lambda x: f(l(x), r(x))
    if isinstance(e, Clamp):
        a, lo, hi = compile_expr(e.arg), compile_expr(e.lo), compile_expr(e.hi)
        return lambda x: min(max(a(x), lo(x)), hi(x))
    raise TypeError(f"not an expression node: {e!r}")


def eval_expr(e: Expr, x: float) -> float:
    """Value of the formula at a finite scalar ``x``."""
    x = float(x)
    if not math.isfinite(x):
        raise EvaluationError("x must be finite")
    return compile_expr(e)(x)


def eval_array(e: Expr, x) -> np.ndarray:
    """Vectorised evaluation over a numpy array, with the same domain checks."""
    x = np.asarray(x, dtype=float)
    with np.errstate(all="ignore"):
        out = _eval_np(e, x)
    out = np.broadcast_to(out, x.shape).astype(float, copy=True)
    if not np.all(np.isfinite(out)):
        raise EvaluationError("non-finite value in vectorised evaluation")
    return out


def _eval_np(e: Expr, x: np.ndarray):
    v = _eval_node(e, x)
    if not np.all(np.isfinite(v)):
        raise EvaluationError("non-finite intermediate value")
    return v


def _eval_node(e: Expr, x: np.ndarray):
    if isinstance(e, Const):
        return np.float64(e.value)
    if isinstance(e, Var):
        return x
    if isinstance(e, Unary):
        v = _eval_np(e.arg, x)
        if e.op == "sqrt":
            if np.any(v < 0):
                raise EvaluationError("sqrt of negative argument")
            return np.sqrt(v)
        return {"neg": np.negative, "sin": np.sin, "cos": np.cos,
                "exp": np.exp, "abs": np.abs}[e.op](v)
    if isinstance(e, Binary):
        a, b = _eval_np(e.left, x), _eval_np(e.right, x)
        if e.op == "/":
            if np.any(b == 0):
                raise EvaluationError("division by zero")
            return a / b
        if e.op == "^":
            r = np.power(a, b)
            if np.any(~np.isfinite(r)):
                raise EvaluationError("invalid power")
            return r
        return {"+": np.add, "-": np.subtract, "*": np.multiply}[e.op](a, b)
    if isinstance(e, Clamp):
        return np.minimum(np.maximum(_eval_np(e.arg, x), _eval_np(e.lo, x)),
                          _eval_np(e.hi, x))
    raise TypeError(f"not an expression node: {e!r}")
