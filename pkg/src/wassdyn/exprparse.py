"""Arithmetic expressions for user-defined maps (``expr:x - x^3``).

Grammar (single-pass recursive descent)::

    expr  := term (('+' | '-') term)*
    term  := unary (('*' | '/') unary)*
    unary := '-' unary | power
    power := atom ('^' unary)?          # right-associative
    atom  := number | 'x' | 'x'k | 'pi' | 'e' | '(' expr ')' | func '(' expr {',' expr} ')'

Unary minus binds looser than ``^`` so ``-x^2`` is ``-(x^2)``. There is no implicit
multiplication. Error offsets are byte offsets into the UTF-8 source.
"""

from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from numpy.typing import ArrayLike, NDArray

from wassdyn.errors import EvaluationError, ParseError

logger = logging.getLogger(__name__)

# name -> (min args, max args or None)
FUNCTIONS: dict[str, tuple[int, int | None]] = {
    "sin": (1, 1),
    "cos": (1, 1),
    "exp": (1, 1),
    "tanh": (1, 1),
    "abs": (1, 1),
    "sqrt": (1, 1),
    "min": (2, None),
    "max": (2, None),
}
CONSTANTS = {"pi": math.pi, "e": math.e}

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[-+*/^(),]))"
)
_VARIABLE = re.compile(r"x([1-9][0-9]*)?")


# --------------------------------------------------------------------------- AST


@dataclass(frozen=True)
class Constant:
    value: float
    offset: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Variable:
    index: int  # 1-based coordinate
    offset: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Neg:
    operand: ExprAst
    offset: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Binary:
    op: str
    left: ExprAst
    right: ExprAst
    offset: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple[ExprAst, ...]
    offset: int = field(default=0, compare=False)


ExprAst = Union[Constant, Variable, Neg, Binary, Call]


# --------------------------------------------------------------------------- lexer


@dataclass(frozen=True)
class _Token:
    kind: str  # "num" | "name" | "op" | "end"
    text: str
    offset: int  # character index


def _tokenize(src: str) -> list[_Token]:
    tokens: list[_Token] = []
    pos = 0
    while True:
        while pos < len(src) and src[pos].isspace():
            pos += 1
        if pos >= len(src):
            tokens.append(_Token("end", "", pos))
            return tokens
        m = _TOKEN.match(src, pos)
        if m is None or m.lastgroup is None:
            raise ParseError(f"unexpected character {src[pos]!r}", _byte_offset(src, pos))
        kind = m.lastgroup
        tokens.append(_Token(kind, m.group(kind), m.start(kind)))
        pos = m.end()


def _byte_offset(src: str, index: int) -> int:
    return len(src[:index].encode("utf-8"))


# --------------------------------------------------------------------------- parser


class _Parser:
    def __init__(self, src: str, dim: int) -> None:
        self.src = src
        self.dim = dim
        self.tokens = _tokenize(src)
        self.pos = 0

    @property
    def tok(self) -> _Token:
        return self.tokens[self.pos]

    def error(self, message: str, tok: _Token | None = None) -> ParseError:
        t = tok or self.tok
        return ParseError(message, _byte_offset(self.src, t.offset))

    def take(self) -> _Token:
        t = self.tok
        self.pos += 1
        return t

    def at_op(self, *ops: str) -> bool:
        return self.tok.kind == "op" and self.tok.text in ops

    def expect(self, op: str) -> _Token:
        if not self.at_op(op):
            found = "end of input" if self.tok.kind == "end" else repr(self.tok.text)
            raise self.error(f"expected {op!r}, found {found}")
        return self.take()

    def parse(self) -> ExprAst:
        node = self.expr()
        if self.tok.kind != "end":
            if self.at_op(")"):
                raise self.error("unbalanced ')'")
            raise self.error(f"unexpected trailing token {self.tok.text!r}")
        return node

    def expr(self) -> ExprAst:
        node = self.term()
        while self.at_op("+", "-"):
            t = self.take()
            node = Binary(t.text, node, self.term(), offset=t.offset)
        return node

    def term(self) -> ExprAst:
        node = self.unary()
        while self.at_op("*", "/"):
            t = self.take()
            node = Binary(t.text, node, self.unary(), offset=t.offset)
        return node

    def unary(self) -> ExprAst:
        if self.at_op("-"):
            t = self.take()
            return Neg(self.unary(), offset=t.offset)
        return self.power()

    def power(self) -> ExprAst:
        base = self.atom()
        if self.at_op("^"):
            t = self.take()
            return Binary("^", base, self.unary(), offset=t.offset)
        return base

    def atom(self) -> ExprAst:
        t = self.tok
        if t.kind == "num":
            self.take()
            value = float(t.text)
            if not math.isfinite(value):
                raise self.error(f"numeric literal {t.text!r} is not finite", t)
            return Constant(value, offset=t.offset)
        if t.kind == "name":
            self.take()
            return self.named(t)
        if self.at_op("("):
            self.take()
            node = self.expr()
            if not self.at_op(")"):
                raise self.error("unbalanced '(': missing ')'", t if self.tok.kind == "end" else None)
            self.take()
            return node
        if t.kind == "end":
            raise self.error("unexpected end of input")
        raise self.error(f"unexpected token {t.text!r}")

    def named(self, t: _Token) -> ExprAst:
        name = t.text
        if name in FUNCTIONS:
            if not self.at_op("("):
                raise self.error(f"function {name!r} needs an argument list", t)
            self.take()
            args = [self.expr()]
            while self.at_op(","):
                self.take()
                args.append(self.expr())
            self.expect(")")
            lo, hi = FUNCTIONS[name]
            if len(args) < lo or (hi is not None and len(args) > hi):
                want = str(lo) if hi == lo else f"at least {lo}"
                raise self.error(f"{name} takes {want} argument(s), got {len(args)}", t)
            return Call(name, tuple(args), offset=t.offset)
        if name in CONSTANTS:
            return Constant(CONSTANTS[name], offset=t.offset)
        m = _VARIABLE.fullmatch(name)
        if m is not None:
            index = int(m.group(1) or 1)
            if index > self.dim:
                raise self.error(f"variable {name!r} exceeds dimension {self.dim}", t)
            return Variable(index, offset=t.offset)
        raise self.error(f"unknown identifier {name!r}", t)


def parse_expression(src: str, dim: int = 1) -> ExprAst:
    """Parse ``src`` into an AST over variables ``x1..x{dim}``.

    Raises:
        ParseError: with the byte offset of the offending token.

    """
    if dim < 1:
        raise ValueError(f"dimension must be >= 1, got {dim}")
    if not src or not src.strip():
        raise ParseError("empty expression", 0)
    try:
        return _Parser(src, dim).parse()
    except RecursionError:
        raise ParseError("expression nested too deeply", 0) from None


def split_components(src: str) -> list[tuple[str, int]]:
    """Split on commas outside parentheses; returns ``(text, char offset)`` pairs."""
    parts: list[tuple[str, int]] = []
    depth = 0
    start = 0
    for i, ch in enumerate(src):
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth -= 1
        elif ch == "," and depth == 0:
            parts.append((src[start:i], start))
            start = i + 1
    parts.append((src[start:], start))
    return parts


def parse_map_expression(src: str, dim: int | None = None) -> tuple[ExprAst, ...]:
    """Parse ``d`` comma-separated component expressions of a map ``R^d -> R^d``.

    ``dim`` defaults to the number of components.
    """
    parts = split_components(src)
    d = len(parts) if dim is None else dim
    if len(parts) != d:
        raise ParseError(f"map into R^{d} needs {d} components, got {len(parts)}", 0)
    out = []
    for text, start in parts:
        try:
            out.append(parse_expression(text, d))
        except ParseError as exc:
            raise ParseError(exc.reason, _byte_offset(src, start) + exc.offset) from None
    return tuple(out)


# --------------------------------------------------------------------------- printer


def to_source(node: ExprAst) -> str:
    """Fully parenthesized source text.

    Re-parsing yields an equal AST for anything the parser produces (literals are never
    negative there; a negative ``Constant`` prints as a negation).
    """
    match node:
        case Constant(value=v):
            return repr(float(v)) if v >= 0 else f"(-{repr(float(-v))})"
        case Variable(index=k):
            return f"x{k}"
        case Neg(operand=a):
            return f"(-{to_source(a)})"
        case Binary(op=op, left=a, right=b):
            return f"({to_source(a)} {op} {to_source(b)})"
        case Call(name=name, args=args):
            return f"{name}(" + ", ".join(to_source(a) for a in args) + ")"
    raise TypeError(f"not an expression node: {node!r}")


def max_variable(node: ExprAst) -> int:
    """Highest variable index referenced (0 for constant expressions)."""
    match node:
        case Variable(index=k):
            return k
        case Neg(operand=a):
            return max_variable(a)
        case Binary(left=a, right=b):
            return max(max_variable(a), max_variable(b))
        case Call(args=args):
            return max(max_variable(a) for a in args)
    return 0


# --------------------------------------------------------------------------- evaluation

_UNARY = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "tanh": np.tanh,
    "abs": np.abs,
}


def evaluate(node: ExprAst, points: NDArray[np.float64]) -> NDArray[np.float64]:
    """Vectorized evaluation over an ``(n, d)`` array of points."""
    with np.errstate(all="ignore"):
        return _eval(node, points)


def _fail(message: str, node: ExprAst) -> EvaluationError:
    return EvaluationError(message, node.offset)


def _finite(out: NDArray[np.float64], node: ExprAst, what: str) -> NDArray[np.float64]:
    if not np.all(np.isfinite(out)):
        raise _fail(f"{what} produced a non-finite value", node)
    return out


def _eval(node: ExprAst, pts: NDArray[np.float64]) -> NDArray[np.float64]:
    n = pts.shape[0]
    match node:
        case Constant(value=v):
            return np.full(n, v)
        case Variable(index=k):
            if k > pts.shape[1]:
                raise _fail(f"variable x{k} exceeds point dimension {pts.shape[1]}", node)
            return pts[:, k - 1].astype(np.float64, copy=True)
        case Neg(operand=a):
            return -_eval(a, pts)
        case Binary(op=op, left=a, right=b):
            left = _eval(a, pts)
            right = _eval(b, pts)
            if op == "+":
                return _finite(left + right, node, "addition")
            if op == "-":
                return _finite(left - right, node, "subtraction")
            if op == "*":
                return _finite(left * right, node, "multiplication")
            if op == "/":
                if np.any(right == 0.0):
                    raise _fail("division by zero", node)
                return _finite(left / right, node, "division")
            if op == "^":
                out = np.power(left, right)
                if np.any(np.isnan(out)):
                    raise _fail("power of a negative base to a non-integer exponent", node)
                return _finite(out, node, "power")
        case Call(name=name, args=args):
            vals = [_eval(a, pts) for a in args]
            if name == "sqrt":
                if np.any(vals[0] < 0):
                    raise _fail("sqrt of a negative number", node)
                return np.sqrt(vals[0])
            if name == "min":
                return np.minimum.reduce(vals)
            if name == "max":
                return np.maximum.reduce(vals)
            return _finite(_UNARY[name](vals[0]), node, name)
    raise TypeError(f"not an expression node: {node!r}")


def eval_ast(node: ExprAst, x: ArrayLike) -> float:
    """Evaluate at a single point.

    Raises:
        EvaluationError: sqrt of a negative, division by zero or overflow, with the node offset.

    """
    pt = np.atleast_1d(np.asarray(x, dtype=np.float64)).reshape(1, -1)
    return float(evaluate(node, pt)[0])
