"""A small arithmetic expression language for defining objectives and
constraints in text form.

Grammar (whitespace insignificant, ASCII):

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := atom ('^' signed_number)*
    atom    := number | variable | func '(' expr (',' expr)* ')' | '(' expr ')'

Precedence is ^ > unary minus > * / > + -, with + - * / left-associative.
Exponents must be numeric literals (optionally signed).  Variables are
x1..xn for a declared dimension n.  Functions: sin, cos, tan, sqrt, abs,
exp, log, min, max (min/max take two or more arguments, the rest exactly
one).

Expr objects are immutable; evaluation is reentrant and safe to call
concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_FUNCTIONS = {"sin", "cos", "tan", "sqrt", "abs", "exp", "log", "min", "max"}
_VARIADIC = {"min", "max"}


class ExpressionError(ValueError):
    """Syntax or validation error in an expression, with a position."""

    def __init__(self, message: str, position: int | None = None):
        self.position = position
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)


class EvaluationError(ArithmeticError):
    """Domain violation while evaluating an expression (sqrt of a negative,
    log of a non-positive value, division by zero).  Carries the offending
    subexpression."""

    def __init__(self, message: str, subexpression: "Expr"):
        self.subexpression = subexpression
        super().__init__(f"{message} in '{subexpression}'")


class Expr:
    """Base class for AST nodes.  Subclasses are frozen dataclasses."""

    __slots__ = ()

    def eval(self, x) -> float:
        raise NotImplementedError

    def _eval_batch(self, cols: list) -> np.ndarray:
        raise NotImplementedError

    def __str__(self) -> str:
        return self._fmt()

    def _fmt(self, parent: int = 0) -> str:
        raise NotImplementedError


# precedence levels used when printing: addition 1, multiplication 2,
# unary minus 3, power 4, atoms 5
@dataclass(frozen=True)
class Const(Expr):
    value: float

    def eval(self, x):
        return self.value

    def _eval_batch(self, cols):
        return np.full(cols[0].shape if cols else (1,), self.value)

    def _fmt(self, parent=0):
        if self.value < 0:
            s = repr(self.value)
            return f"({s})" if parent > 0 else s
        return repr(self.value)


@dataclass(frozen=True)
class Var(Expr):
    index: int  # zero-based

    def eval(self, x):
        return float(x[self.index])

    def _eval_batch(self, cols):
        return cols[self.index]

    def _fmt(self, parent=0):
        return f"x{self.index + 1}"


@dataclass(frozen=True)
class Neg(Expr):
    child: Expr

    def eval(self, x):
        return -self.child.eval(x)

    def _eval_batch(self, cols):
        return -self.child._eval_batch(cols)

    def _fmt(self, parent=0):
        s = f"-{self.child._fmt(3)}"
        return f"({s})" if parent > 3 else s


@dataclass(frozen=True)
class BinOp(Expr):
    op: str  # one of + - * /
    left: Expr
    right: Expr

    def eval(self, x):
        a = self.left.eval(x)
        b = self.right.eval(x)
        if self.op == "+":
            return a + b
        if self.op == "-":
            return a - b
        if self.op == "*":
            return a * b
        if b == 0.0:
            raise EvaluationError("division by zero", self)
        return a / b

    def _eval_batch(self, cols):
        a = self.left._eval_batch(cols)
        b = self.right._eval_batch(cols)
        if self.op == "+":
            return a + b
        if self.op == "-":
            return a - b
        if self.op == "*":
            return a * b
        return a / b

    def _fmt(self, parent=0):
        prec = 1 if self.op in "+-" else 2
        # left operand shares this precedence (left associativity); the
        # right operand needs one level more to survive re-parsing
        s = f"{self.left._fmt(prec)} {self.op} {self.right._fmt(prec + 1)}"
        return f"({s})" if parent > prec else s


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exponent: float  # literal by construction

    def eval(self, x):
        b = self.base.eval(x)
        if b < 0 and self.exponent != round(self.exponent):
            raise EvaluationError("negative base with non-integer exponent", self)
        if b == 0 and self.exponent < 0:
            raise EvaluationError("zero raised to a negative power", self)
        return float(b**self.exponent)

    def _eval_batch(self, cols):
        return self.base._eval_batch(cols) ** self.exponent

    def _fmt(self, parent=0):
        # a signed bare literal re-parses as an exponent; parens would not
        s = f"{self.base._fmt(5)}^{repr(self.exponent)}"
        return f"({s})" if parent > 4 else s


@dataclass(frozen=True)
class Call(Expr):
    name: str
    args: tuple

    def eval(self, x):
        vals = [a.eval(x) for a in self.args]
        if self.name == "sqrt":
            if vals[0] < 0:
                raise EvaluationError("square root of a negative value", self)
            return math.sqrt(vals[0])
        if self.name == "log":
            if vals[0] <= 0:
                raise EvaluationError("logarithm of a non-positive value", self)
            return math.log(vals[0])
        if self.name == "min":
            return min(vals)
        if self.name == "max":
            return max(vals)
        if self.name == "abs":
            return abs(vals[0])
        return float(getattr(math, self.name)(vals[0]))

    def _eval_batch(self, cols):
        vals = [a._eval_batch(cols) for a in self.args]
        if self.name == "min":
            return np.minimum.reduce(vals)
        if self.name == "max":
            return np.maximum.reduce(vals)
        if self.name == "abs":
            return np.abs(vals[0])
        return getattr(np, self.name)(vals[0])

    def _fmt(self, parent=0):
        return f"{self.name}({', '.join(a._fmt(0) for a in self.args)})"


# --------------------------------------------------------------------------
# tokenizer / parser

_OPS = set("+-*/^(),")


def _tokenize(text: str):
    tokens = []  # (kind, value, position)
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch in _OPS:
            tokens.append(("op", ch, i))
            i += 1
            continue
        if ch.isdigit() or ch == ".":
            j = i
            seen_exp = False
            while j < n:
                c = text[j]
                if c.isdigit() or c == ".":
                    j += 1
                elif c in "eE" and j + 1 < n and (text[j + 1].isdigit() or text[j + 1] in "+-") and not seen_exp:
                    seen_exp = True
                    j += 2
                else:
                    break
            try:
                value = float(text[i:j])
            except ValueError:
                raise ExpressionError(f"invalid number {text[i:j]!r}", i) from None
            tokens.append(("num", value, i))
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(("name", text[i:j], i))
            i = j
            continue
        raise ExpressionError(f"unexpected character {ch!r}", i)
    tokens.append(("end", "", n))
    return tokens


class _Parser:
    def __init__(self, tokens, dimension: int):
        self.tokens = tokens
        self.pos = 0
        self.dimension = dimension

    def peek(self):
        return self.tokens[self.pos]

    def next(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_op(self, op: str):
        kind, value, position = self.next()
        if kind != "op" or value != op:
            raise ExpressionError(f"expected {op!r}, found {value!r}", position)

    def parse_expr(self) -> Expr:
        node = self.parse_term()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in "+-":
                self.next()
                node = BinOp(value, node, self.parse_term())
            else:
                return node

    def parse_term(self) -> Expr:
        node = self.parse_unary()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in "*/":
                self.next()
                node = BinOp(value, node, self.parse_unary())
            else:
                return node

    def parse_unary(self) -> Expr:
        kind, value, _ = self.peek()
        if kind == "op" and value == "-":
            self.next()
            return Neg(self.parse_unary())
        return self.parse_power()

    def parse_power(self) -> Expr:
        node = self.parse_atom()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value == "^":
                self.next()
                node = Pow(node, self.parse_exponent())
            else:
                return node

    def parse_exponent(self) -> float:
        # exponents must be (optionally signed) numeric literals
        kind, value, position = self.next()
        sign = 1.0
        if kind == "op" and value == "-":
            sign = -1.0
            kind, value, position = self.next()
        if kind != "num":
            raise ExpressionError("exponent must be a constant numeric literal", position)
        return sign * value

    def parse_atom(self) -> Expr:
        kind, value, position = self.next()
        if kind == "num":
            return Const(value)
        if kind == "op" and value == "(":
            node = self.parse_expr()
            self.expect_op(")")
            return node
        if kind == "name":
            if value in _FUNCTIONS:
                self.expect_op("(")
                args = [self.parse_expr()]
                while self.peek()[:2] == ("op", ","):
                    self.next()
                    args.append(self.parse_expr())
                self.expect_op(")")
                if value in _VARIADIC:
                    if len(args) < 2:
                        raise ExpressionError(f"{value} needs at least two arguments", position)
                elif len(args) != 1:
                    raise ExpressionError(f"{value} takes exactly one argument", position)
                return Call(value, tuple(args))
            if value.startswith("x") and value[1:].isdigit():
                index = int(value[1:])
                if not 1 <= index <= self.dimension:
                    raise ExpressionError(
                        f"variable {value} out of range for dimension {self.dimension}", position
                    )
                return Var(index - 1)
            raise ExpressionError(f"unknown identifier {value!r}", position)
        raise ExpressionError(f"unexpected token {value!r}", position)


def parse(text: str, dimension: int) -> Expr:
    """Parse an expression over variables x1..x<dimension>."""
    if not isinstance(text, str) or not text.strip():
        raise ExpressionError("empty expression")
    if dimension < 1:
        raise ValueError("dimension must be a positive integer")
    parser = _Parser(_tokenize(text), dimension)
    node = parser.parse_expr()
    kind, value, position = parser.peek()
    if kind != "end":
        raise ExpressionError(f"trailing input {value!r}", position)
    return node


def evaluate(expression: Expr, x) -> float:
    """IEEE double evaluation; domain violations raise EvaluationError."""
    return float(expression.eval(np.asarray(x, dtype=float)))


def batch_evaluator(expression: Expr):
    """Compile to a vectorized evaluator over an (N, n) point array.

    The batch path lets numpy produce NaN/inf on domain violations and then
    re-runs the first offending point through the scalar evaluator so the
    error carries the exact subexpression.
    """

    def run(points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        cols = [np.ascontiguousarray(points[:, j]) for j in range(points.shape[1])]
        with np.errstate(all="ignore"):
            out = expression._eval_batch(cols)
        out = np.broadcast_to(np.asarray(out, dtype=float), (points.shape[0],))
        bad = ~np.isfinite(out)
        if bad.any():
            evaluate(expression, points[int(np.argmax(bad))])  # raises with detail
            raise EvaluationError("non-finite value", expression)
        return out

    return run


def to_string(expression: Expr) -> str:
    """Render to text that re-parses to an equivalent expression."""
    return str(expression)


def contains_abs(expression: Expr) -> bool:
    """True if any subexpression is an abs() call (non-differentiable)."""
    if isinstance(expression, Call):
        return expression.name == "abs" or any(contains_abs(a) for a in expression.args)
    if isinstance(expression, Neg):
        return contains_abs(expression.child)
    if isinstance(expression, BinOp):
        return contains_abs(expression.left) or contains_abs(expression.right)
    if isinstance(expression, Pow):
        return contains_abs(expression.base)
    return False


def finite_diff_jacobian(exprs, x, h: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian of a list of expressions at x.

    Entry (q, j) = (e_q(x + h u_j) - e_q(x - h u_j)) / (2 h).  Evaluation
    errors propagate.
    """
    x = np.asarray(x, dtype=float)
    exprs = list(exprs)
    if h <= 0:
        raise ValueError("step size must be positive")
    out = np.empty((len(exprs), x.size))
    for j in range(x.size):
        xp = x.copy()
        xm = x.copy()
        xp[j] += h
        xm[j] -= h
        for q, e in enumerate(exprs):
            out[q, j] = (e.eval(xp) - e.eval(xm)) / (2.0 * h)
    return out


def finite_diff_jacobian_batch(exprs, points: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """Vectorized Jacobians for an (N, n) array of points -> (N, m, n)."""
    points = np.asarray(points, dtype=float)
    n_points, n = points.shape
    evaluators = [batch_evaluator(e) for e in exprs]
    out = np.empty((n_points, len(evaluators), n))
    for j in range(n):
        shift = np.zeros(n)
        shift[j] = h
        plus = points + shift
        minus = points - shift
        for q, run in enumerate(evaluators):
            out[:, q, j] = (run(plus) - run(minus)) / (2.0 * h)
    return out
