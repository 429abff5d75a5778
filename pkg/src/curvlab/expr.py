"""A small arithmetic expression language with second-order forward-mode AD.

Expressions are parsed by recursive descent with the precedence

    ^  >  unary -  >  * /  >  + -

so ``-x1^2`` means ``-(x1^2)``. Exponents must be integer literals. The
available functions are sin, cos, sinh, cosh, exp and sqrt; ``pi`` is a
predefined constant.

Evaluation works on floats, on numpy arrays (one value per point), and on
:class:`Jet` values, which carry the value, gradient and Hessian with respect
to the coordinates through every operation.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import EvaluationError, ExpressionSyntaxError, UnknownIdentifierError

CONSTANTS = {"pi": math.pi}


# --------------------------------------------------------------------------
# Jets: truncated second-order Taylor arithmetic (hyper-dual numbers)
# --------------------------------------------------------------------------


class Jet:
    """Value, gradient and Hessian of a function at a batch of points.

    ``val`` has shape (N,), ``grad`` (N, m) and ``hess`` (N, m, m). Every
    operation applies the first- and second-order chain rule, which is what
    nesting two levels of dual numbers computes.
    """

    __slots__ = ("val", "grad", "hess")

    def __init__(self, val, grad, hess):
        self.val = val
        self.grad = grad
        self.hess = hess

    @classmethod
    def variable(cls, x: np.ndarray, k: int) -> "Jet":
        n, m = x.shape
        grad = np.zeros((n, m))
        grad[:, k] = 1.0
        return cls(x[:, k].copy(), grad, np.zeros((n, m, m)))

    @classmethod
    def constant(cls, c: float, n: int, m: int) -> "Jet":
        return cls(np.full(n, float(c)), np.zeros((n, m)), np.zeros((n, m, m)))

    def _lift(self, other) -> "Jet":
        if isinstance(other, Jet):
            return other
        n, m = self.grad.shape
        return Jet.constant(other, n, m)

    def __add__(self, other):
        o = self._lift(other)
        return Jet(self.val + o.val, self.grad + o.grad, self.hess + o.hess)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._lift(other)
        return Jet(self.val - o.val, self.grad - o.grad, self.hess - o.hess)

    def __rsub__(self, other):
        return self._lift(other) - self

    def __neg__(self):
        return Jet(-self.val, -self.grad, -self.hess)

    def __mul__(self, other):
        o = self._lift(other)
        a, b = self.val[:, None], o.val[:, None]
        cross = np.einsum("ni,nj->nij", self.grad, o.grad)
        return Jet(
            self.val * o.val,
            a * o.grad + b * self.grad,
            a[..., None] * o.hess + b[..., None] * self.hess + cross + np.swapaxes(cross, 1, 2),
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self * self._lift(other).reciprocal()

    def __rtruediv__(self, other):
        return self._lift(other) * self.reciprocal()

    def reciprocal(self) -> "Jet":
        if np.any(self.val == 0.0):
            raise EvaluationError("division by zero")
        inv = 1.0 / self.val
        return self.apply(inv, -inv * inv, 2.0 * inv * inv * inv)

    def apply(self, f, df, ddf) -> "Jet":
        """Compose with a scalar function given its value and two derivatives at ``val``."""
        outer = np.einsum("ni,nj->nij", self.grad, self.grad)
        return Jet(
            f,
            df[:, None] * self.grad,
            df[:, None, None] * self.hess + ddf[:, None, None] * outer,
        )

    def ipow(self, k: int) -> "Jet":
        if k == 0:
            n, m = self.grad.shape
            return Jet.constant(1.0, n, m)
        if k < 0:
            return self.reciprocal().ipow(-k)
        u = self.val
        f = u**k
        df = k * u ** (k - 1)
        ddf = k * (k - 1) * u ** (k - 2) if k >= 2 else np.zeros_like(u)
        return self.apply(f, df, ddf)


def _checked(value):
    arr = np.asarray(value)
    if not np.all(np.isfinite(arr)):
        raise EvaluationError("expression produced a non-finite value")
    return value


def _call(name: str, u):
    """Apply a named elementary function to a float, array or Jet."""
    if isinstance(u, Jet):
        v = u.val
        if name == "sin":
            s, c = np.sin(v), np.cos(v)
            return u.apply(s, c, -s)
        if name == "cos":
            s, c = np.sin(v), np.cos(v)
            return u.apply(c, -s, -c)
        if name == "sinh":
            s, c = np.sinh(v), np.cosh(v)
            return u.apply(s, c, s)
        if name == "cosh":
            s, c = np.sinh(v), np.cosh(v)
            return u.apply(c, s, c)
        if name == "exp":
            e = np.exp(v)
            return u.apply(e, e, e)
        if name == "sqrt":
            if np.any(v <= 0.0):
                raise EvaluationError("sqrt is not differentiable at non-positive arguments")
            r = np.sqrt(v)
            return u.apply(r, 0.5 / r, -0.25 / (r * v))
        raise EvaluationError(f"unknown function {name}")
    if name == "sqrt" and np.any(np.asarray(u) < 0.0):
        raise EvaluationError("sqrt of a negative number")
    return getattr(np, name)(u)


# --------------------------------------------------------------------------
# Expression tree
# --------------------------------------------------------------------------


class Expression:
    """Base class of expression tree nodes."""

    def evaluate(self, env: Mapping[str, object]):
        """Evaluate with ``env`` mapping coordinate names to floats, arrays or Jets."""
        raise NotImplementedError

    def to_source(self) -> str:
        raise NotImplementedError

    def identifiers(self) -> set[str]:
        return set()

    def __str__(self):
        return self.to_source()


@dataclass(frozen=True)
class Num(Expression):
    value: float

    def evaluate(self, env):
        return self.value

    def to_source(self):
        return repr(float(self.value))


@dataclass(frozen=True)
class Param(Expression):
    """A named scalar whose value was fixed when the expression was parsed."""

    name: str
    value: float

    def evaluate(self, env):
        return self.value

    def to_source(self):
        return self.name


@dataclass(frozen=True)
class Var(Expression):
    name: str

    def evaluate(self, env):
        return env[self.name]

    def to_source(self):
        return self.name

    def identifiers(self):
        return {self.name}


@dataclass(frozen=True)
class Neg(Expression):
    arg: Expression

    def evaluate(self, env):
        return -self.arg.evaluate(env)

    def to_source(self):
        return f"(-{self.arg.to_source()})"

    def identifiers(self):
        return self.arg.identifiers()


@dataclass(frozen=True)
class BinOp(Expression):
    op: str
    left: Expression
    right: Expression

    def evaluate(self, env):
        a = self.left.evaluate(env)
        b = self.right.evaluate(env)
        if self.op == "+":
            return a + b
        if self.op == "-":
            return a - b
        if self.op == "*":
            return a * b
        if isinstance(a, Jet) or isinstance(b, Jet):
            return a / b
        if np.any(np.asarray(b) == 0.0):
            raise EvaluationError("division by zero")
        return _checked(a / b)

    def to_source(self):
        return f"({self.left.to_source()} {self.op} {self.right.to_source()})"

    def identifiers(self):
        return self.left.identifiers() | self.right.identifiers()


@dataclass(frozen=True)
class Pow(Expression):
    base: Expression
    exponent: int

    def evaluate(self, env):
        b = self.base.evaluate(env)
        if isinstance(b, Jet):
            return b.ipow(self.exponent)
        if self.exponent < 0 and np.any(np.asarray(b) == 0.0):
            raise EvaluationError("division by zero")
        if isinstance(b, np.ndarray):
            return _checked(b.astype(float) ** self.exponent)
        return _checked(float(b) ** self.exponent)

    def to_source(self):
        exp = str(self.exponent) if self.exponent >= 0 else f"({self.exponent})"
        return f"({self.base.to_source()}^{exp})"

    def identifiers(self):
        return self.base.identifiers()


@dataclass(frozen=True)
class Call(Expression):
    func: str
    arg: Expression

    def evaluate(self, env):
        return _call(self.func, self.arg.evaluate(env))

    def to_source(self):
        return f"{self.func}({self.arg.to_source()})"

    def identifiers(self):
        return self.arg.identifiers()


FUNCTIONS = frozenset({"sin", "cos", "sinh", "cosh", "exp", "sqrt"})


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^()]))"
)


@dataclass
class _Token:
    kind: str
    text: str
    offset: int


class _Parser:
    def __init__(self, source: str, names: Sequence[str] | None, params: Mapping[str, float]):
        self.source = source
        self.names = None if names is None else set(names)
        self.params = dict(params)
        self.tokens = self._tokenize()
        self.pos = 0

    def _byte_offset(self, char_index: int) -> int:
        return len(self.source[:char_index].encode("utf-8"))

    def _tokenize(self) -> list[_Token]:
        tokens = []
        i = 0
        src = self.source
        while True:
            while i < len(src) and src[i].isspace():
                i += 1
            if i >= len(src):
                break
            m = _TOKEN.match(src, i)
            if m is None or m.end() == i:
                raise ExpressionSyntaxError(
                    f"unexpected character {src[i]!r}", self._byte_offset(i), {"number", "identifier", "operator"}
                )
            kind = m.lastgroup
            start = m.start(kind)
            tokens.append(_Token(kind, m.group(kind), self._byte_offset(start)))
            i = m.end()
        tokens.append(_Token("end", "", self._byte_offset(len(src))))
        return tokens

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def take(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, text: str) -> _Token:
        tok = self.peek()
        if tok.text != text or tok.kind == "end":
            raise ExpressionSyntaxError(f"unexpected {self._describe(tok)}", tok.offset, {repr(text)})
        return self.take()

    @staticmethod
    def _describe(tok: _Token) -> str:
        return "end of input" if tok.kind == "end" else f"token {tok.text!r}"

    def parse(self) -> Expression:
        node = self.expr()
        tok = self.peek()
        if tok.kind != "end":
            raise ExpressionSyntaxError(
                f"unexpected {self._describe(tok)}", tok.offset, {"'+'", "'-'", "'*'", "'/'", "'^'", "end of input"}
            )
        return node

    def expr(self) -> Expression:
        node = self.term()
        while self.peek().text in ("+", "-") and self.peek().kind == "op":
            op = self.take().text
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Expression:
        node = self.unary()
        while self.peek().text in ("*", "/") and self.peek().kind == "op":
            op = self.take().text
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Expression:
        tok = self.peek()
        if tok.kind == "op" and tok.text == "-":
            self.take()
            return Neg(self.unary())
        if tok.kind == "op" and tok.text == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self) -> Expression:
        base = self.atom()
        if self.peek().kind == "op" and self.peek().text == "^":
            self.take()
            sign = 1
            if self.peek().kind == "op" and self.peek().text == "(":
                self.take()
                if self.peek().text == "-":
                    self.take()
                    sign = -1
                k = self._integer()
                self.expect(")")
            else:
                if self.peek().text == "-":
                    self.take()
                    sign = -1
                k = self._integer()
            return Pow(base, sign * k)
        return base

    def _integer(self) -> int:
        tok = self.peek()
        if tok.kind != "num" or not tok.text.isdigit():
            raise ExpressionSyntaxError(f"unexpected {self._describe(tok)}", tok.offset, {"integer exponent"})
        self.take()
        return int(tok.text)

    def atom(self) -> Expression:
        tok = self.peek()
        if tok.kind == "num":
            self.take()
            return Num(float(tok.text))
        if tok.kind == "ident":
            self.take()
            name = tok.text
            if name in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(name, arg)
            if name in self.params:
                return Param(name, float(self.params[name]))
            if name in CONSTANTS:
                return Param(name, CONSTANTS[name])
            if self.names is not None and name not in self.names:
                raise UnknownIdentifierError(f"unknown identifier {name!r}", tok.offset, set(self.names) | set(self.params))
            return Var(name)
        if tok.kind == "op" and tok.text == "(":
            self.take()
            node = self.expr()
            self.expect(")")
            return node
        raise ExpressionSyntaxError(
            f"unexpected {self._describe(tok)}", tok.offset, {"number", "identifier", "'('", "'-'"}
        )


def parse_expression(source: str, names: Sequence[str] | None = None, params: Mapping[str, float] | None = None) -> Expression:
    """Parse ``source`` into an expression tree.

    ``names`` lists the allowed coordinate identifiers (any identifier is
    accepted when it is None); ``params`` maps scalar parameter names to values.
    """
    return _Parser(source, names, params or {}).parse()


def as_expression(obj, names=None, params=None) -> Expression:
    if isinstance(obj, Expression):
        return obj
    if isinstance(obj, (int, float)):
        return Num(float(obj))
    return parse_expression(str(obj), names, params)


def evaluate_jets(exprs: Sequence[Expression], names: Sequence[str], x: np.ndarray) -> list[Jet]:
    """Evaluate expressions with second derivatives at points ``x`` of shape (N, m)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    n, m = x.shape
    env = {name: Jet.variable(x, k) for k, name in enumerate(names)}
    out = []
    for e in exprs:
        v = e.evaluate(env)
        if not isinstance(v, Jet):
            v = Jet.constant(v, n, m)
        if not (np.all(np.isfinite(v.val)) and np.all(np.isfinite(v.grad)) and np.all(np.isfinite(v.hess))):
            raise EvaluationError(f"non-finite value or derivative in {e.to_source()}")
        out.append(v)
    return out


def evaluate_values(exprs: Sequence[Expression], names: Sequence[str], x: np.ndarray) -> np.ndarray:
    """Plain values of expressions at points ``x`` (N, m); returns (len(exprs), N)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    env = {name: x[:, k] for k, name in enumerate(names)}
    out = np.empty((len(exprs), x.shape[0]))
    for i, e in enumerate(exprs):
        out[i] = _checked(np.broadcast_to(np.asarray(e.evaluate(env), dtype=float), (x.shape[0],)))
    return out
