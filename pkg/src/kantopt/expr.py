"""A small expression language for payoffs and rescalings.

Grammar (see ``docs/grammar.md``)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' '-'? number)?
    atom   := number | ident | func '(' expr ')' | '(' expr ')'
    func   := 'sqrt' | 'ln' | 'exp'

Unary minus binds looser than ``^`` so ``-x^2`` means ``-(x^2)``.

Expressions are compiled once into nested closures.  Two evaluation modes
exist: *strict* evaluation on scalars raises ``ExprDomainError`` at the
offending node, and *masked* evaluation on numpy arrays writes NaN wherever
a node leaves its domain, which is what the grid scans want.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Mapping

import numpy as np

from . import dual
from .dual import Dual, real
from .errors import (
    DerivativeUndefinedError,
    ExprDomainError,
    ExprSyntaxError,
    UnboundVariableError,
    UnknownIdentifierError,
)

FUNCTIONS = ("sqrt", "ln", "exp")


class NonConstantExponentError(ExprSyntaxError):
    pass


# --------------------------------------------------------------------------
# Tree


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Unary:
    op: str  # "neg", "sqrt", "ln", "exp"
    arg: "Node"


@dataclass(frozen=True)
class Binary:
    op: str  # "+", "-", "*", "/"
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Pow:
    base: "Node"
    exponent: float


Node = Const | Var | Unary | Binary | Pow


def to_source(node: Node) -> str:
    """Print a tree so that parsing the text gives the same tree back."""
    if isinstance(node, Const):
        return repr(float(node.value))
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Unary):
        if node.op == "neg":
            return f"(-{to_source(node.arg)})"
        return f"{node.op}({to_source(node.arg)})"
    if isinstance(node, Binary):
        return f"({to_source(node.left)} {node.op} {to_source(node.right)})"
    base = to_source(node.base)
    if isinstance(node.base, Pow):
        base = f"({base})"
    return f"{base}^{float(node.exponent)!r}"


# --------------------------------------------------------------------------
# Parsing

_TOKEN_RE = re.compile(
    r"\s*(?:"
    r"(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^()])"
    r")"
)


def _tokenize(source: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    end = len(source.rstrip())
    while pos < end:
        m = _TOKEN_RE.match(source, pos)
        if m is None or m.end() == pos:
            bad = pos + len(source[pos:]) - len(source[pos:].lstrip())
            raise ExprSyntaxError(f"unexpected character {source[bad]!r}", bad, source)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("eof", "", end))
    return tokens


class _Parser:
    def __init__(self, source: str, variables: frozenset[str]):
        self.source = source
        self.variables = variables
        self.tokens = _tokenize(source)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, message, tok=None, cls=ExprSyntaxError):
        tok = tok or self.peek()
        return cls(message, tok[2], self.source)

    def expect(self, value):
        tok = self.peek()
        if tok[1] != value or tok[0] == "number":
            shown = tok[1] or "end of input"
            raise self.error(f"expected {value!r}, found {shown!r}")
        return self.advance()

    def parse(self) -> Node:
        node = self.expr()
        tok = self.peek()
        if tok[0] != "eof":
            raise self.error(f"unexpected {tok[1]!r}")
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.advance()[1]
            node = Binary(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.advance()[1]
            node = Binary(op, node, self.unary())
        return node

    def unary(self) -> Node:
        if self.peek()[:2] == ("op", "-"):
            self.advance()
            return Unary("neg", self.unary())
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.peek()[:2] != ("op", "^"):
            return base
        self.advance()
        sign = 1.0
        if self.peek()[:2] == ("op", "-"):
            self.advance()
            sign = -1.0
        tok = self.peek()
        if tok[0] != "number":
            raise self.error("exponent must be a numeric constant", cls=NonConstantExponentError)
        self.advance()
        node = Pow(base, sign * self._number(tok))
        if self.peek()[:2] == ("op", "^"):
            raise self.error("chained exponents need parentheses")
        return node

    def _number(self, tok) -> float:
        value = float(tok[1])
        if not math.isfinite(value):
            raise self.error(f"number {tok[1]} is not finite", tok)
        return value

    def atom(self) -> Node:
        tok = self.peek()
        kind, text, _ = tok
        if kind == "number":
            self.advance()
            return Const(self._number(tok))
        if kind == "ident":
            self.advance()
            if text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Unary(text, arg)
            if text not in self.variables:
                known = ", ".join(sorted(self.variables)) or "none"
                raise self.error(
                    f"unknown identifier {text!r} (declared: {known})",
                    tok,
                    UnknownIdentifierError,
                )
            return Var(text)
        if (kind, text) == ("op", "("):
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        raise self.error(f"unexpected {text or 'end of input'!r}")


# --------------------------------------------------------------------------
# Compilation


def _strict_ops(src: str, op: str) -> Callable:
    if op == "neg":
        return lambda v: -v
    if op == "sqrt":
        def f(v):
            x = real(v)
            if x < 0:
                raise ExprDomainError(f"sqrt of negative value {x!r}", src)
            if isinstance(v, Dual):
                r = math.sqrt(x)
                if r == 0.0:
                    if v.deriv != 0:
                        raise DerivativeUndefinedError("derivative of sqrt at 0", src)
                    return Dual(0.0, 0.0)
                return Dual(r, v.deriv / (2.0 * r))
            return math.sqrt(x)
        return f
    if op == "ln":
        def f(v):
            x = real(v)
            if x <= 0:
                raise ExprDomainError(f"ln of non-positive value {x!r}", src)
            if isinstance(v, Dual):
                return Dual(math.log(x), v.deriv / x)
            return math.log(x)
        return f
    if op == "exp":
        def f(v):
            try:
                e = math.exp(real(v))
            except OverflowError:
                raise ExprDomainError("exp overflow", src) from None
            if isinstance(v, Dual):
                return Dual(e, e * v.deriv)
            return e
        return f
    raise ValueError(op)


def _strict_div(src: str) -> Callable:
    def f(a, b):
        if real(b) == 0:
            raise ExprDomainError("division by zero", src)
        return a / b
    return f


def _strict_pow(src: str, p: float) -> Callable:
    integral = float(p).is_integer()

    def f(v):
        x = real(v)
        if x < 0 and not integral:
            raise ExprDomainError(f"negative base {x!r} with non-integer exponent", src)
        if x == 0 and p < 0:
            raise ExprDomainError("zero base with negative exponent", src)
        try:
            if isinstance(v, Dual):
                if p == 0:
                    return Dual(1.0, 0.0)
                if x == 0 and p < 1 and v.deriv != 0:
                    raise DerivativeUndefinedError(f"derivative of x^{p!r} at 0", src)
                return Dual(x**p, p * x ** (p - 1.0) * v.deriv if x != 0 or p >= 1 else 0.0)
            return x**p
        except OverflowError:
            raise ExprDomainError("power overflow", src) from None
    return f


def _mask(v, bad):
    """Write NaN into ``v`` wherever ``bad`` holds (value and derivative)."""
    if not np.any(bad):
        return v
    if isinstance(v, Dual):
        return Dual(np.where(bad, np.nan, v.value), np.where(bad, np.nan, v.deriv))
    return np.where(bad, np.nan, v)


def _finite(v):
    return _mask(v, ~np.isfinite(real(v)))


def _masked_ops(op: str) -> Callable:
    if op == "neg":
        return lambda v: -v
    if op == "sqrt":
        def f(v):
            x = np.asarray(real(v), dtype=float)
            safe = _mask(v, x < 0)
            if isinstance(safe, Dual):
                r = np.sqrt(safe.value)
                with np.errstate(divide="ignore", invalid="ignore"):
                    d = safe.deriv / (2.0 * r)
                zero = r == 0
                d = np.where(zero, np.where(safe.deriv == 0, 0.0, np.nan), d)
                return Dual(r, d)
            return np.sqrt(safe)
        return f
    if op == "ln":
        def f(v):
            x = np.asarray(real(v), dtype=float)
            safe = _mask(v, x <= 0)
            with np.errstate(divide="ignore", invalid="ignore"):
                return dual.log(safe)
        return f
    if op == "exp":
        def f(v):
            with np.errstate(over="ignore", invalid="ignore"):
                return _finite(dual.exp(v))
        return f
    raise ValueError(op)


def _masked_div(a, b):
    x = np.asarray(real(b), dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return _finite(a / _mask(b, x == 0))


def _masked_pow(p: float) -> Callable:
    integral = float(p).is_integer()

    def f(v):
        x = np.asarray(real(v), dtype=float)
        bad = (x == 0) & (p < 0)
        if not integral:
            bad = bad | (x < 0)
        safe = _mask(v, bad)
        with np.errstate(all="ignore"):
            if isinstance(safe, Dual):
                sx = safe.value
                if p == 0:
                    return Dual(np.ones_like(sx), np.zeros_like(sx))
                d = p * sx ** (p - 1.0) * safe.deriv
                if p < 1:
                    d = np.where(sx == 0, np.where(safe.deriv == 0, 0.0, np.nan), d)
                return _finite(Dual(sx**p, d))
            return _finite(safe**p)
    return f


def _compile(node: Node, strict: bool) -> Callable[[Mapping], object]:
    if isinstance(node, Const):
        value = float(node.value)
        return lambda env: value
    if isinstance(node, Var):
        name = node.name

        def var(env):
            try:
                return env[name]
            except KeyError:
                raise UnboundVariableError(f"variable {name!r} is not bound") from None
        return var
    src = to_source(node)
    if isinstance(node, Unary):
        arg = _compile(node.arg, strict)
        op = _strict_ops(src, node.op) if strict else _masked_ops(node.op)
        return lambda env: op(arg(env))
    if isinstance(node, Pow):
        base = _compile(node.base, strict)
        op = _strict_pow(src, node.exponent) if strict else _masked_pow(node.exponent)
        return lambda env: op(base(env))
    left = _compile(node.left, strict)
    right = _compile(node.right, strict)
    if node.op == "+":
        return lambda env: left(env) + right(env)
    if node.op == "-":
        return lambda env: left(env) - right(env)
    if node.op == "*":
        return lambda env: left(env) * right(env)
    div = _strict_div(src) if strict else _masked_div
    return lambda env: div(left(env), right(env))


# --------------------------------------------------------------------------
# Public surface


@dataclass(frozen=True)
class Expr:
    """A parsed expression over a declared set of variables.

    Equality and hashing are structural.
    """

    root: Node
    variables: frozenset[str] = field(default_factory=frozenset)

    def __str__(self) -> str:
        return to_source(self.root)

    @cached_property
    def _strict(self):
        return _compile(self.root, strict=True)

    @cached_property
    def _masked(self):
        return _compile(self.root, strict=False)

    def evaluate(self, bindings: Mapping[str, float]) -> float:
        env = {k: float(v) for k, v in bindings.items()}
        return float(self._strict(env))

    def differentiate(self, wrt: str, bindings: Mapping[str, float]) -> float:
        return self.derivative_along(bindings, {wrt: 1.0})

    def derivative_along(self, bindings: Mapping[str, float], seeds: Mapping[str, float]) -> float:
        """Directional derivative with tangent ``seeds`` (missing names get 0)."""
        for name in seeds:
            if name not in self.variables:
                raise UnboundVariableError(f"cannot differentiate with respect to {name!r}")
        env = {k: Dual(float(v), float(seeds.get(k, 0.0))) for k, v in bindings.items()}
        out = self._strict(env)
        if isinstance(out, Dual):
            return float(out.deriv)
        return 0.0

    def evaluate_array(self, bindings: Mapping[str, object]) -> np.ndarray:
        """Vectorised evaluation; NaN marks points outside the domain."""
        arrays = {k: np.asarray(v, dtype=float) for k, v in bindings.items()}
        shape = np.broadcast_shapes(*(a.shape for a in arrays.values())) if arrays else ()
        out = self._masked(arrays)
        return np.broadcast_to(np.asarray(out, dtype=float), shape).copy()

    def differentiate_array(
        self, bindings: Mapping[str, object], seeds: Mapping[str, float]
    ) -> np.ndarray:
        """Vectorised directional derivative; NaN where undefined."""
        arrays = {k: np.asarray(v, dtype=float) for k, v in bindings.items()}
        shape = np.broadcast_shapes(*(a.shape for a in arrays.values())) if arrays else ()
        env = {k: Dual(a, float(seeds.get(k, 0.0))) for k, a in arrays.items()}
        out = self._masked(env)
        d = out.deriv if isinstance(out, Dual) else 0.0
        d = np.broadcast_to(np.asarray(d, dtype=float), shape).copy()
        v = np.broadcast_to(np.asarray(real(out), dtype=float), shape)
        d[np.isnan(v)] = np.nan
        return d


def parse_expression(source: str, variables) -> Expr:
    """Parse ``source`` into an :class:`Expr` over ``variables``.

    Raises:
        ExprSyntaxError: on malformed input (with ``position``), including the
            ``UnknownIdentifierError`` and ``NonConstantExponentError`` subclasses.
    """
    if not source or not source.strip():
        raise ExprSyntaxError("empty expression", 0, source or "")
    names = frozenset(variables)
    for name in names:
        if name in FUNCTIONS:
            raise ExprSyntaxError(f"{name!r} is reserved and cannot be a variable", 0, source)
    return Expr(_Parser(source, names).parse(), names)


def evaluate(expr: Expr, bindings: Mapping[str, float]) -> float:
    return expr.evaluate(bindings)


def differentiate(expr: Expr, wrt: str, bindings: Mapping[str, float]) -> float:
    return expr.differentiate(wrt, bindings)
