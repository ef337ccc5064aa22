"""Dual numbers for first-order forward-mode differentiation.

Both fields may be floats or numpy arrays of the same shape; the arithmetic
below is written so that either works.
"""

from __future__ import annotations

import numpy as np


class Dual:
    """Dual number ``value + deriv·ε`` with ``ε² = 0``."""

    __slots__ = ("value", "deriv")

    def __init__(self, value, deriv=0.0):
        self.value = value
        self.deriv = deriv

    def __repr__(self) -> str:
        return f"Dual({self.value!r}, {self.deriv!r})"

    def __eq__(self, other):
        if isinstance(other, Dual):
            return self.value == other.value and self.deriv == other.deriv
        return NotImplemented

    __hash__ = None

    def __neg__(self) -> Dual:
        return Dual(-self.value, -self.deriv)

    def __add__(self, other) -> Dual:
        if isinstance(other, Dual):
            return Dual(self.value + other.value, self.deriv + other.deriv)
        return Dual(self.value + other, self.deriv)

    __radd__ = __add__

    def __sub__(self, other) -> Dual:
        if isinstance(other, Dual):
            return Dual(self.value - other.value, self.deriv - other.deriv)
        return Dual(self.value - other, self.deriv)

    def __rsub__(self, other) -> Dual:
        return Dual(other - self.value, -self.deriv)

    def __mul__(self, other) -> Dual:
        if isinstance(other, Dual):
            return Dual(
                self.value * other.value,
                self.value * other.deriv + self.deriv * other.value,
            )
        return Dual(self.value * other, self.deriv * other)

    __rmul__ = __mul__

    def __truediv__(self, other) -> Dual:
        if isinstance(other, Dual):
            q = self.value / other.value
            return Dual(q, (self.deriv - q * other.deriv) / other.value)
        return Dual(self.value / other, self.deriv / other)

    def __rtruediv__(self, other) -> Dual:
        q = other / self.value
        return Dual(q, -q * self.deriv / self.value)


def real(v):
    """Real part of a dual, or the value itself."""
    return v.value if isinstance(v, Dual) else v


# The functions below assume the caller already checked the domain.

def sqrt(v):
    if isinstance(v, Dual):
        r = np.sqrt(v.value)
        return Dual(r, v.deriv / (2.0 * r))
    return np.sqrt(v)


def log(v):
    if isinstance(v, Dual):
        return Dual(np.log(v.value), v.deriv / v.value)
    return np.log(v)


def exp(v):
    if isinstance(v, Dual):
        e = np.exp(v.value)
        return Dual(e, e * v.deriv)
    return np.exp(v)


def power(v, p: float):
    if isinstance(v, Dual):
        if p == 0.0:
            return Dual(np.ones_like(v.value) * 1.0, v.deriv * 0.0)
        return Dual(v.value**p, p * v.value ** (p - 1.0) * v.deriv)
    return v**p
