"""
Dual numbers for forward-mode differentiation.

A Dual carries a real part and a dual (derivative) part. Both parts may be
plain floats, numpy arrays, or Duals themselves, so nesting k levels deep
gives exact k-th order mixed partials: seed each variable once per level
and read the wanted coefficient back with ``coefficient``.
"""

from typing import Any, Sequence

import numpy as np


class Dual:
    __slots__ = ("real", "dual")
    # make ndarray/np.float64 operators defer to the reflected Dual methods
    __array_ufunc__ = None

    def __init__(self, real, dual=0.0):
        self.real = real
        self.dual = dual

    def __repr__(self):
        return f"Dual({self.real!r}, {self.dual!r})"

    def __neg__(self):
        return Dual(-self.real, -self.dual)

    def __pos__(self):
        return self

    def __add__(self, other):
        if isinstance(other, Dual):
            return Dual(self.real + other.real, self.dual + other.dual)
        return Dual(self.real + other, self.dual)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Dual):
            return Dual(self.real - other.real, self.dual - other.dual)
        return Dual(self.real - other, self.dual)

    def __rsub__(self, other):
        return Dual(other - self.real, -self.dual)

    def __mul__(self, other):
        if isinstance(other, Dual):
            return Dual(self.real * other.real,
                        self.real * other.dual + self.dual * other.real)
        return Dual(self.real * other, self.dual * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Dual):
            return Dual(self.real / other.real,
                        (self.dual * other.real - self.real * other.dual) / (other.real * other.real))
        return Dual(self.real / other, self.dual / other)

    def __rtruediv__(self, other):
        return Dual(other / self.real, -other * self.dual / (self.real * self.real))

    def __pow__(self, power):
        if isinstance(power, Dual):
            return exp(power * log(self))
        if power == 0:
            return Dual(self.real ** 0, 0.0 * self.dual)
        return Dual(self.real ** power, power * self.real ** (power - 1) * self.dual)

    def __rpow__(self, base):
        return exp(self * np.log(base))


def power(base, exponent):
    if isinstance(base, Dual) or isinstance(exponent, Dual):
        return base ** exponent
    return np.power(base, exponent)


def sin(x):
    if isinstance(x, Dual):
        return Dual(sin(x.real), cos(x.real) * x.dual)
    return np.sin(x)


def cos(x):
    if isinstance(x, Dual):
        return Dual(cos(x.real), -sin(x.real) * x.dual)
    return np.cos(x)


def sinh(x):
    if isinstance(x, Dual):
        return Dual(sinh(x.real), cosh(x.real) * x.dual)
    return np.sinh(x)


def cosh(x):
    if isinstance(x, Dual):
        return Dual(cosh(x.real), sinh(x.real) * x.dual)
    return np.cosh(x)


def exp(x):
    if isinstance(x, Dual):
        e = exp(x.real)
        return Dual(e, e * x.dual)
    return np.exp(x)


def log(x):
    if isinstance(x, Dual):
        return Dual(log(x.real), x.dual / x.real)
    return np.log(x)


def sqrt(x):
    if isinstance(x, Dual):
        s = sqrt(x.real)
        return Dual(s, x.dual / (2.0 * s))
    return np.sqrt(x)


def atan(x):
    if isinstance(x, Dual):
        return Dual(atan(x.real), x.dual / (1.0 + x.real * x.real))
    return np.arctan(x)


FUNCTIONS = {
    "sin": sin,
    "cos": cos,
    "sinh": sinh,
    "cosh": cosh,
    "exp": exp,
    "log": log,
    "sqrt": sqrt,
    "atan": atan,
}


def seed(value, flags: Sequence[bool]):
    """Lift ``value`` into a nested Dual, one level per flag.

    Level k gets derivative seed 1 when ``flags[k]`` is true, else 0.
    """
    x = value
    for flag in flags:
        x = Dual(x, 1.0 if flag else 0.0)
    return x


def coefficient(x: Any, mask: Sequence[bool]):
    """Read the coefficient selected by ``mask`` (innermost level first)."""
    part = x
    for selected in reversed(mask):
        if isinstance(part, Dual):
            part = part.dual if selected else part.real
        elif selected:
            return 0.0
    return part
