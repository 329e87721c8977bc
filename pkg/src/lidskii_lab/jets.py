"""Truncated power series ("jets") with complex coefficients.

A :class:`Jet` of degree ``d`` holds the Taylor coefficients
``a_0, ..., a_d`` of a function about some expansion point::

    f(x0 + eps) = a_0 + a_1*eps + ... + a_d*eps**d + O(eps**(d+1))

Arithmetic and the elementary functions below propagate these coefficients
exactly (up to round-off), so ``k! * a_k`` is the k-th derivative at ``x0``.
Composition with analytic scalar functions uses the usual first-order
recurrences (``y' = u' y`` for ``exp`` and friends), which keeps every
operation O(d**2).
"""

from __future__ import annotations

import cmath
from typing import Union

import numpy as np

Number = Union[int, float, complex]


class Jet:
    """Truncated power series ``sum_k c[k] eps**k`` up to ``eps**degree``."""

    __slots__ = ("c",)
    __array_priority__ = 1000

    def __init__(self, coeffs):
        c = np.asarray(coeffs, dtype=complex)
        if c.ndim != 1 or c.size == 0:
            raise ValueError("jet coefficients must be a non-empty 1-d sequence")
        self.c = c

    @classmethod
    def variable(cls, x0: Number, degree: int) -> "Jet":
        """The identity ``x0 + eps`` truncated at ``degree``."""
        c = np.zeros(degree + 1, dtype=complex)
        c[0] = x0
        if degree >= 1:
            c[1] = 1.0
        return cls(c)

    @classmethod
    def constant(cls, value: Number, degree: int) -> "Jet":
        c = np.zeros(degree + 1, dtype=complex)
        c[0] = value
        return cls(c)

    @property
    def degree(self) -> int:
        return self.c.size - 1

    def __len__(self):
        return self.c.size

    def __getitem__(self, k):
        return self.c[k]

    def __repr__(self):
        return f"Jet({self.c!r})"

    def derivatives(self) -> np.ndarray:
        """Derivatives ``f^(k)(x0)`` for ``k = 0..degree``."""
        k = np.arange(self.c.size)
        fact = np.array([float(np.prod(np.arange(1, j + 1))) for j in k])
        return self.c * fact

    def _coerce(self, other) -> "Jet":
        if isinstance(other, Jet):
            if other.degree != self.degree:
                raise ValueError("jets of different degree cannot be combined")
            return other
        return Jet.constant(other, self.degree)

    def __add__(self, other):
        return Jet(self.c + self._coerce(other).c)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.c)

    def __sub__(self, other):
        return Jet(self.c - self._coerce(other).c)

    def __rsub__(self, other):
        return Jet(self._coerce(other).c - self.c)

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.c * complex(other))
        o = self._coerce(other)
        n = self.c.size
        return Jet(np.convolve(self.c, o.c)[:n])

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.c / complex(other))
        return self * self._coerce(other).reciprocal()

    def __rtruediv__(self, other):
        return self._coerce(other) * self.reciprocal()

    def __pow__(self, a):
        if isinstance(a, Jet):
            return exp(a * log(self))
        return power(self, a)

    def reciprocal(self) -> "Jet":
        v = self.c
        if v[0] == 0:
            raise ZeroDivisionError("reciprocal of a jet with zero constant term")
        n = v.size
        y = np.zeros(n, dtype=complex)
        y[0] = 1.0 / v[0]
        for k in range(1, n):
            y[k] = -np.dot(v[1:k + 1], y[k - 1::-1][:k]) / v[0]
        return Jet(y)


def exp(u: Jet) -> Jet:
    """``exp`` of a jet via ``y_k = (1/k) sum_j j u_j y_{k-j}``."""
    c = u.c
    n = c.size
    y = np.zeros(n, dtype=complex)
    y[0] = cmath.exp(c[0])
    j = np.arange(1, n)
    for k in range(1, n):
        y[k] = np.dot(j[:k] * c[1:k + 1], y[k - 1::-1][:k]) / k
    return Jet(y)


def log(v: Jet) -> Jet:
    """Principal ``log`` of a jet; the constant term must be nonzero."""
    c = v.c
    if c[0] == 0:
        raise ValueError("log of a jet with zero constant term")
    n = c.size
    w = np.zeros(n, dtype=complex)
    w[0] = cmath.log(c[0])
    for k in range(1, n):
        acc = 0j
        for j in range(1, k):
            acc += j * w[j] * c[k - j]
        w[k] = (c[k] - acc / k) / c[0]
    return Jet(w)


def power(v: Jet, a: Number) -> Jet:
    """``v**a`` on the principal branch (``exp(a log v0)`` at order zero)."""
    c = v.c
    if c[0] == 0:
        raise ValueError("non-integer power of a jet with zero constant term")
    n = c.size
    y = np.zeros(n, dtype=complex)
    y[0] = cmath.exp(a * cmath.log(c[0]))
    for k in range(1, n):
        acc = 0j
        for j in range(1, k + 1):
            acc += ((a + 1) * j - k) * c[j] * y[k - j]
        y[k] = acc / (k * c[0])
    return Jet(y)


def compose_scalar(v: Jet, derivs) -> Jet:
    """Compose an analytic scalar function with a jet.

    ``derivs`` holds ``g(v0), g'(v0), ..., g^(d)(v0)``; the result is the jet
    of ``g(v(eps))`` (Faa di Bruno through repeated jet multiplication).
    """
    n = v.c.size
    dv = Jet(np.concatenate([[0.0], v.c[1:]]))
    out = Jet.constant(derivs[0], n - 1)
    term = Jet.constant(1.0, n - 1)
    fact = 1.0
    for k in range(1, n):
        term = term * dv
        fact *= k
        out = out + term * (derivs[k] / fact)
    return out
