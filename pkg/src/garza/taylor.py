"""Truncated Taylor arithmetic for exact-to-rounding derivatives.

A :class:`Jet` stores normalized Taylor coefficients ``c[r] = f^(r)(x) / r!``
of a function at one or many points ``x``.  Ordinary numpy-style code such as
``lambda x: x**2 / (1 + x)**4`` works unchanged on jets, so a single function
definition serves both plain evaluation and high-order differentiation.

Supported: ``+ - * /``, ``**`` (integer and real exponents), and the ufuncs
``exp, log, sin, cos, sqrt, negative, square, reciprocal, power, absolute``
(the last only where the value is nonzero).
"""

from __future__ import annotations

from math import factorial

import numpy as np


class Jet:
    """Taylor coefficients of a function, shape ``(order + 1, *points)``."""

    __array_priority__ = 100

    def __init__(self, coeffs):
        self.c = np.asarray(coeffs, dtype=float)

    @classmethod
    def variable(cls, x, order: int) -> "Jet":
        x = np.asarray(x, dtype=float)
        c = np.zeros((order + 1,) + x.shape)
        c[0] = x
        if order >= 1:
            c[1] = 1.0
        return cls(c)

    @property
    def order(self) -> int:
        return self.c.shape[0] - 1

    @property
    def value(self) -> np.ndarray:
        return self.c[0]

    def derivatives(self) -> np.ndarray:
        """Derivative values ``f^(r)(x)`` for r = 0..order."""
        fac = np.array([factorial(r) for r in range(self.order + 1)], dtype=float)
        return self.c * fac.reshape((-1,) + (1,) * (self.c.ndim - 1))

    def diff(self) -> "Jet":
        """Jet of the derivative; one order is lost."""
        r = np.arange(1, self.order + 1, dtype=float)
        return Jet(self.c[1:] * r.reshape((-1,) + (1,) * (self.c.ndim - 1)))

    def truncate(self, order: int) -> "Jet":
        return Jet(self.c[: order + 1])

    # -- helpers -----------------------------------------------------------

    def _coerce(self, other) -> "Jet":
        if isinstance(other, Jet):
            return other
        o = np.asarray(other, dtype=float)
        c = np.zeros((self.order + 1,) + np.broadcast_shapes(o.shape, self.c.shape[1:]))
        c[0] = o
        return Jet(c)

    @staticmethod
    def _align(a: "Jet", b: "Jet"):
        n = min(a.order, b.order)
        shape = np.broadcast_shapes(a.c.shape[1:], b.c.shape[1:])
        ca = np.broadcast_to(a.c[: n + 1], (n + 1,) + shape)
        cb = np.broadcast_to(b.c[: n + 1], (n + 1,) + shape)
        return ca, cb

    # -- arithmetic --------------------------------------------------------

    def __neg__(self):
        return Jet(-self.c)

    def __pos__(self):
        return self

    def __add__(self, other):
        ca, cb = self._align(self, self._coerce(other))
        return Jet(ca + cb)

    __radd__ = __add__

    def __sub__(self, other):
        ca, cb = self._align(self, self._coerce(other))
        return Jet(ca - cb)

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, Jet):
            o = np.asarray(other, dtype=float)
            return Jet(self.c * o)
        ca, cb = self._align(self, other)
        out = np.zeros(ca.shape)
        for r in range(ca.shape[0]):
            out[r] = np.sum(ca[: r + 1] * cb[r::-1], axis=0)
        return Jet(out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.c / np.asarray(other, dtype=float))
        ca, cb = self._align(self, other)
        out = np.zeros(ca.shape)
        for r in range(ca.shape[0]):
            acc = ca[r] - np.sum(cb[1 : r + 1] * out[r - 1 :: -1][:r], axis=0) if r else ca[0]
            out[r] = acc / cb[0]
        return Jet(out)

    def __rtruediv__(self, other):
        return self._coerce(other) / self

    def __pow__(self, a):
        if isinstance(a, Jet):
            return exp(log(self) * a)
        if float(a).is_integer():
            return _int_power(self, int(a))
        return _real_power(self, float(a))

    def __rpow__(self, base):
        return exp(self * np.log(base))

    def __abs__(self):
        s = np.sign(self.c[0])
        if np.any(s == 0):
            raise ValueError("absolute value is not differentiable at zero")
        return Jet(self.c * s)

    def __repr__(self):
        return f"Jet(order={self.order}, shape={self.c.shape[1:]})"

    # -- numpy interop -----------------------------------------------------

    def __array_ufunc__(self, ufunc, method, *inputs, **kwargs):
        if method != "__call__" or kwargs:
            return NotImplemented
        unary = _UNARY.get(ufunc)
        if unary is not None and len(inputs) == 1:
            return unary(inputs[0])
        binary = _BINARY.get(ufunc)
        if binary is not None and len(inputs) == 2:
            return binary(*inputs)
        return NotImplemented


def _int_power(f: Jet, n: int) -> Jet:
    if n < 0:
        return 1.0 / _int_power(f, -n)
    result = f._coerce(1.0)
    base = f
    while n:
        if n & 1:
            result = result * base
        n >>= 1
        if n:
            base = base * base
    return result


def _real_power(f: Jet, a: float) -> Jet:
    c = f.c
    if np.any(c[0] <= 0):
        raise ValueError("real power of a jet requires a positive value")
    out = np.zeros(c.shape)
    out[0] = c[0] ** a
    for r in range(1, c.shape[0]):
        i = np.arange(1, r + 1).reshape((-1,) + (1,) * (c.ndim - 1))
        out[r] = np.sum(((a + 1) * i - r) * c[1 : r + 1] * out[r - 1 :: -1][:r], axis=0) / (r * c[0])
    return Jet(out)


def exp(f):
    if not isinstance(f, Jet):
        return np.exp(f)
    c = f.c
    out = np.zeros(c.shape)
    out[0] = np.exp(c[0])
    for r in range(1, c.shape[0]):
        i = np.arange(1, r + 1).reshape((-1,) + (1,) * (c.ndim - 1))
        out[r] = np.sum(i * c[1 : r + 1] * out[r - 1 :: -1][:r], axis=0) / r
    return Jet(out)


def log(f):
    if not isinstance(f, Jet):
        return np.log(f)
    c = f.c
    out = np.zeros(c.shape)
    out[0] = np.log(c[0])
    for r in range(1, c.shape[0]):
        acc = c[r].copy()
        for i in range(1, r):
            acc -= (i / r) * out[i] * c[r - i]
        out[r] = acc / c[0]
    return Jet(out)


def _sincos(f: Jet):
    c = f.c
    s = np.zeros(c.shape)
    k = np.zeros(c.shape)
    s[0] = np.sin(c[0])
    k[0] = np.cos(c[0])
    for r in range(1, c.shape[0]):
        i = np.arange(1, r + 1).reshape((-1,) + (1,) * (c.ndim - 1))
        s[r] = np.sum(i * c[1 : r + 1] * k[r - 1 :: -1][:r], axis=0) / r
        k[r] = -np.sum(i * c[1 : r + 1] * s[r - 1 :: -1][:r], axis=0) / r
    return Jet(s), Jet(k)


def sin(f):
    return _sincos(f)[0] if isinstance(f, Jet) else np.sin(f)


def cos(f):
    return _sincos(f)[1] if isinstance(f, Jet) else np.cos(f)


def sqrt(f):
    return _real_power(f, 0.5) if isinstance(f, Jet) else np.sqrt(f)


def _as_jet_pair(a, b):
    if isinstance(a, Jet):
        return a, a._coerce(b)
    return b._coerce(a), b


_UNARY = {
    np.exp: exp,
    np.log: log,
    np.sin: sin,
    np.cos: cos,
    np.sqrt: sqrt,
    np.negative: lambda f: -f,
    np.positive: lambda f: f,
    np.square: lambda f: f * f,
    np.reciprocal: lambda f: 1.0 / f,
    np.absolute: abs,
}

_BINARY = {
    np.add: lambda a, b: _as_jet_pair(a, b)[0] + _as_jet_pair(a, b)[1],
    np.subtract: lambda a, b: _as_jet_pair(a, b)[0] - _as_jet_pair(a, b)[1],
    np.multiply: lambda a, b: a * b if isinstance(a, Jet) else b * a,
    np.true_divide: lambda a, b: a / b if isinstance(a, Jet) else b.__rtruediv__(a),
    np.power: lambda a, b: a**b if isinstance(a, Jet) else b.__rpow__(a),
}


def taylor(func, x, order: int) -> Jet:
    """Evaluate ``func`` on a variable jet at ``x``.

    Constant-valued functions (returning a plain number) are promoted.
    """
    t = Jet.variable(x, order)
    out = func(t)
    if not isinstance(out, Jet):
        c = np.zeros((order + 1,) + np.shape(x))
        c[0] = out
        out = Jet(c)
    return out


def derivatives(func, x, order: int) -> np.ndarray:
    """Array ``D[r] = func^(r)(x)`` for r = 0..order."""
    return taylor(func, x, order).derivatives()


def finite_difference_derivatives(func, x, order: int) -> np.ndarray:
    """Central finite-difference fallback, accuracy O(h^2) per order.

    The step is ``eps**(1/(r+2)) * max(1, |x|)`` for the r-th derivative,
    which balances truncation and rounding error of the binomial stencil.
    """
    x = np.asarray(x, dtype=float)
    out = np.zeros((order + 1,) + x.shape)
    out[0] = func(x)
    eps = np.finfo(float).eps
    scale = np.maximum(1.0, np.abs(x))
    for r in range(1, order + 1):
        h = eps ** (1.0 / (r + 2)) * scale
        acc = np.zeros(x.shape)
        for i in range(r + 1):
            coef = (-1) ** i * factorial(r) / (factorial(i) * factorial(r - i))
            acc += coef * func(x + (r / 2 - i) * h)
        out[r] = acc / h**r
    return out
