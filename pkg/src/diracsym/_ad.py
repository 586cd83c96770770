"""Minimal forward-mode automatic differentiation on scalars.

A ``Dual`` carries a float value and a gradient vector.  Object-dtype numpy
arrays of Duals flow through generic numeric code (metric evaluators written
with numpy ufuncs, the Gram-Schmidt loop) because ufuncs dispatch to the
methods defined here.  Only first derivatives are tracked.
"""
from __future__ import annotations

import math

import numpy as np


class Dual:
    __slots__ = ("val", "grad")

    def __init__(self, val, grad):
        self.val = float(val)
        self.grad = np.asarray(grad, dtype=float)

    # -- helpers ---------------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, Dual):
            return other
        return Dual(other, np.zeros_like(self.grad))

    def __repr__(self):
        return f"Dual({self.val!r}, {self.grad!r})"

    # -- arithmetic ------------------------------------------------------
    def __add__(self, other):
        o = self._coerce(other)
        return Dual(self.val + o.val, self.grad + o.grad)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        return Dual(self.val - o.val, self.grad - o.grad)

    def __rsub__(self, other):
        o = self._coerce(other)
        return Dual(o.val - self.val, o.grad - self.grad)

    def __mul__(self, other):
        o = self._coerce(other)
        return Dual(self.val * o.val, self.val * o.grad + o.val * self.grad)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        inv = 1.0 / o.val
        return Dual(self.val * inv,
                    inv * self.grad - self.val * inv * inv * o.grad)

    def __rtruediv__(self, other):
        o = self._coerce(other)
        return o.__truediv__(self)

    def __pow__(self, p):
        if isinstance(p, Dual):
            raise TypeError("dual exponents are not supported")
        v = self.val ** p
        return Dual(v, p * self.val ** (p - 1) * self.grad)

    def __neg__(self):
        return Dual(-self.val, -self.grad)

    def __pos__(self):
        return self

    def __abs__(self):
        s = 1.0 if self.val >= 0.0 else -1.0
        return Dual(abs(self.val), s * self.grad)

    # comparisons act on the value part; used by guards and pivots
    def __lt__(self, other):
        return self.val < (other.val if isinstance(other, Dual) else other)

    def __le__(self, other):
        return self.val <= (other.val if isinstance(other, Dual) else other)

    def __gt__(self, other):
        return self.val > (other.val if isinstance(other, Dual) else other)

    def __ge__(self, other):
        return self.val >= (other.val if isinstance(other, Dual) else other)

    def __float__(self):
        # only exact when the gradient is irrelevant; used by guards
        return self.val

    # -- ufunc hooks -----------------------------------------------------
    def sqrt(self):
        r = math.sqrt(self.val)
        return Dual(r, (0.5 / r) * self.grad)

    def sin(self):
        return Dual(math.sin(self.val), math.cos(self.val) * self.grad)

    def cos(self):
        return Dual(math.cos(self.val), -math.sin(self.val) * self.grad)

    def tan(self):
        c = math.cos(self.val)
        return Dual(math.tan(self.val), self.grad / (c * c))

    def exp(self):
        e = math.exp(self.val)
        return Dual(e, e * self.grad)

    def log(self):
        return Dual(math.log(self.val), self.grad / self.val)

    def sinh(self):
        return Dual(math.sinh(self.val), math.cosh(self.val) * self.grad)

    def cosh(self):
        return Dual(math.cosh(self.val), math.sinh(self.val) * self.grad)

    def tanh(self):
        t = math.tanh(self.val)
        return Dual(t, (1.0 - t * t) * self.grad)

    def arctan(self):
        return Dual(math.atan(self.val),
                    self.grad / (1.0 + self.val * self.val))


def seed_vector(x):
    """Lift a coordinate vector to Duals seeded with the identity Jacobian."""
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    out = np.empty(n, dtype=object)
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        out[i] = Dual(x[i], e)
    return out


def lift_matrix(g, dg):
    """Build a Dual matrix from a value matrix and its coordinate gradient.

    ``dg[k, i, j]`` is the k-th partial of ``g[i, j]``.
    """
    g = np.asarray(g, dtype=float)
    dg = np.asarray(dg, dtype=float)
    n, m = g.shape
    out = np.empty((n, m), dtype=object)
    for i in range(n):
        for j in range(m):
            out[i, j] = Dual(g[i, j], dg[:, i, j])
    return out


def value(a):
    """Strip Duals from a scalar or object array."""
    if isinstance(a, Dual):
        return a.val
    a = np.asarray(a)
    if a.dtype != object:
        return a.astype(float)
    out = np.empty(a.shape, dtype=float)
    flat_in = a.reshape(-1)
    flat_out = out.reshape(-1)
    for i, v in enumerate(flat_in):
        flat_out[i] = v.val if isinstance(v, Dual) else float(v)
    return out


def gradient(a, n):
    """Extract the gradient of a scalar or object array.

    Returns an array with a leading axis of length ``n`` (the seed
    dimension).  Entries that are plain numbers contribute zero rows.
    """
    if isinstance(a, Dual):
        return np.array(a.grad, dtype=float)
    a = np.asarray(a)
    out = np.zeros((n,) + a.shape, dtype=float)
    if a.dtype != object:
        return out
    it = np.ndindex(*a.shape)
    for idx in it:
        v = a[idx]
        if isinstance(v, Dual):
            out[(slice(None),) + idx] = v.grad
    return out
