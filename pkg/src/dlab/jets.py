"""Forward-mode second-order jets for exact derivatives of scalar formulas.

A :class:`Jet2` carries (value, first, second derivative) through arithmetic,
so the messy closed-form profiles (mollifiers, smooth steps, field formulas)
get derivatives that are exact to roundoff instead of finite differences.
All components broadcast like numpy arrays.
"""

from __future__ import annotations

import numpy as np


class Jet2:
    __slots__ = ("f", "d1", "d2")

    def __init__(self, f, d1=0.0, d2=0.0):
        if type(f) is np.ndarray and type(d1) is np.ndarray and type(d2) is np.ndarray \
                and f.shape == d1.shape == d2.shape:
            self.f = f
            self.d1 = d1
            self.d2 = d2
            return
        self.f = np.asarray(f, dtype=float)
        self.d1 = np.broadcast_to(np.asarray(d1, dtype=float), self.f.shape).copy() \
            if np.shape(d1) != np.shape(self.f) else np.asarray(d1, dtype=float)
        self.d2 = np.broadcast_to(np.asarray(d2, dtype=float), self.f.shape).copy() \
            if np.shape(d2) != np.shape(self.f) else np.asarray(d2, dtype=float)

    @staticmethod
    def variable(x):
        x = np.asarray(x, dtype=float)
        return Jet2(x, np.ones_like(x), np.zeros_like(x))

    @staticmethod
    def constant(c, like=None):
        if like is not None:
            c = np.broadcast_to(np.asarray(c, dtype=float), np.shape(like.f)).copy()
        c = np.asarray(c, dtype=float)
        return Jet2(c, np.zeros_like(c), np.zeros_like(c))

    def _coerce(self, other):
        if isinstance(other, Jet2):
            return other
        return Jet2.constant(np.broadcast_to(np.asarray(other, float), self.f.shape))

    def __add__(self, other):
        o = self._coerce(other)
        return Jet2(self.f + o.f, self.d1 + o.d1, self.d2 + o.d2)

    __radd__ = __add__

    def __neg__(self):
        return Jet2(-self.f, -self.d1, -self.d2)

    def __sub__(self, other):
        o = self._coerce(other)
        return Jet2(self.f - o.f, self.d1 - o.d1, self.d2 - o.d2)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        return Jet2(self.f * o.f,
                    self.d1 * o.f + self.f * o.d1,
                    self.d2 * o.f + 2.0 * self.d1 * o.d1 + self.f * o.d2)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        q = self.f / o.f
        d1 = (self.d1 - q * o.d1) / o.f
        d2 = (self.d2 - 2.0 * d1 * o.d1 - q * o.d2) / o.f
        return Jet2(q, d1, d2)

    def __rtruediv__(self, other):
        return self._coerce(other) / self

    def exp(self):
        e = np.exp(self.f)
        return Jet2(e, e * self.d1, e * (self.d2 + self.d1 * self.d1))

    def log(self):
        d1 = self.d1 / self.f
        return Jet2(np.log(self.f), d1, self.d2 / self.f - d1 * d1)

    def sqrt(self):
        r = np.sqrt(self.f)
        d1 = 0.5 * self.d1 / r
        return Jet2(r, d1, (0.5 * self.d2 - d1 * d1) / r)

    def where(self, cond, other):
        """Elementwise select: self where cond, other elsewhere."""
        o = self._coerce(other)
        return Jet2(np.where(cond, self.f, o.f),
                    np.where(cond, self.d1, o.d1),
                    np.where(cond, self.d2, o.d2))

    def compose_outer(self, g_of_f, dg, d2g):
        """Jet of g∘(this) given g, g', g'' evaluated at this.f."""
        return Jet2(g_of_f,
                    dg * self.d1,
                    d2g * self.d1 * self.d1 + dg * self.d2)

    def as_tuple(self):
        return self.f, self.d1, self.d2
