"""Smooth bump and step profiles with exact jets, plus cached antiderivatives.

Everything here is built from the standard mollifier exp(4 - 1/(u(1-u))) and
variants of the exp(-1/u) smooth step, evaluated through :class:`Jet2` so the
first two derivatives are exact to roundoff.
"""

from __future__ import annotations

import numpy as np

from .jets import Jet2
from .quadrature import PiecewiseCheb

_TINY = 1e-300


def bump_jet(u) -> Jet2:
    """Standard mollifier normalized to peak value 1: exp(4 - 1/(u(1-u))) on (0,1)."""
    u = np.asarray(u, dtype=float)
    inside = (u > 0.0) & (u < 1.0)
    us = np.where(inside, u, 0.5)
    j = Jet2.variable(us)
    s = j * (1.0 - j)
    val = (Jet2.constant(np.full_like(us, 4.0)) - 1.0 / s).exp()
    zero = Jet2.constant(np.zeros_like(us))
    return val.where(inside, zero)


def smooth_step_jet(u) -> Jet2:
    """C-infinity step, flat at both ends: r(u)/(r(u)+r(1-u)) with r(u)=exp(-1/u)."""
    u = np.asarray(u, dtype=float)
    lo = u <= 0.0
    hi = u >= 1.0
    us = np.where(lo | hi, 0.5, u)
    j = Jet2.variable(us)
    # exp(-1/u) / (exp(-1/u) + exp(-1/(1-u))) computed as 1/(1 + exp(1/u - 1/(1-u)))
    expo = 1.0 / j - 1.0 / (1.0 - j)
    capped = np.abs(expo.f) >= 150.0
    expo = expo.where(~capped, Jet2.constant(np.where(expo.f > 0, 150.0, -150.0) * np.ones_like(us)))
    sig = 1.0 / (1.0 + expo.exp())
    sig = sig.where(~capped, Jet2.constant(np.where(expo.f > 0, 0.0, 1.0) * np.ones_like(us)))
    zero = Jet2.constant(np.zeros_like(us))
    one = Jet2.constant(np.ones_like(us))
    return sig.where(~(lo | hi), zero.where(lo, one))


def gentle_step_jet(u, delta: float = 0.12) -> Jet2:
    """C-infinity step from 0 to 1 with max slope 1/(1-2*delta).

    A linear ramp with plateaus, convolved with the standard mollifier of
    width ``delta``: far gentler than the exponential step.
    """
    u = np.asarray(u, dtype=float)
    lo = mollified_ramp_jet(u - delta, delta)
    hi = mollified_ramp_jet(u - 1.0 + delta, delta)
    scale = 1.0 / (1.0 - 2.0 * delta)
    return Jet2((lo.f - hi.f) * scale, (lo.d1 - hi.d1) * scale,
                (lo.d2 - hi.d2) * scale)


def ramp_sharp_flat_jet(u) -> Jet2:
    """Smooth ramp with unit slope at 0 and all derivatives vanishing at 1:
    1 - exp(-u/(1-u)) on [0,1)."""
    u = np.asarray(u, dtype=float)
    lo = u <= 0.0
    hi = u >= 1.0
    us = np.where(lo | hi, 0.5, u)
    j = Jet2.variable(us)
    val = 1.0 - (-(j / (1.0 - j))).exp()
    zero = Jet2.constant(np.zeros_like(us))
    one = Jet2.constant(np.ones_like(us))
    return val.where(~(lo | hi), zero.where(lo, one))


class _MollifierTables:
    """Lazy caches: normalization, CDF and its antiderivative, slope extrema."""

    def __init__(self):
        self._cdf = None
        self._cdf2 = None
        self._mass = None
        self._slope_min = None
        self._slope_max = None

    def _build(self):
        if self._cdf is not None:
            return
        breaks = np.linspace(0.0, 1.0, 17)
        dens = PiecewiseCheb.from_function(lambda u: bump_jet(u).f, breaks, deg=32)
        cdf_raw = dens.antiderivative()
        mass = cdf_raw(np.array([1.0]))[0]
        self._mass = float(mass)
        scaled = PiecewiseCheb([p / mass for p in cdf_raw.pieces], cdf_raw.breaks)
        self._cdf = scaled
        self._cdf2 = scaled.antiderivative()

    @property
    def mass(self) -> float:
        self._build()
        return self._mass

    def cdf(self, u):
        """M(u) = (1/mass) * integral of the mollifier from 0 to u."""
        self._build()
        u = np.asarray(u, dtype=float)
        return np.where(u <= 0.0, 0.0, np.where(u >= 1.0, 1.0, self._cdf(np.clip(u, 0.0, 1.0))))

    def cdf_int(self, u):
        """R(u) = integral of M from 0 to u, extended linearly past 1."""
        self._build()
        u = np.asarray(u, dtype=float)
        top = self._cdf2(np.array([1.0]))[0]
        return np.where(u <= 0.0, 0.0,
                        np.where(u >= 1.0, top + (u - 1.0),
                                 self._cdf2(np.clip(u, 0.0, 1.0))))

    def _build_slopes(self):
        if self._slope_min is not None:
            return
        u = np.linspace(1e-6, 1.0 - 1e-6, 20001)
        d = bump_jet(u).d1
        for which in ("min", "max"):
            i = int(np.argmin(d) if which == "min" else np.argmax(d))
            lo, hi = u[max(i - 1, 0)], u[min(i + 1, len(u) - 1)]
            for _ in range(60):
                grid = np.linspace(lo, hi, 9)
                dg = bump_jet(grid).d1
                j = int(np.argmin(dg) if which == "min" else np.argmax(dg))
                lo, hi = grid[max(j - 1, 0)], grid[min(j + 1, 8)]
            val = bump_jet(np.array([0.5 * (lo + hi)])).d1[0]
            if which == "min":
                self._slope_min = float(val)
            else:
                self._slope_max = float(val)

    @property
    def slope_min(self) -> float:
        self._build_slopes()
        return self._slope_min

    @property
    def slope_max(self) -> float:
        self._build_slopes()
        return self._slope_max


MOLLIFIER = _MollifierTables()


def mollified_ramp_jet(t, delta: float) -> Jet2:
    """Jet of the ramp max(t,0) convolved with the width-``delta`` mollifier.

    Value r(t), with r'(t) the mollifier CDF and r''(t) the mollifier itself;
    equals 0 for t <= -delta and t for t >= delta.
    """
    t = np.asarray(t, dtype=float)
    u = (t + delta) / (2.0 * delta)
    val = 2.0 * delta * MOLLIFIER.cdf_int(np.clip(u, 0.0, 1.0))
    val = np.where(u >= 1.0, t, np.where(u <= 0.0, 0.0, val))
    d1 = MOLLIFIER.cdf(u)
    d2 = bump_jet(u).f / (2.0 * delta * MOLLIFIER.mass)
    return Jet2(val, d1, d2)
