"""Mather invariant: lifts, variation measurement, prescribed invariants.

The lift M = psi_Y^{-1} o psi_X is evaluated through the renormalized chart
identity M = T_{-m} o psi_Y^{-1} o f^k o psi_X o T_{-n} with n = m = N, which
reads both generating fields only near the endpoints (where reconstruction is
exact for structured trees and fast otherwise) and carries the middle of the
interval by exact orbit iteration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .charts import FlowChart, UnitChart, chart_for_positive
from .diffeo import Compose, Diffeo, Inverse
from .errors import ConstructionError, DomainError, InconsistencyError
from .intervals import Interval
from .quadrature import cheb_fit, cheb_from_values, cheb_nodes, integrate
from .szekeres import (declared_flow_data, left_field, right_field,
                       structural_field_zone, _oriented)

DEFAULT_RENORM_DEPTH = 8
TRIVIAL_VAR_THRESHOLD = 1e-4


@dataclass
class MatherLift:
    """Circle-map lift M with M(t+1) = M(t) + 1, plus derivative access."""

    a: float
    b: float
    n: int
    m: int
    k: int
    method: str
    _m0: object = dc_field(repr=False, default=None)
    _dm0: object = dc_field(repr=False, default=None)
    var_log: float = float("nan")

    def __call__(self, t):
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        k = np.floor(t_arr)
        out = k + self._m0(t_arr - k)
        return out if np.ndim(t) else float(out[0])

    def deriv(self, t):
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        out = self._dm0(t_arr - np.floor(t_arr))
        return out if np.ndim(t) else float(out[0])

    def sup_to_identity(self, grid_n: int = 512) -> float:
        t = np.linspace(0.0, 1.0, grid_n)
        return float(np.max(np.abs(self(t) - t)))

    def is_trivial(self) -> bool:
        return self.var_log < TRIVIAL_VAR_THRESHOLD


class _RenormEvaluator:
    """Pointwise evaluation data for the renormalized lift of one map."""

    def __init__(self, f: Diffeo, a: float, b: float, N: int, tol: float):
        g, sign = _oriented(f)
        self.g = g
        self.N = int(N)
        self.a = float(a)
        self.b = float(b)
        self.tol = tol
        orbit_a = g.orbit(a, -N, -N + 1)
        self.chart_x = UnitChart(
            lambda s: np.atleast_1d(left_field(g, s, tol=tol)),
            orbit_a[0], orbit_a[1])
        knots_b = g.orbit(b, N - 1, N + 2)
        self.y_knots = np.asarray(knots_b)
        self.charts_y = [
            UnitChart(lambda s: np.atleast_1d(right_field(g, s, tol=tol)),
                      knots_b[j], knots_b[j + 1])
            for j in range(len(knots_b) - 1)]

    def eval(self, t):
        """Arrays (M(t), DM(t), d/dt log DM(t)) for t in [0, 1]."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        g, N = self.g, self.N
        w = self.chart_x.position(t)
        z, logd, nl = g.iterate_log_jet(2 * N, w)
        z = np.clip(z, self.y_knots[0], self.y_knots[-1])
        jdx = np.clip(np.searchsorted(self.y_knots, z, side="right") - 1,
                      0, len(self.charts_y) - 1)
        mval = np.empty_like(t)
        tyn = np.empty_like(t)
        for j in np.unique(jdx):
            msk = jdx == j
            ch = self.charts_y[int(j)]
            mval[msk] = (j - 1) + ch.tau(z[msk])
            tyn[msk] = ch.raw_total
        xw = np.atleast_1d(left_field(g, w, tol=self.tol))
        dxw = np.atleast_1d(left_field(g, w, tol=self.tol, order=1))
        yz = np.atleast_1d(right_field(g, z, tol=self.tol))
        dyz = np.atleast_1d(right_field(g, z, tol=self.tol, order=1))
        tx = self.chart_x.raw_total
        dm = xw * tx * np.exp(logd) / (yz * tyn)
        dlog = tx * (dxw + nl * xw - dyz * np.exp(logd) * xw / yz)
        return mval, dm, dlog


def mather_lift(f: Diffeo, a: float, b: float,
                N: int = DEFAULT_RENORM_DEPTH, tol: float = 1e-8) -> MatherLift:
    """Lift representative of the Mather invariant with base points (a, b).

    Maps with negative direction are measured through their inverse (the
    variation is insensitive to this, and the triviality verdict agrees).
    """
    ev = _RenormEvaluator(f, a, b, N, tol)
    deg = 128
    nodes = cheb_nodes(deg, 0.0, 1.0)
    mv, dmv, _ = ev.eval(nodes)
    m0 = cheb_from_values(mv, 0.0, 1.0)
    dm0 = cheb_from_values(dmv, 0.0, 1.0)
    var = _var_from_evaluator(ev)
    return MatherLift(a=a, b=b, n=N, m=N, k=2 * N, method="renormalized",
                      _m0=m0, _dm0=dm0, var_log=var)


def _var_from_evaluator(ev: _RenormEvaluator, rel_tol: float = 1e-9) -> float:
    probe = np.linspace(0.0, 1.0, 129)
    _, _, signed = ev.eval(probe)
    sgn = np.sign(signed)
    kinks = [0.5 * (probe[i] + probe[i + 1])
             for i in np.nonzero(sgn[:-1] * sgn[1:] < 0)[0]]
    val, _ = integrate(lambda t: np.abs(ev.eval(t)[2]), 0.0, 1.0, rel_tol, kinks,
                       abs_tol=1e-8)
    return val


def var_log_DM(f: Diffeo, a: float, N: int = DEFAULT_RENORM_DEPTH,
               tol: float = 1e-8, cross_check: bool = True):
    """Total variation of log DM via the renormalized route.

    The direct route (integral of |D log X - D log Y| over one fundamental
    interval, both fields reconstructed mid-interval) is computed as a
    cross-check; beyond 5 percent disagreement an error is raised, beyond
    1 percent the result is flagged.
    """
    ev = _RenormEvaluator(f, a, a, N, tol)
    value = _var_from_evaluator(ev)
    if not cross_check:
        return value, float("nan"), False
    direct = var_log_DM_direct(f, a, tol=tol)
    agree_scale = max(abs(value), abs(direct), 1e-6)
    rel = abs(value - direct) / agree_scale
    if rel > 0.05:
        raise InconsistencyError(
            f"Mather variation routes disagree: renormalized {value}, direct {direct}",
            values=(value, direct))
    return value, direct, rel > 0.01


def var_log_DM_direct(f: Diffeo, a: float, tol: float = 1e-8) -> float:
    """Direct route: integral of |D log X - D log Y| over [a, f(a)]."""
    g, _ = _oriented(f)
    b = float(g(a))
    xs_fit = cheb_fit(
        lambda s: np.atleast_1d(left_field(g, s, tol=tol, order=1))
        / np.atleast_1d(left_field(g, s, tol=tol)), a, b, deg=64, max_deg=128)
    ys_fit = cheb_fit(
        lambda s: np.atleast_1d(right_field(g, s, tol=tol, order=1))
        / np.atleast_1d(right_field(g, s, tol=tol)), a, b, deg=64, max_deg=128)
    probe = np.linspace(a, b, 257)
    diff = xs_fit(probe) - ys_fit(probe)
    sgn = np.sign(diff)
    kinks = [0.5 * (probe[i] + probe[i + 1])
             for i in np.nonzero(sgn[:-1] * sgn[1:] < 0)[0]]
    val, _ = integrate(lambda s: np.abs(xs_fit(s) - ys_fit(s)), a, b, 1e-10, kinks,
                       abs_tol=1e-8)
    return val


def predicted_from_bump(f: Diffeo, p: float, bump_map: Diffeo,
                        grid_deg: int = 128) -> MatherLift:
    """Predicted lift of the perturbation f o h without building its fields.

    Valid only when f is structurally a declared flow (trivial invariant):
    the prediction is h read in the flow chart, M = psi^{-1} o h o psi.
    """
    data = declared_flow_data(f)
    if data is None:
        raise DomainError("predicted_from_bump needs a declared-flow base map")
    field, t = data
    chart = chart_for_positive(field, t, anchor=p)

    def m_of(ts):
        ts = np.atleast_1d(ts)
        return np.atleast_1d(chart.psi_inv(
            np.clip(bump_map(chart.psi(ts)), 1e-12, 1 - 1e-12)))

    mv = m_of(cheb_nodes(grid_deg, 0.0, 1.0))
    m0 = cheb_from_values(mv, 0.0, 1.0)
    dm0 = m0.deriv()

    def dlog_dt(ts):
        ts = np.atleast_1d(np.asarray(ts, float))
        x = np.atleast_1d(chart.psi(ts))
        hx, dh, nlh = bump_map.jet(x)
        jx = field.jet(x)
        jh = field.jet(hx)
        xv, dxv = t * jx.f, t * jx.d1
        hv, dhv = t * jh.f, t * jh.d1
        return np.abs(nlh * xv + dxv - dhv * dh * xv / hv)

    var, _ = integrate(dlog_dt, 0.0, 1.0, 1e-10, abs_tol=1e-10)
    return MatherLift(a=p, b=p, n=0, m=0, k=0, method="predicted",
                      _m0=m0, _dm0=dm0, var_log=var)


# ---------------------------------------------------------------------------
# Circle-map lifts and prescribed-invariant constructions
# ---------------------------------------------------------------------------

class CircleLift:
    """Lift of a circle diffeomorphism fixing 0: t + beta(t mod 1)."""

    def jet(self, t):
        raise NotImplementedError

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = self.jet(np.atleast_1d(t))[0]
        return out if t.ndim else float(out[0])

    def deriv(self, t):
        t = np.asarray(t, dtype=float)
        out = self.jet(np.atleast_1d(t))[1]
        return out if t.ndim else float(out[0])

    def invert(self, s):
        """Newton inverse using commutation with the unit translation."""
        s_arr = np.atleast_1d(np.asarray(s, dtype=float))
        x = s_arr.copy()
        for _ in range(100):
            v, d, _ = self.jet(x)
            r = v - s_arr
            if np.max(np.abs(r)) <= 1e-13:
                break
            x = x - r / d
        return x if np.ndim(s) else float(x[0])

    def sup_deriv(self, grid_n: int = 2048) -> float:
        t = np.linspace(0.0, 1.0, grid_n)
        return float(np.max(self.jet(t)[1]))

    def key(self):
        raise NotImplementedError


class BumpLift(CircleLift):
    """t + amp * mollifier(t mod 1): a circle bump fixing 0."""

    def __init__(self, amp: float):
        from .profiles import MOLLIFIER
        bound = 1.0 / max(abs(MOLLIFIER.slope_min), MOLLIFIER.slope_max)
        if abs(amp) >= bound:
            raise ConstructionError("circle bump amplitude breaks monotonicity")
        self.amp = float(amp)

    def jet(self, t):
        from .profiles import bump_jet
        t = np.asarray(t, dtype=float)
        u = t - np.floor(t)
        j = bump_jet(u)
        return t + self.amp * j.f, 1.0 + self.amp * j.d1, self.amp * j.d2

    def key(self):
        return ("bumplift", self.amp)


class SampledLift(CircleLift):
    """Lift reconstructed from values of M on [0, 1] (e.g. a measured one)."""

    def __init__(self, m0_cheb, label="sampled"):
        self._m0 = m0_cheb
        self._d1 = m0_cheb.deriv()
        self._d2 = self._d1.deriv()
        self.label = label

    @classmethod
    def from_function(cls, fn, deg: int = 128, label="sampled"):
        vals = np.atleast_1d(fn(cheb_nodes(deg, 0.0, 1.0)))
        return cls(cheb_from_values(vals, 0.0, 1.0), label=label)

    def jet(self, t):
        t = np.asarray(t, dtype=float)
        k = np.floor(t)
        u = t - k
        return k + self._m0(u), self._d1(u), self._d2(u)

    def key(self):
        return ("sampledlift", self.label)


class InverseLift(CircleLift):
    def __init__(self, inner: CircleLift):
        self.inner = inner

    def jet(self, t):
        t = np.asarray(t, dtype=float)
        x = np.atleast_1d(self.inner.invert(t))
        _, d, d2 = self.inner.jet(x)
        return x, 1.0 / d, -d2 / d ** 3

    def key(self):
        return ("inverselift", self.inner.key())


class BlendedLift(CircleLift):
    """w * inner + (1 - w) * id with w = 1 near 0 and 0 near 1/2.

    The weight has transition width 0.15 on [0.1, 0.25] and [0.75, 0.9].
    """

    def __init__(self, inner: CircleLift):
        self.inner = inner
        probe = np.linspace(0.0, 1.0, 4096)
        if np.any(self.jet(probe)[1] <= 0.0):
            raise ConstructionError("blended lift loses monotonicity; "
                                    "target too far from the identity")

    def _w(self, u):
        from .profiles import smooth_step_jet
        from .jets import Jet2
        a = smooth_step_jet((u - 0.1) / 0.15)
        a = Jet2(a.f, a.d1 / 0.15, a.d2 / 0.15 ** 2)
        b = smooth_step_jet((0.9 - u) / 0.15)
        b = Jet2(b.f, -b.d1 / 0.15, b.d2 / 0.15 ** 2)
        return (1.0 - a * b)

    def jet(self, t):
        from .jets import Jet2
        t = np.asarray(t, dtype=float)
        k = np.floor(t)
        u = t - k
        v, d1, d2 = self.inner.jet(u)
        w = self._w(u)
        inner_jet = Jet2(v - u, d1 - 1.0, d2)   # beta and derivatives
        out = w * inner_jet
        return k + u + out.f, 1.0 + out.d1, out.d2

    def key(self):
        return ("blendedlift", self.inner.key())


class ComposedLift(CircleLift):
    def __init__(self, outer: CircleLift, inner: CircleLift):
        self.outer = outer
        self.inner = inner

    def jet(self, t):
        t = np.asarray(t, dtype=float)
        v, dv, d2v = self.inner.jet(t)
        w, dw, d2w = self.outer.jet(v)
        return w, dw * dv, d2w * dv * dv + dw * d2v

    def key(self):
        return ("composedlift", self.outer.key(), self.inner.key())


class LeftInverseComposedLift(CircleLift):
    """outer^{-1} o inner, evaluated by Newton on the outer lift."""

    def __init__(self, outer: CircleLift, inner: CircleLift):
        self.outer = outer
        self.inner = inner

    def jet(self, t):
        t = np.asarray(t, dtype=float)
        v, dv, d2v = self.inner.jet(t)
        x = np.atleast_1d(self.outer.invert(v))
        _, dox, d2ox = self.outer.jet(x)
        d1 = dv / dox
        # N(out^{-1} o in) = N(in) - (N(out) o out^{-1} o in) * d1
        nl = d2v / dv - (d2ox / dox) * d1
        return x, d1, nl * d1
    def key(self):
        return ("linvcomposedlift", self.outer.key(), self.inner.key())


class WindowLift:
    """A lift restricted to one window [t0, t1], the identity outside.

    Valid when the lift equals the identity near the window edges; this is
    the 'open the circle and extend by the identity' construction.
    """

    def __init__(self, lift: CircleLift, t0: float, t1: float):
        self.lift = lift
        self.t0 = float(t0)
        self.t1 = float(t1)

    def jet(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        inside = (t > self.t0) & (t < self.t1)
        safe = np.where(inside, t, 0.5 * (self.t0 + self.t1))
        v, d1, d2 = self.lift.jet(safe)
        return (np.where(inside, v, t),
                np.where(inside, d1, 1.0),
                np.where(inside, d2, 0.0))

    def invert(self, s):
        s_arr = np.atleast_1d(np.asarray(s, dtype=float))
        inside = (s_arr > self.t0) & (s_arr < self.t1)
        safe = np.where(inside, s_arr, 0.5 * (self.t0 + self.t1))
        x = np.atleast_1d(self.lift.invert(safe))
        out = np.where(inside, x, s_arr)
        return out if np.ndim(s) else float(out[0])

    def key(self):
        return ("windowlift", self.lift.key(), self.t0, self.t1)


class ChartBump(Diffeo):
    """psi o H o psi^{-1}: a time-domain diffeomorphism read on the interval.

    ``chart`` provides psi/psi_inv, ``field_fn(x, order)`` the generating
    field values; H is a WindowLift, so the map is the identity outside
    psi([t0, t1]).
    """

    def __init__(self, chart, field_fn, window: WindowLift, tag):
        object.__setattr__(self, "chart", chart)
        object.__setattr__(self, "field_fn", field_fn)
        object.__setattr__(self, "window", window)
        object.__setattr__(self, "tag", tag)
        object.__setattr__(self, "x_lo", float(chart.psi(window.t0)))
        object.__setattr__(self, "x_hi", float(chart.psi(window.t1)))

    def _jet(self, xa):
        inside = (xa > self.x_lo) & (xa < self.x_hi)
        ones = np.ones_like(xa)
        if not np.any(inside):
            return xa.copy(), ones, np.zeros_like(xa)
        xs = xa[inside]
        tau = np.atleast_1d(self.chart.psi_inv(xs))
        ht, dht, d2ht = self.window.jet(tau)
        ys = np.atleast_1d(self.chart.psi(np.asarray(ht)))
        Xx = np.asarray(self.field_fn(xs, 0), dtype=float)
        Xy = np.asarray(self.field_fn(ys, 0), dtype=float)
        DXx = np.asarray(self.field_fn(xs, 1), dtype=float)
        DXy = np.asarray(self.field_fn(ys, 1), dtype=float)
        dh = Xy * dht / Xx
        nl = (DXy / Xy) * dh - DXx / Xx + (d2ht / dht) / Xx
        y = xa.copy()
        y[inside] = ys
        dy = ones.copy()
        dy[inside] = dh
        nlo = np.zeros_like(xa)
        nlo[inside] = nl
        return y, dy, nlo

    def _invert(self, ya):
        inside = (ya > self.x_lo) & (ya < self.x_hi)
        out = ya.copy()
        if np.any(inside):
            tau = np.atleast_1d(self.chart.psi_inv(ya[inside]))
            back = np.atleast_1d(self.window.invert(tau))
            out[inside] = np.atleast_1d(self.chart.psi(back))
        return out

    def _direction(self):
        return 0

    def identity_below(self):
        return self.x_lo

    def identity_above(self):
        return self.x_hi

    def _endpoint_deriv(self, end):
        return 1.0

    def key(self):
        return ("chartbump", self.tag, self.window.key())


def _full_chart(f: Diffeo, a: float, tol: float = 1e-9):
    """Orbit-translation chart of the left generating field anchored at a."""
    from .charts import OrbitChart, UnitChart
    g, _ = _oriented(f)
    b = float(g(a))
    base = UnitChart(lambda s: np.atleast_1d(left_field(g, s, tol=tol)), a, b)
    return OrbitChart(g, base)


def realize_mather(target: CircleLift, f: Diffeo, p: float,
                   deriv_bound: float = 10.0) -> Diffeo:
    """Perturb f near the orbit of p so the Mather invariant becomes ``target``.

    Splits the target as phi_0 o phi_{1/2} with a fixed partition of unity
    (transition width 0.15), opens the circle at 1/2 and 0 respectively, and
    conjugates both pieces into the interval through the flow chart.
    """
    if target.sup_deriv() > deriv_bound:
        raise ConstructionError(
            f"target lift derivative exceeds the bound {deriv_bound}")
    g, _ = _oriented(f)
    chart = _full_chart(g, p)
    field_fn = lambda x, order=0: np.atleast_1d(left_field(g, x, order=order))
    phi0 = BlendedLift(target)
    phi_half = LeftInverseComposedLift(phi0, target)
    h0 = ChartBump(chart, field_fn, WindowLift(phi0, 0.5, 1.5),
                   tag=("realize0", target.key(), f.key(), p))
    h_half = ChartBump(chart, field_fn, WindowLift(phi_half, -1.0, 0.0),
                       tag=("realizeH", target.key(), f.key(), p))
    return Compose(h0, Compose(g, h_half))


def expected_realized_lift(target: CircleLift):
    """The predicted representative T_{-3} o (Phi_0 o T_1 o Phi_{1/2})^3 on [-1,0].

    Phi_0 and Phi_{1/2} act through their opened-circle windows (identity
    outside [1/2, 3/2] and [-1, 0] respectively).
    """
    w0 = WindowLift(BlendedLift(target), 0.5, 1.5)
    wh = WindowLift(LeftInverseComposedLift(BlendedLift(target), target), -1.0, 0.0)

    def rep(t):
        x = np.atleast_1d(np.asarray(t, dtype=float))
        for _ in range(3):
            x = np.atleast_1d(wh.jet(x)[0])
            x = x + 1.0
            x = np.atleast_1d(w0.jet(x)[0])
        return x - 3.0

    return rep


def conjugate_by_chart(f: Diffeo, g: Diffeo, a: float, grid_n: int = 257,
                       lo: float = 0.05, hi: float = 0.95, tol: float = 1e-9):
    """Chart-composite conjugacy psi_g o psi_f^{-1} sampled on a grid.

    Both maps must be fixed-point free with trivial Mather invariant and
    matching behaviour near the endpoints; the residual sup|psi o f - g o psi|
    is returned alongside the samples.
    """
    cf = _full_chart(f, a, tol)
    cg = _full_chart(g, a, tol)
    xs = np.linspace(lo, hi, grid_n)
    psi = np.atleast_1d(cg.psi(np.atleast_1d(cf.psi_inv(xs))))
    fw = np.clip(np.atleast_1d(f(xs)), 1e-12, 1.0 - 1e-12)
    lhs = np.atleast_1d(cg.psi(np.atleast_1d(cf.psi_inv(fw))))
    rhs = np.atleast_1d(g(psi))
    residual = float(np.max(np.abs(lhs - rhs)))
    return xs, psi, residual
