"""Reconstruction of the left/right generating vector fields of an interval
diffeomorphism, and the flow charts they induce.

The left field is the orbit limit  X(x) = c0(f) * lim Delta(f^{-j}x) * Df^j(f^{-j}x),
evaluated with doubling depth and Aitken acceleration; maps that are declared
flows short-circuit to their field.  The right field is the mirror image of
the left field of the mirrored inverse.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .charts import FlowChart, UnitChart
from .diffeo import Compose, Diffeo, FlowMap, Identity, Inverse, Iterate, PerturbOnFundamental
from .errors import DomainError, NumericError
from .fields import Scale, VectorField
from .intervals import Interval
from .quadrature import adaptive_simpson, integrate

MAX_DEPTH_LOG2 = 16


def c0_constant(u: float) -> float:
    """log(u)/(u-1) with the removable singularity at u=1 handled by Taylor."""
    d = u - 1.0
    if abs(d) < 1e-4:
        return 1.0 - d / 2.0 + d * d / 3.0
    return math.log(u) / d


def declared_flow_data(f: Diffeo):
    """(field, t) such that f is the time-t map of ``field``, or None.

    Recognizes flow maps and compositions / iterates / inverses of flow maps
    of one common field.
    """
    if isinstance(f, FlowMap):
        return f.field, f.t
    if isinstance(f, Identity):
        return None
    if isinstance(f, Inverse):
        d = declared_flow_data(f.inner)
        return None if d is None else (d[0], -d[1])
    if isinstance(f, Iterate):
        d = declared_flow_data(f.inner)
        return None if d is None else (d[0], f.k * d[1])
    if isinstance(f, Compose):
        d1 = declared_flow_data(f.outer)
        d2 = declared_flow_data(f.inner)
        if d1 is not None and d2 is not None and d1[0].key() == d2[0].key():
            return d1[0], d1[1] + d2[1]
    return None


def structural_field_zone(f: Diffeo, side: str):
    """Declared-field zone near an endpoint, from tree locality.

    Returns (field, t, bound) meaning the generating field of f equals
    t*field on (0, bound) for ``side='left'`` / on (bound, 1) for 'right';
    None when no structure is recognized.  Composition with maps that are the
    identity near the endpoint (bump perturbations, chart bumps) does not
    change the field there, which is what the recursion exploits.
    """
    data = declared_flow_data(f)
    if data is not None:
        field, t = data
        return field, t, (1.0 if side == "left" else 0.0)
    if isinstance(f, PerturbOnFundamental):
        return structural_field_zone(f._expanded, side)
    if isinstance(f, Inverse):
        z = structural_field_zone(f.inner, side)
        if z is not None:
            return z[0], -z[1], z[2]
    if isinstance(f, Compose):
        u, v = f.outer, f.inner
        if side == "left":
            zu = structural_field_zone(u, "left")
            if zu is not None:
                cv = v.identity_below()
                if cv > 0.0:
                    return zu[0], zu[1], min(zu[2], float(u(min(cv, 1.0))))
            zv = structural_field_zone(v, "left")
            if zv is not None:
                cu = u.identity_below()
                if cu > 0.0:
                    edge = float(v.invert(cu)) if cu < 1.0 else 1.0
                    return zv[0], zv[1], min(zv[2], edge)
        else:
            zu = structural_field_zone(u, "right")
            if zu is not None:
                cv = v.identity_above()
                if cv < 1.0:
                    return zu[0], zu[1], max(zu[2], cv)
            zv = structural_field_zone(v, "right")
            if zv is not None:
                cu = u.identity_above()
                if cu < 1.0:
                    edge = float(v.invert(cu)) if cu > 0.0 else 0.0
                    return zv[0], zv[1], max(zv[2], edge)
    return None


def _oriented(f: Diffeo):
    """(map with positive direction, sign): field of f is sign * field of map."""
    d = f.direction
    if d == 0:
        raise DomainError("generating fields need a map with no interior fixed point")
    return (f, 1.0) if d > 0 else (Inverse(f), -1.0)


class _LimitSeries:
    """Backward-orbit accumulator for the generating-field limit.

    ``mirrored`` marks orbits whose points carry absolute roundoff (from the
    1-x reflection), which makes displacements noisy like eps/y; native
    orbits only carry relative roundoff.
    """

    def __init__(self, f: Diffeo, x, mirrored: bool = False):
        self.f = f
        self.inv = Inverse(f)
        self.mirrored = mirrored
        self.y = np.asarray(x, dtype=float).copy()
        self.prev = self.y.copy()
        self.logp = np.zeros_like(self.y)
        self.cocycle = np.zeros_like(self.y)
        self.j = 0

    def step(self):
        y_new, d_inv, nl_inv = self.inv._jet(self.y)
        df = 1.0 / d_inv              # Df at y_new
        nlf = -nl_inv * df            # N(f) at y_new
        self.cocycle = nlf + self.cocycle * df
        self.logp = self.logp + np.log(df)
        self.prev = self.y
        self.y = y_new
        self.j += 1

    def values(self):
        delta = self.prev - self.y
        val = delta * np.exp(self.logp)
        ddelta = self.f._jet(self.y)[1] - 1.0   # DDelta(y_j) = Df(y_j) - 1
        dval = ddelta + delta * self.cocycle
        return val, dval


def _accelerate(checkpoints, tol):
    """Iterated Aitken on a doubling-depth checkpoint sequence (per column)."""
    arr = np.stack(checkpoints, axis=0)  # (k, n)
    for _ in range(3):
        if arr.shape[0] < 3:
            break
        d1 = arr[1:] - arr[:-1]
        d2 = d1[1:] - d1[:-1]
        with np.errstate(divide="ignore", invalid="ignore"):
            nxt = arr[2:] - d1[1:] ** 2 / d2
        nxt = np.where(np.isfinite(nxt), nxt, arr[2:])
        arr = nxt
    if arr.shape[0] >= 2:
        resid = np.abs(arr[-1] - arr[-2])
    else:
        resid = np.zeros(arr.shape[1])
    return arr[-1], resid


def left_field(f: Diffeo, x, tol: float = 1e-9, order: int = 0,
               _mirrored: bool = False):
    """Left generating field at x (order 0) or its derivative (order 1).

    Negative-direction maps are handled through the inverse, with the sign
    of the field flipped.
    """
    g, sign = _oriented(f)
    x_in = x
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any((xa <= 0.0) | (xa >= 1.0)):
        raise DomainError("field reconstruction needs interior points")
    zone = structural_field_zone(g, "left")
    if zone is not None:
        vals, dvals = _propagate_left(g, zone, xa)
        out = sign * (vals if order == 0 else dvals)
        return out if np.ndim(x_in) else float(out[0])

    c0 = c0_constant(g.df0)
    series = _LimitSeries(g, xa, mirrored=_mirrored)
    vals, dvals, resid = _limit_run(series, tol)
    out = sign * c0 * (vals if order == 0 else dvals)
    return out if np.ndim(x_in) else float(out[0])


def _propagate_left(g: Diffeo, zone, xa):
    """Exact left field by equivariance from the declared near-0 zone:
    X_g(x) = Dg^k(y) * X(y) for y = g^{-k}(x) inside the zone."""
    field, t, bound = zone
    series = _LimitSeries(g, xa)
    while np.max(series.y) > bound:
        series.step()
        if series.j > (1 << 14):
            raise NumericError("zone propagation exhausted its step budget")
    j = field.jet(series.y)
    growth = np.exp(series.logp)
    vals = growth * t * j.f
    dvals = t * j.d1 + t * j.f * series.cocycle
    return vals, dvals


def _propagate_right(g: Diffeo, zone, xa):
    """Exact right field by forward equivariance into the declared near-1 zone:
    Y_g(x) = X(g^k(x)) / Dg^k(x)."""
    field, t, bound = zone
    z = xa.copy()
    logq = np.zeros_like(z)
    coc = np.zeros_like(z)
    steps = 0
    while np.min(z) < bound:
        zv, dz, nlz = g._jet(z)
        coc = coc + nlz * np.exp(logq)
        logq = logq + np.log(dz)
        z = np.clip(zv, 0.0, 1.0)
        steps += 1
        if steps > (1 << 14):
            raise NumericError("zone propagation exhausted its step budget")
    j = field.jet(z)
    growth = np.exp(logq)
    vals = t * j.f / growth
    dvals = t * j.d1 - vals * coc
    return vals, dvals


def _limit_run(series: _LimitSeries, tol: float):
    """Run the backward-orbit limit with per-element stopping.

    Each element freezes once its checkpoint increments fall below the target
    tolerance or below the roundoff floor of its displacement (which degrades
    like eps/y as the orbit sinks toward the endpoint).
    """
    n = len(series.y)
    best_v = np.zeros(n)
    best_d = np.zeros(n)
    best_err = np.full(n, np.inf)
    done = np.zeros(n, dtype=bool)
    stack_v, stack_d = [], []
    prev_acc = None
    scale = None
    target = 1
    collapsed = False

    def offer(v, d, err):
        better = ~done & (err < best_err)
        best_v[better] = v[better]
        best_d[better] = d[better]
        best_err[better] = err[better]

    while series.j < (1 << MAX_DEPTH_LOG2):
        while series.j < target:
            series.step()
            if np.any(series.y[~done] <= 0.0) or \
               np.any(series.y[~done] == series.prev[~done]):
                collapsed = True
                break
        if collapsed:
            break
        v, d = series.values()
        stack_v.append(v)
        stack_d.append(d)
        if scale is None:
            scale = np.maximum(np.abs(v), 1e-300)
        # roundoff floor: mirrored displacements lose accuracy like eps/y
        if series.mirrored:
            noise = 32.0 * 1.1e-16 / np.maximum(series.y, 1e-300)
        else:
            noise = np.full_like(series.y, 32.0 * 1.1e-16)
        accept = np.maximum(np.maximum(noise, tol), 1e-14)
        if len(stack_v) >= 2:
            offer(v, d, np.abs(stack_v[-1] - stack_v[-2]) / scale)
        if len(stack_v) >= 4:
            acc_v, _ = _accelerate(stack_v, tol)
            acc_d, _ = _accelerate(stack_d, tol)
            if prev_acc is not None:
                offer(acc_v, acc_d, np.abs(acc_v - prev_acc) / scale)
            prev_acc = acc_v
        done |= best_err <= accept
        if np.all(done):
            return best_v, best_d, float(np.max(best_err))
        target *= 2
    worst = float(np.max(best_err))
    if collapsed or worst <= max(math.sqrt(tol), 1e-5):
        return best_v, best_d, worst
    raise NumericError(f"field limit converged slowly (residual {worst:.2e})",
                       residual=worst)


class MirrorMap(Diffeo):
    """sigma o g o sigma with sigma(x) = 1 - x."""

    def __init__(self, inner: Diffeo):
        object.__setattr__(self, "inner", inner)

    def _jet(self, xa):
        y, dy, nl = self.inner._jet(1.0 - xa)
        return 1.0 - y, dy, -nl

    def _invert(self, ya):
        return 1.0 - self.inner._invert(1.0 - ya)

    def _direction(self):
        return -self.inner.direction

    def _endpoint_deriv(self, end):
        return self.inner._endpoint_deriv(1 - end)

    def key(self):
        return ("mirror", self.inner.key())


def right_field(f: Diffeo, x, tol: float = 1e-9, order: int = 0):
    """Right generating field at x, via the mirror symmetry.

    Y(x) = Xv(1-x) where Xv is the left field of sigma o f^{-1} o sigma; a
    declared flow map short-circuits to its field.
    """
    g, sign = _oriented(f)
    x_in = x
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any((xa <= 0.0) | (xa >= 1.0)):
        raise DomainError("field reconstruction needs interior points")
    zone = structural_field_zone(g, "right")
    if zone is not None:
        vals, dvals = _propagate_right(g, zone, xa)
        out = sign * (vals if order == 0 else dvals)
        return out if np.ndim(x_in) else float(out[0])
    from .diffeo import mirror_map
    exact = mirror_map(Inverse(g))
    if exact is not None:
        mirrored = exact
        noisy = False
    else:
        mirrored = MirrorMap(Inverse(g))  # > id when g > id
        noisy = True
    vals = np.atleast_1d(left_field(mirrored, 1.0 - xa, tol=tol, order=order,
                                    _mirrored=noisy))
    out = sign * (-vals) if order == 1 else sign * vals
    return out if np.ndim(x_in) else float(out[0])


@dataclass
class SzekeresResult:
    """Field samples on a work grid plus convergence metadata."""

    grid: np.ndarray
    left: np.ndarray
    right: np.ndarray
    c0: float
    depth: int
    unit_time_residual: float


def reconstruct(f: Diffeo, grid_n: int = 129, tol: float = 1e-9) -> SzekeresResult:
    """Sample both generating fields on a uniform interior grid."""
    grid = np.linspace(0.0, 1.0, grid_n + 2)[1:-1]
    lx = np.atleast_1d(left_field(f, grid, tol=tol))
    rx = np.atleast_1d(right_field(f, grid, tol=tol))
    g, _ = _oriented(f)
    a = 0.5
    res = check_unit_time(g, lambda s: np.abs(np.atleast_1d(left_field(f, s, tol=tol))), a)
    return SzekeresResult(grid, lx, rx, c0_constant(g.df0), MAX_DEPTH_LOG2, res)


def psi_chart(field: VectorField, anchor: float) -> FlowChart:
    """Orbit-anchored chart psi(t) = f_t(anchor) for a positive field."""
    if not 0.0 < anchor < 1.0:
        raise DomainError("anchor must be interior")
    return FlowChart(field, anchor)


def check_unit_time(f: Diffeo, field_fn, a: float) -> float:
    """|integral of 1/field over [a, f(a)] - 1|: the unit transit residual."""
    b = float(f(a))
    lo, hi = min(a, b), max(a, b)
    val, _, _ = adaptive_simpson(lambda s: 1.0 / np.asarray(field_fn(s), float),
                                 lo, hi, 1e-12)
    return abs(abs(val) - 1.0)


def check_logX_bound(f: Diffeo, a: float, tol: float = 1e-8):
    """Both sides of the endpoint-variation bound for the left field.

    lhs = |var(log X; [a, f(a)]) - log Df(0)|; rhs = var(log Df; [0, a]).
    """
    from .calculus import total_variation_log_deriv

    g, _ = _oriented(f)
    b = float(g(a))
    val, _ = integrate(
        lambda s: np.abs(np.atleast_1d(left_field(g, s, tol=tol, order=1))
                         / np.atleast_1d(left_field(g, s, tol=tol))),
        a, b, 1e-8)
    lhs = abs(val - abs(math.log(g.df0)))
    rhs = total_variation_log_deriv(g, Interval(0.0, a)).value
    return lhs, rhs
