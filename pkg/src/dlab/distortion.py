"""Asymptotic-distortion estimators, conjugator sequences, coboundary
machinery, and the subadditive window-product sequence laboratory."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .calculus import LimitEstimate, aitken_limit, total_variation_log_deriv, var_log_iterate
from .diffeo import Diffeo, Identity, Inverse, Restrict, _newton_invert
from .errors import ConstructionError, DecompositionError, DomainError
from .intervals import Interval, UNIT
from .quadrature import PiecewiseCheb, cheb_fit, integrate

DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class DistortionEstimate:
    """Distortion value with method tag, heuristic error bound and series."""

    value: float
    method: str
    error_bound: float
    series: tuple
    params: tuple

    def __post_init__(self):
        if self.value < -1e-15:
            raise ConstructionError("distortion estimates are nonnegative")


def endpoint_lower_bound(f: Diffeo) -> float:
    """|log Df(0)| + |log Df(1)|: the endpoint obstruction to vanishing."""
    return abs(math.log(f.df0)) + abs(math.log(f.df1))


def _oriented_up(f: Diffeo) -> Diffeo:
    """Run orbit-indexed estimators on f or its inverse so the map moves up."""
    d = f.direction
    if d == 0:
        raise DomainError("estimator needs a map with no interior fixed point "
                          "(use dist_decomposed)")
    return f if d > 0 else Inverse(f)


def dist_direct(f: Diffeo, n_max: int, tol: float = DEFAULT_TOL) -> DistortionEstimate:
    """Subadditive series var(log Df^n)/n over n = 1, 2, 4, ..., n_max.

    The value is the series minimum (an upper bound for the limit); Aitken
    acceleration enters only the heuristic error bound.
    """
    if n_max < 4:
        raise DomainError("need n_max >= 4")
    g = f if f.direction == 0 else _oriented_up(f)
    ns = [1]
    while ns[-1] * 2 <= n_max:
        ns.append(ns[-1] * 2)
    series = []
    quad_err = 0.0
    for n in ns:
        tv = var_log_iterate(g, n, UNIT, tol)
        series.append((n, tv.value / n))
        quad_err = max(quad_err, tv.abs_error_estimate / n)
    value = min(v for _, v in series)
    lb = endpoint_lower_bound(f)
    if len(series) >= 4:
        acc = aitken_limit(series)
        gap = max(0.0, value - max(acc.value, lb))
        err = gap + acc.error + quad_err
    else:
        err = (value - lb) + quad_err
    return DistortionEstimate(value, "direct", err, tuple(series), ("n_max", n_max))


def dist_localized(f: Diffeo, p: float = 0.5, N: int = 32,
                   tol: float = DEFAULT_TOL) -> DistortionEstimate:
    """Localized estimator var(log Df^{2N}; [f^{-N}(p), f^{-N+1}(p)]).

    The error bound is the exact localization tail,
    var(log Df; [0, f^{-N}(p)]) + var(log Df; [f^N(p), 1]).
    """
    if N < 1:
        raise DomainError("need N >= 1")
    g = _oriented_up(f)
    series = []
    Ns = sorted({max(1, N // 4), max(1, N // 2), N})
    for NN in Ns:
        pts = g.orbit(p, -NN, -NN + 1)
        tv = var_log_iterate(g, 2 * NN, Interval(pts[0], pts[1]), tol)
        series.append((NN, tv.value))
    lo = g.orbit(p, -N, -N)[0]
    hi = g.orbit(p, N, N)[0]
    tail = (total_variation_log_deriv(g, Interval(0.0, lo), tol).value
            + total_variation_log_deriv(g, Interval(hi, 1.0), tol).value)
    return DistortionEstimate(series[-1][1], "localized", tail,
                              tuple(series), ("p", p, "N", N))


def find_fixed_intervals(f: Diffeo, grid_n: int = 4097, tol: float = 1e-12):
    """Maximal subintervals fixed by f with no interior fixed point, plus the
    intervals where f is the identity (marked separately).

    Returns a list of (Interval, is_active) in increasing order.
    """
    xs = np.linspace(0.0, 1.0, grid_n)
    disp = f(xs) - xs
    moving = np.abs(disp) > tol
    out = []
    i = 0
    while i < grid_n:
        if not moving[i]:
            i += 1
            continue
        j = i
        while j < grid_n and moving[j]:
            j += 1
        lo = xs[max(i - 1, 0)]
        hi = xs[min(j, grid_n - 1)]
        lo = float(_refine_fixed_point(f, lo, xs[i], tol)) if i > 0 else 0.0
        hi = float(_refine_fixed_point(f, xs[j - 1], hi, tol)) if j < grid_n else 1.0
        out.append((Interval(lo, hi), True))
        i = j
    return out


def _refine_fixed_point(f, a, b, tol):
    """Bisect for the fixed point adjacent to a moving block."""
    fa = float(f(a)) - a
    for _ in range(80):
        m = 0.5 * (a + b)
        fm = float(f(m)) - m
        if abs(fm) <= tol or (b - a) < 4e-16:
            return m
        if (fm > 0) == (fa > 0):
            a, fa = m, fm
        else:
            b = m
    return 0.5 * (a + b)


def dist_decomposed(f: Diffeo, zero_intervals, N: int = 32, p: float = 0.5,
                    tol: float = DEFAULT_TOL) -> DistortionEstimate:
    """Sum of localized estimates over intervals fixed by f.

    Each interval is affinely rescaled to [0,1]; intervals where f acts as the
    identity contribute zero.
    """
    total = 0.0
    err = 0.0
    series = []
    for iv in zero_intervals:
        iv = iv if isinstance(iv, Interval) else Interval(*iv)
        for e in iv.as_tuple():
            if abs(float(f(e)) - e) > 1e-12:
                raise DecompositionError(f"interval endpoint {e} is not fixed")
        probe = np.linspace(iv.a, iv.b, 257)[1:-1]
        if np.max(np.abs(f(probe) - probe)) <= 1e-13:
            series.append((iv.as_tuple(), 0.0))
            continue
        piece = Restrict(f, iv.a, iv.b)
        est = dist_localized(piece, p=p, N=N, tol=tol)
        total += est.value
        err += est.error_bound
        series.append((iv.as_tuple(), est.value))
    return DistortionEstimate(total, "decomposed", err, tuple(series),
                              ("N", N, "p", p))


# ---------------------------------------------------------------------------
# Geometric-mean conjugators h_n
# ---------------------------------------------------------------------------

class GeometricMeanConjugator(Diffeo):
    """h_n with Dh_n proportional to the geometric mean of Df, ..., Df^{n-1}."""

    def __init__(self, f: Diffeo, n: int):
        if n < 2:
            raise DomainError("conjugator index must be >= 2")
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "n", int(n))

    def _log_mean(self, xa):
        """(1/n) sum_{i=1}^{n-1} log Df^i(x) and the matching cocycle mean."""
        f, n = self.f, self.n
        y = xa.copy()
        logd = np.zeros_like(xa)
        s_log = np.zeros_like(xa)
        s_nl = np.zeros_like(xa)
        for j in range(n - 1):
            yv, dy, nl = f._jet(y)
            w = (n - 1 - j)
            s_nl = s_nl + w * nl * np.exp(logd)
            logd = logd + np.log(dy)
            s_log = s_log + w * np.log(dy)
            y = yv
        return s_log / n, s_nl / n

    def _tables(self):
        t = getattr(self, "_tab", None)
        if t is None:
            from .quadrature import cheb_from_values, cheb_nodes
            breaks = np.linspace(0.0, 1.0, 9)
            deg = 64
            nodes = np.concatenate([cheb_nodes(deg, breaks[i], breaks[i + 1])
                                    for i in range(len(breaks) - 1)])
            vals = np.exp(self._log_mean(nodes)[0])
            pieces = [cheb_from_values(vals[i * (deg + 1):(i + 1) * (deg + 1)],
                                       breaks[i], breaks[i + 1])
                      for i in range(len(breaks) - 1)]
            dens = PiecewiseCheb(pieces, breaks)
            anti = dens.antiderivative()
            z = float(anti(np.array([1.0]))[0])
            t = (anti, z)
            object.__setattr__(self, "_tab", t)
        return t

    @property
    def normalizer(self) -> float:
        return self._tables()[1]

    def _jet(self, xa):
        anti, z = self._tables()
        s_log, s_nl = self._log_mean(xa)
        return (np.clip(anti(xa) / z, 0.0, 1.0),
                np.exp(s_log) / z,
                s_nl)

    def log_deriv(self, x):
        """log Dh_n(x), exact in log space (safe for huge derivatives)."""
        xa = np.atleast_1d(np.asarray(x, dtype=float))
        s_log, _ = self._log_mean(xa)
        out = s_log - math.log(self.normalizer)
        return out if np.ndim(x) else float(out[0])

    def _invert(self, ya):
        return _newton_invert(self, ya)

    def _direction(self):
        return 0

    def key(self):
        return ("geom_mean_conj", self.f.key(), self.n)


def conjugator_hn(f: Diffeo, n: int) -> GeometricMeanConjugator:
    """The variation-averaging conjugator h_n of a fixed-point-free map."""
    return GeometricMeanConjugator(f, n)


# ---------------------------------------------------------------------------
# Coboundary machinery
# ---------------------------------------------------------------------------

class CoboundaryWitness:
    """Integrable u approximating N(f) by the coboundary (u o f) Df - u."""

    support: Interval

    def __call__(self, x):
        raise NotImplementedError

    def deriv(self, x):
        raise NotImplementedError

    def breakpoints(self):
        return [self.support.a, self.support.b]

    def l1_norm(self) -> float:
        val, _ = integrate(lambda x: np.abs(self(x)), 0.0, 1.0, 1e-10,
                           self.breakpoints(), abs_tol=1e-12)
        return val


class ZeroWitness(CoboundaryWitness):
    support = UNIT

    def __call__(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))

    def deriv(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))

    def breakpoints(self):
        return []


class ConstWitness(CoboundaryWitness):
    def __init__(self, c: float, support: Interval = UNIT):
        self.c = float(c)
        self.support = support

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x >= self.support.a) & (x <= self.support.b)
        return np.where(inside, self.c, 0.0)

    def deriv(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))


class TruncatedFieldLogDeriv(CoboundaryWitness):
    """u = (DX/X) restricted to [y, z] for a generating field X."""

    def __init__(self, field_fn, support: Interval):
        # field_fn(x, order) -> X or DX; a VectorField works directly
        self.field_fn = field_fn
        self.support = support

    def _ratio(self, x, order2=False):
        x = np.asarray(x, dtype=float)
        X = np.asarray(self.field_fn(x, 0), dtype=float)
        DX = np.asarray(self.field_fn(x, 1), dtype=float)
        if not order2:
            return DX / X
        D2X = np.asarray(self.field_fn(x, 2), dtype=float)
        return D2X / X - (DX / X) ** 2

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x >= self.support.a) & (x <= self.support.b)
        safe = np.where(inside, x, 0.5 * (self.support.a + self.support.b))
        return np.where(inside, self._ratio(safe), 0.0)

    def deriv(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x >= self.support.a) & (x <= self.support.b)
        safe = np.where(inside, x, 0.5 * (self.support.a + self.support.b))
        return np.where(inside, self._ratio(safe, order2=True), 0.0)


class MixedFieldLogDeriv(CoboundaryWitness):
    """u = D log X on [y, split], D log Y on [split, z] (left/right fields)."""

    def __init__(self, left_fn, right_fn, split: float, support: Interval):
        self.left = TruncatedFieldLogDeriv(left_fn, Interval(support.a, split))
        self.right = TruncatedFieldLogDeriv(right_fn, Interval(split, support.b))
        self.split = float(split)
        self.support = support

    def __call__(self, x):
        return self.left(x) + self.right(x)

    def deriv(self, x):
        return self.left.deriv(x) + self.right.deriv(x)

    def breakpoints(self):
        return [self.support.a, self.split, self.support.b]


class FromDiffeo(CoboundaryWitness):
    """u_h = -D^2h/Dh for a C^2 diffeomorphism h."""

    def __init__(self, h: Diffeo):
        self.h = h
        self.support = UNIT

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return -np.atleast_1d(self.h.jet(x)[2])

    def deriv(self, x):
        x = np.asarray(x, dtype=float)
        h = 1e-6
        lo = np.clip(x - h, 0.0, 1.0)
        hi = np.clip(x + h, 0.0, 1.0)
        return (self(hi) - self(lo)) / (hi - lo)

    def breakpoints(self):
        return []


def coboundary_defect(f: Diffeo, u: CoboundaryWitness,
                      rel_tol: float = 1e-9) -> float:
    """L1 norm of N(f) - ((u o f) Df - u), split at u's support endpoints
    and their f-preimages."""
    breaks = set()
    for s in u.breakpoints():
        breaks.add(float(s))
        if 0.0 < s < 1.0:
            breaks.add(float(f.invert(s)))

    def defect(x):
        x = np.asarray(x, dtype=float)
        y, dy, nl = f.jet(x)
        return np.abs(nl - (u(np.clip(y, 0.0, 1.0)) * dy - u(x)))

    val, _ = integrate(defect, 0.0, 1.0, rel_tol, sorted(breaks), abs_tol=1e-11)
    return val


class _WitnessDensity:
    """Jet adapter: density exp(-U) with U the cumulative integral of u."""

    def __init__(self, u: CoboundaryWitness):
        self.u = u
        breaks = sorted(set([0.0, 1.0] + [float(b) for b in u.breakpoints()
                                          if 0.0 < b < 1.0]))
        pieces = PiecewiseCheb.from_function(lambda x: np.asarray(u(x), float),
                                             breaks, deg=48)
        self.cum = pieces.antiderivative()

    def __call__(self, x):
        from .jets import Jet2
        x = np.asarray(x, dtype=float)
        val = np.exp(-self.cum(x))
        uu = np.asarray(self.u(x), dtype=float)
        du = np.asarray(self.u.deriv(x), dtype=float)
        return Jet2(val, -uu * val, (uu * uu - du) * val)


def h_from_u(u: CoboundaryWitness) -> Diffeo:
    """The diffeomorphism with D^2h/Dh = -u, normalized to fix 0 and 1."""
    from .diffeo import DensityDiffeo
    dens = _WitnessDensity(u)
    breaks = tuple(b for b in u.breakpoints() if 0.0 < b < 1.0)
    return DensityDiffeo(dens, breaks, label=("coboundary", id(u)))


def u_from_h(h: Diffeo) -> CoboundaryWitness:
    """The witness induced by a conjugator: u_h = -D^2h/Dh."""
    return FromDiffeo(h)


# ---------------------------------------------------------------------------
# Truncation-point selection along the orbit
# ---------------------------------------------------------------------------

def select_truncation_indices(f: Diffeo, p: float, count: int,
                              ratio_bound: float = 4.0, k_cap: int = 4096):
    """Orbit indices (k_n, l_n) with k X(f^{-k}p) and l X(f^l p) decreasing to
    zero and comparable field values (ratio within [1/C, C], C=4 by default).

    The decay of n Df^n(p) on density-1 index sets makes such sequences
    available; this scans for them explicitly.
    """
    from .szekeres import left_field
    g = _oriented_up(f)
    s_minus, s_plus = [], []
    x = float(p)
    for k in range(1, k_cap + 1):
        x = float(g.invert(x))
        s_minus.append((k, x, k * float(left_field(g, x))))
    x = float(p)
    for k in range(1, k_cap + 1):
        x = float(g(x))
        if x >= 1.0 - 1e-15:
            break
        s_plus.append((k, x, k * float(left_field(g, x))))

    chosen = []
    thresh = 0.5 * min(s_minus[0][2], s_plus[0][2])
    ki = li = 0
    for _ in range(count):
        ki_n = next((i for i in range(ki, len(s_minus)) if s_minus[i][2] <= thresh), None)
        if ki_n is None:
            break
        xk = s_minus[ki_n][1]
        target = float(left_field(g, xk))
        li_n = None
        for i in range(li, len(s_plus)):
            val = float(left_field(g, s_plus[i][1]))
            if s_plus[i][2] <= thresh and 1.0 / ratio_bound <= target / val <= ratio_bound:
                li_n = i
                break
        if li_n is None:
            break
        chosen.append((s_minus[ki_n][0], s_plus[li_n][0]))
        ki, li = ki_n + 1, li_n + 1
        thresh *= 0.5
    if len(chosen) < count:
        raise DomainError(f"only found {len(chosen)} truncation index pairs")
    return chosen


# ---------------------------------------------------------------------------
# Window-product sums S_n
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SummableSequence:
    """Closed-form positive sequence k -> a_k with a certified geometric tail:
    a_{k+sgn(k)} <= tail_ratio * a_k for |k| >= tail_start."""

    log_a: object
    tail_ratio: float
    tail_start: int = 0

    def __post_init__(self):
        if not 0.0 < self.tail_ratio < 1.0:
            raise ConstructionError("tail ratio must lie in (0,1)")


def two_sided_geometric(base: float = 2.0) -> SummableSequence:
    """a_k = base^{-|k|}."""
    lb = math.log(base)
    return SummableSequence(lambda k: -np.abs(k) * lb, 1.0 / base, 0)


def sn_sequence(a: SummableSequence, n_max: int, tail_tol: float = 1e-10):
    """[(n, S_n)] for n = 1..n_max with S_n the sum over k of the geometric
    mean of the window a_k..a_{k+n-1}; truncation certified by the tail ratio."""
    out = []
    r = a.tail_ratio
    for n in range(1, n_max + 1):
        K = a.tail_start + n + 64
        while True:
            ks = np.arange(-K - n, K + 1)
            logs = np.asarray(a.log_a(np.arange(-K - n, K + n + 1)), dtype=float)
            cum = np.concatenate([[0.0], np.cumsum(logs)])
            idx = ks + K + n
            window = (cum[idx + n] - cum[idx]) / n
            terms = np.exp(window)
            # certified tails: windows beyond +-K decay at least geometrically
            tail = (terms[0] + terms[-1]) * r / (1.0 - r)
            if tail < tail_tol:
                break
            K *= 2
            if K > (1 << 22):
                raise DomainError("tail bound violated: truncation did not certify")
        out.append((n, float(np.sum(terms) + 0.0)))
    return out
