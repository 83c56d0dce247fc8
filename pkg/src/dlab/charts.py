"""Orbit-anchored flow charts: the parametrization psi(t) = f_t(a) of (0,1).

Time along the flow of a positive field X is measured by integrating 1/X, but
never across the endpoint zeros: the chart keeps one Chebyshev fit of the
time function per fundamental interval [x_k, x_{k+1}] (each of which carries
exactly one unit of time), and walks the orbit for everything else.  Points
beyond the cached orbit range fall back to direct difference-form quadrature.
"""

from __future__ import annotations

import numpy as np
from numpy.polynomial import chebyshev as C

from .errors import NumericError, RangeError, UnsupportedFieldError
from .quadrature import adaptive_simpson, cheb_fit

_PAD = 0.6          # fractional overshoot when bracketing the next knot
_MAX_SIDE = 6000    # cached fundamental intervals per side before fallback
_SOFT_SIDE = 2048   # growth budget per side when chasing outlying points

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


def _gl16(f, a: float, b: float) -> float:
    half = 0.5 * (b - a)
    x = 0.5 * (a + b) + half * _GL_NODES
    return half * float(np.dot(_GL_WEIGHTS, np.asarray(f(x), dtype=float)))


def _clenshaw_rows(coef_rows, lo, hi, x):
    """Evaluate one Chebyshev series per point (rows of coefficients)."""
    u = (2.0 * x - lo - hi) / (hi - lo)
    u2 = 2.0 * u
    b1 = np.zeros_like(x)
    b2 = np.zeros_like(x)
    for j in range(coef_rows.shape[1] - 1, 0, -1):
        b1, b2 = coef_rows[:, j] + u2 * b1 - b2, b1
    return coef_rows[:, 0] + u * b1 - b2


class _IntervalFit:
    """Local time tau on [lo, hi]: tau(lo)=0, tau(hi)=1 to roundoff."""

    __slots__ = ("lo", "hi", "poly", "base")

    def __init__(self, lo, hi, poly, base):
        self.lo = lo
        self.hi = hi
        self.poly = poly
        self.base = base

    def tau(self, x):
        return self.poly(x) - self.base

    def solve(self, target, guess=None):
        """Positions where tau equals target (array in [0,1])."""
        target = np.asarray(target, dtype=float)
        x = np.full_like(target, 0.5 * (self.lo + self.hi)) if guess is None \
            else np.asarray(guess, dtype=float).copy()
        lo = np.full_like(target, self.lo)
        hi = np.full_like(target, self.hi)
        der = self.poly.deriv()
        for _ in range(60):
            r = self.poly(x) - self.base - target
            done = (np.abs(r) <= 1e-13 * np.maximum(1.0, np.abs(target))) | \
                   (hi - lo <= 4.0 * np.spacing(np.maximum(np.abs(lo), np.abs(hi))))
            if np.all(done):
                break
            hi = np.where(r > 0, np.minimum(hi, x), hi)
            lo = np.where(r < 0, np.maximum(lo, x), lo)
            step = r / der(x)
            xn = x - step
            bad = (xn <= lo) | (xn >= hi) | ~np.isfinite(xn)
            x = np.where(done, x, np.where(bad, 0.5 * (lo + hi), xn))
        return x


class FlowChart:
    """Chart psi for a field that is positive on the open interval."""

    def __init__(self, field, anchor: float = 0.5, rel_tol: float = 1e-12):
        if field.interior_zeros():
            raise UnsupportedFieldError(
                "flow charts need a field with no interior zeros; split first")
        x = np.linspace(0.0, 1.0, 257)[1:-1]
        if not np.all(field(x) > 0.0):
            raise UnsupportedFieldError("flow charts need a positive field")
        if not 0.0 < anchor < 1.0:
            raise ValueError("anchor must be interior")
        self.field = field
        self.anchor = float(anchor)
        self.rel_tol = rel_tol
        self._fits: dict[int, _IntervalFit] = {}
        self._k_lo = 0
        self._k_hi = 0
        self._knots = np.array([anchor])
        self._give_up = (None, None)
        self._stacked = None

    def _stack(self):
        """Stacked per-interval data for vectorized evaluation."""
        if self._stacked is None:
            ks = range(self._k_lo, self._k_hi)
            fits = [self._fits[k] for k in ks]

            def _trim(c):
                top = np.max(np.abs(c))
                keep = np.nonzero(np.abs(c) > 1e-15 * top)[0]
                return c[:keep[-1] + 1] if len(keep) else c[:1]

            polys = [_trim(f.poly.coef) for f in fits]
            deg = max(p.size for p in polys)
            coef = np.zeros((len(fits), deg))
            dcoef = np.zeros((len(fits), max(deg - 1, 1)))
            for i, (f, p) in enumerate(zip(fits, polys)):
                coef[i, :p.size] = p
                d = C.chebder(p)
                scale = 2.0 / (f.poly.domain[1] - f.poly.domain[0])
                dcoef[i, :d.size] = d * scale
            data = dict(
                coef=coef, dcoef=dcoef,
                dom_lo=np.array([f.poly.domain[0] for f in fits]),
                dom_hi=np.array([f.poly.domain[1] for f in fits]),
                base=np.array([f.base for f in fits]),
                lo=np.array([f.lo for f in fits]),
                hi=np.array([f.hi for f in fits]))
            self._stacked = data
        return self._stacked

    # -- construction of fundamental-interval fits --------------------------

    def _inv_field(self, x):
        return 1.0 / self.field.jet(np.asarray(x, float)).f

    def _rk_step(self, x0: float, dt: float) -> float:
        """Crude RK4 estimate of the time-dt flow from x0 (bracketing only)."""
        x = x0
        n_sub = 2
        h = dt / n_sub
        for _ in range(n_sub):
            k1 = self.field(x)
            k2 = self.field(np.clip(x + 0.5 * h * k1, 1e-300, 1.0 - 1e-16))
            k3 = self.field(np.clip(x + 0.5 * h * k2, 1e-300, 1.0 - 1e-16))
            k4 = self.field(np.clip(x + h * k3, 1e-300, 1.0 - 1e-16))
            x = x + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
            x = float(np.clip(x, 1e-300, 1.0 - 1e-16))
        return x

    def _fit_forward(self, lo: float) -> _IntervalFit:
        est = self._rk_step(lo, 1.0)
        hi_dom = est + _PAD * (est - lo)
        hi_dom = min(hi_dom, est + 0.45 * (1.0 - est))
        for _ in range(80):
            poly = cheb_fit(self._inv_field, lo, hi_dom, deg=32).integ(lbnd=lo)
            if poly(hi_dom) >= 1.0:
                break
            hi_dom = hi_dom + 0.5 * (1.0 - hi_dom) * 0.5
        else:
            raise NumericError("could not bracket the next orbit point")
        fit = _IntervalFit(lo, hi_dom, poly, 0.0)
        hi = float(fit.solve(np.array([1.0]), guess=np.array([est]))[0])
        fit.hi = hi
        return fit

    def _fit_backward(self, hi: float) -> _IntervalFit:
        est = self._rk_step(hi, -1.0)
        lo_dom = est - _PAD * (hi - est)
        lo_dom = max(lo_dom, est - 0.45 * est)
        for _ in range(80):
            poly = cheb_fit(self._inv_field, lo_dom, hi, deg=32).integ(lbnd=lo_dom)
            if poly(hi) >= 1.0:
                break
            lo_dom = lo_dom * 0.5
        else:
            raise NumericError("could not bracket the previous orbit point")
        fit = _IntervalFit(lo_dom, hi, poly, 0.0)
        target = poly(hi) - 1.0
        lo = float(fit.solve(np.array([target]), guess=np.array([est]))[0])
        fit.lo = lo
        fit.base = float(poly(lo))
        return fit

    def _grow_to(self, k_min: int, k_max: int) -> bool:
        """Ensure fits exist for interval indices [k_min, k_max); False if capped."""
        changed = False
        while self._k_hi <= k_max - 1 and self._k_hi < _MAX_SIDE:
            if 1.0 - self._knots[-1] <= 1e-14:
                break
            if self._k_hi not in self._fits:
                lo = self._knots[-1]
                fit = self._fit_forward(float(lo))
                self._fits[self._k_hi] = fit
                self._knots = np.append(self._knots, fit.hi)
                changed = True
            self._k_hi += 1
        while self._k_lo > k_min and self._k_lo > -_MAX_SIDE:
            if self._knots[0] <= 1e-250:
                break
            if self._k_lo - 1 not in self._fits:
                hi = self._knots[0]
                fit = self._fit_backward(float(hi))
                self._fits[self._k_lo - 1] = fit
                self._knots = np.concatenate([[fit.lo], self._knots])
                changed = True
            self._k_lo -= 1
        if changed:
            self._stacked = None
        return self._k_lo <= k_min and self._k_hi >= k_max - 1

    # -- direct (beyond-range) solves ---------------------------------------

    def _quad_time(self, a: float, b: float) -> float:
        if a == b:
            return 0.0
        # fast path: one 16-point Gauss-Legendre panel cross-checked against
        # its bisection; falls back to adaptive Simpson on disagreement
        v1 = _gl16(self._inv_field, a, b)
        m = 0.5 * (a + b)
        v2 = _gl16(self._inv_field, a, m) + _gl16(self._inv_field, m, b)
        if abs(v1 - v2) <= 1e-13 * max(1.0, abs(v2)):
            return v2
        v, _, _ = adaptive_simpson(self._inv_field, a, b, self.rel_tol)
        return v

    def _advance_direct(self, x0: float, dt: float) -> float:
        """Solve the flow-time equation between positions in difference form.

        Finds x with integral of 1/X from x0 to x equal to dt, accumulating
        time incrementally so no large-time cancellation occurs.
        """
        if dt == 0.0:
            return x0
        forward = dt > 0.0
        limit = 1.0 if forward else 0.0
        # expand a flow-scaled bracket [b_prev, b] whose time passes dt
        b, acc = x0, 0.0
        grow = 1.25
        for _ in range(400):
            h = self.field(b) * (dt - acc) * grow
            nb = b + h
            if forward:
                nb = min(nb, b + 0.5 * (limit - b))
            else:
                nb = max(nb, b - 0.5 * (b - limit))
            step = self._quad_time(b, nb)
            if (acc + step >= dt) if forward else (acc + step <= dt):
                b_prev, acc_prev = b, acc
                b, acc = nb, acc + step
                break
            b, acc = nb, acc + step
            grow = min(grow * 4.0, 1e6)
        else:
            raise NumericError("flow advance failed to bracket the target time")
        lo_b, hi_b = (b_prev, b) if forward else (b, b_prev)
        # safeguarded Newton on T(x) = time from x0 to x, kept incrementally
        x = 0.5 * (lo_b + hi_b)
        t_x = acc_prev + self._quad_time(b_prev, x)
        tol_t = 5e-12 * max(1.0, abs(dt))
        r = t_x - dt
        for _ in range(120):
            r = t_x - dt
            if abs(r) <= tol_t:
                return x
            if r > 0:
                hi_b = min(hi_b, x)
            else:
                lo_b = max(lo_b, x)
            if hi_b - lo_b <= 4.0 * np.spacing(max(abs(lo_b), abs(hi_b))):
                return x
            xn = x - r * self.field(x)
            if not (lo_b < xn < hi_b):
                xn = 0.5 * (lo_b + hi_b)
            if xn == x or abs(xn - x) <= np.spacing(abs(x)):
                return x
            t_x += self._quad_time(x, xn)
            x = xn
        raise NumericError("flow advance Newton failed", residual=abs(r))

    # -- public chart operations --------------------------------------------

    def psi(self, t):
        """Position after flowing for time t from the anchor."""
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        k = np.floor(t_arr).astype(int)
        self._grow_to(max(int(k.min()), -_MAX_SIDE), min(int(k.max()) + 1, _MAX_SIDE))
        out = np.empty_like(t_arr)
        inr = (k >= self._k_lo) & (k < self._k_hi)
        if np.any(inr):
            out[inr] = self._solve_rows(k[inr] - self._k_lo, t_arr[inr] - k[inr])
        for i in np.nonzero(~inr)[0]:
            ti = t_arr[i]
            if ti >= self._k_hi:
                out[i] = self._advance_direct(float(self._knots[-1]), float(ti - self._k_hi))
            else:
                out[i] = self._advance_direct(float(self._knots[0]), float(ti - self._k_lo))
        return out if np.ndim(t) else float(out[0])

    def _solve_rows(self, idx, frac):
        """Vectorized per-interval Newton: positions with local time ``frac``."""
        d = self._stack()
        coef = d["coef"][idx]
        dcoef = d["dcoef"][idx]
        dom_lo, dom_hi = d["dom_lo"][idx], d["dom_hi"][idx]
        base = d["base"][idx]
        lo = d["lo"][idx].copy()
        hi = d["hi"][idx].copy()
        target = base + frac
        x = lo + frac * (hi - lo)
        for _ in range(60):
            r = _clenshaw_rows(coef, dom_lo, dom_hi, x) - target
            done = (np.abs(r) <= 1e-13 * np.maximum(1.0, np.abs(target))) | \
                   (hi - lo <= 4.0 * np.spacing(np.maximum(np.abs(lo), np.abs(hi))))
            if np.all(done):
                break
            hi = np.where(r > 0, np.minimum(hi, x), hi)
            lo = np.where(r < 0, np.maximum(lo, x), lo)
            der = _clenshaw_rows(dcoef, dom_lo, dom_hi, x)
            with np.errstate(divide="ignore", invalid="ignore"):
                xn = x - r / der
            bad = (xn <= lo) | (xn >= hi) | ~np.isfinite(xn)
            x = np.where(done, x, np.where(bad, 0.5 * (lo + hi), xn))
        return x

    def _maybe_grow_for(self, x_arr):
        """Extend the cached orbit toward outlying points when the extra time
        offset fits the growth budget; remember hopeless targets."""
        for side in (-1, 1):
            if len(self._knots):
                edge = float(self._knots[0] if side < 0 else self._knots[-1])
            beyond = x_arr < edge if side < 0 else x_arr > edge
            if not np.any(beyond):
                continue
            target = float(x_arr.min() if side < 0 else x_arr.max())
            mark = self._give_up[0] if side < 0 else self._give_up[1]
            if mark is not None and ((side < 0 and target <= mark) or
                                     (side > 0 and target >= mark)):
                continue
            pair = (target, edge) if side < 0 else (edge, target)
            try:
                rough, _, _ = adaptive_simpson(self._inv_field, *pair, 1e-3)
            except NumericError:
                rough = float("inf")
            want = int(np.ceil(min(rough, 1e9))) + 2
            have = -self._k_lo if side < 0 else self._k_hi
            if have + want > _SOFT_SIDE:
                if side < 0:
                    self._give_up = (target, self._give_up[1])
                else:
                    self._give_up = (self._give_up[0], target)
                continue
            if side < 0:
                self._grow_to(self._k_lo - want, self._k_hi)
            else:
                self._grow_to(self._k_lo, self._k_hi + want)

    def psi_inv(self, x):
        """Flow time from the anchor to position x in (0,1)."""
        x_arr = np.atleast_1d(np.asarray(x, dtype=float))
        if np.any((x_arr <= 0.0) | (x_arr >= 1.0)):
            raise RangeError("psi_inv needs interior points")
        out = np.empty_like(x_arr)
        self._maybe_grow_for(x_arr)
        if len(self._knots) < 2:
            inside = np.zeros(x_arr.shape, dtype=bool)
        else:
            inside = (x_arr >= self._knots[0]) & (x_arr <= self._knots[-1])
        idx = np.clip(np.searchsorted(self._knots, x_arr, side="right") - 1,
                      0, max(len(self._knots) - 2, 0))
        if np.any(inside):
            d = self._stack()
            ii = idx[inside]
            xs = np.clip(x_arr[inside], d["lo"][ii], d["hi"][ii])
            tau = _clenshaw_rows(d["coef"][ii], d["dom_lo"][ii], d["dom_hi"][ii],
                                 xs) - d["base"][ii]
            out[inside] = (ii + self._k_lo) + tau
        for i in np.nonzero(~inside)[0]:
            xi = float(x_arr[i])
            if xi < self._knots[0]:
                out[i] = self._k_lo - self._quad_time(xi, float(self._knots[0]))
            else:
                out[i] = self._k_hi + self._quad_time(float(self._knots[-1]), xi)
        return out if np.ndim(x) else float(out[0])

    def advance(self, x, dt: float):
        """Flow each point of x for time dt (endpoints stay fixed)."""
        x_arr = np.atleast_1d(np.asarray(x, dtype=float))
        out = x_arr.copy()
        interior = (x_arr > 0.0) & (x_arr < 1.0)
        if np.any(interior) and dt != 0.0:
            pts = x_arr[interior]
            self._maybe_grow_for(pts)
            res = np.empty_like(pts)
            if len(self._knots) < 2:
                in_span = np.zeros(pts.shape, dtype=bool)
            else:
                in_span = (pts >= self._knots[0]) & (pts <= self._knots[-1])
            if np.any(in_span):
                t = np.atleast_1d(self.psi_inv(pts[in_span]))
                res[in_span] = np.atleast_1d(self.psi(t + dt))
            deep = ~in_span
            if np.any(deep):
                if abs(dt) <= 4.0:
                    res[deep] = self._advance_batch_local(pts[deep], dt)
                else:
                    for i in np.nonzero(deep)[0]:
                        res[i] = self._advance_direct(float(pts[i]), dt)
            out[interior] = res
        return out if np.ndim(x) else float(out[0])

    def _advance_batch_local(self, pts, dt: float):
        """Vectorized short-time advance for points beyond the cached orbit.

        Solves the flow-time equation per point with Gauss-Legendre panels;
        points that fail to converge fall back to the scalar path.
        """
        limit = 1.0 if dt > 0.0 else 0.0

        def times(a, b):
            # composite 2x16-point GL per point, vectorized over points
            out = np.zeros_like(a)
            for lo_f, hi_f in ((0.0, 0.5), (0.5, 1.0)):
                seg_lo = a + (b - a) * lo_f
                seg_hi = a + (b - a) * hi_f
                half = 0.5 * (seg_hi - seg_lo)
                mid = 0.5 * (seg_hi + seg_lo)
                nodes = mid[:, None] + half[:, None] * _GL_NODES[None, :]
                vals = 1.0 / self.field.jet(nodes.ravel()).f
                out += half * (vals.reshape(nodes.shape) @ _GL_WEIGHTS)
            return out

        x0 = pts
        rate = self.field.jet(x0).f
        guess = x0 + rate * dt
        guess = np.clip(guess, 0.5 * x0 if dt < 0 else x0,
                        x0 if dt < 0 else x0 + 0.5 * (limit - x0))
        lo = np.where(dt > 0, x0, np.minimum(guess, x0))
        hi = np.where(dt > 0, np.maximum(guess, x0), x0)
        # expand brackets until the time difference covers dt
        for _ in range(200):
            tt = times(x0, np.where(dt > 0, hi, lo))
            short = (tt < dt) if dt > 0 else (tt > dt)
            if not np.any(short):
                break
            if dt > 0:
                hi = np.where(short, hi + 0.5 * (limit - hi), hi)
            else:
                lo = np.where(short, 0.5 * lo, lo)
        x = 0.5 * (lo + hi)
        ok = np.zeros(x.shape, dtype=bool)
        for _ in range(80):
            r = times(x0, x) - dt
            ok = np.abs(r) <= 5e-12 * max(1.0, abs(dt))
            tight = (hi - lo) <= 4.0 * np.spacing(np.maximum(np.abs(lo), np.abs(hi)))
            if np.all(ok | tight):
                ok |= tight
                break
            hi = np.where(r > 0, np.minimum(hi, x), hi)
            lo = np.where(r < 0, np.maximum(lo, x), lo)
            xn = x - r * self.field.jet(x).f
            bad = (xn <= lo) | (xn >= hi) | ~np.isfinite(xn)
            x = np.where(bad, 0.5 * (lo + hi), xn)
        out = x.copy()
        for i in np.nonzero(~ok)[0]:
            out[i] = self._advance_direct(float(pts[i]), dt)
        return out

    def knot(self, k: int) -> float:
        """Orbit point f^k(anchor)."""
        if not self._grow_to(min(k, self._k_lo), max(k + 1, self._k_hi)):
            if not (self._k_lo <= k <= self._k_hi):
                raise RangeError(f"orbit index {k} beyond chart cap")
        return float(self._knots[k - self._k_lo])


_chart_cache: dict = {}


def chart_for(field, anchor: float = 0.5) -> "FlowChart":
    """Shared chart cache keyed by (field key, anchor); idempotent."""
    key = (field.key(), anchor)
    ch = _chart_cache.get(key)
    if ch is None:
        ch = FlowChart(field, anchor)
        _chart_cache[key] = ch
    return ch


def chart_for_positive(field, t: float = 1.0, anchor: float = 0.5) -> "FlowChart":
    """Chart of the field t*X, requiring the scaled field to be positive."""
    from .fields import Scale
    target = field if t == 1.0 else Scale(field, float(t))
    probe = np.linspace(0.0, 1.0, 257)[1:-1]
    if not np.all(target(probe) > 0.0):
        raise UnsupportedFieldError("time-scaled field is not positive on (0,1)")
    return chart_for(target, anchor)


class OrbitChart:
    """Chart psi(t) = f_t(a) built from one unit chart plus map iteration.

    The base interval [a, f(a)] carries a normalized time coordinate from a
    (possibly reconstructed) field; every other fundamental interval is
    reached by exact orbit translation, so psi(t+1) = f(psi(t)) holds to
    roundoff regardless of reconstruction error.
    """

    def __init__(self, f, base: "UnitChart", max_steps: int = 4096):
        self.f = f
        self.base = base
        self.max_steps = max_steps
        self._knots = [base.a, base.b]   # f^k(a) for k in [k_lo, k_lo+len-1]
        self._k_lo = 0

    def _grow(self, k_min: int, k_max: int):
        while self._k_lo > k_min and -self._k_lo < self.max_steps:
            self._knots.insert(0, float(self.f.invert(self._knots[0])))
            self._k_lo -= 1
        while self._k_lo + len(self._knots) - 1 < k_max and \
                len(self._knots) < 2 * self.max_steps:
            nxt = float(self.f(self._knots[-1]))
            if nxt >= 1.0 - 1e-15:
                break
            self._knots.append(nxt)

    def psi(self, t):
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        k = np.floor(t_arr).astype(int)
        out = np.empty_like(t_arr)
        base_x = self.base.position(t_arr - k)
        for kk in np.unique(k):
            m = k == kk
            x = base_x[m]
            step = self.f if kk > 0 else None
            for _ in range(abs(int(kk))):
                x = self.f(x) if kk > 0 else self.f.invert(x)
            out[m] = x
        return out if np.ndim(t) else float(out[0])

    def psi_inv(self, x):
        x_arr = np.atleast_1d(np.asarray(x, dtype=float))
        if np.any((x_arr <= 0.0) | (x_arr >= 1.0)):
            raise RangeError("psi_inv needs interior points")
        lo, hi = float(np.min(x_arr)), float(np.max(x_arr))
        for _ in range(64):
            knots = np.asarray(self._knots)
            need_lo = lo < knots[0] and -self._k_lo < self.max_steps
            need_hi = hi >= knots[-1] and len(knots) < 2 * self.max_steps
            if not (need_lo or need_hi):
                break
            self._grow(self._k_lo - (64 if need_lo else 0),
                       self._k_lo + len(self._knots) + (64 if need_hi else 0))
        knots = np.asarray(self._knots)
        if np.any(x_arr < knots[0]) or np.any(x_arr > knots[-1]):
            raise RangeError("point beyond the orbit-chart range")
        idx = np.clip(np.searchsorted(knots, x_arr, side="right") - 1,
                      0, len(knots) - 2)
        out = np.empty_like(x_arr)
        for j in np.unique(idx):
            m = idx == j
            k = int(j) + self._k_lo
            y = x_arr[m]
            for _ in range(abs(k)):
                y = self.f.invert(y) if k > 0 else self.f(y)
            out[m] = k + self.base.tau(np.clip(y, self.base.a, self.base.b))
        return out if np.ndim(x) else float(out[0])


class UnitChart:
    """Normalized time coordinate on a single fundamental interval [a, b].

    Built from samples of a (possibly reconstructed) field; the local time is
    rescaled so that tau(a) = 0 and tau(b) = 1 exactly, which keeps orbit
    translation identities exact regardless of reconstruction error.
    """

    def __init__(self, field_callable, a: float, b: float, deg: int = 48):
        self.a = float(a)
        self.b = float(b)
        poly = cheb_fit(lambda x: 1.0 / np.asarray(field_callable(x), float),
                        self.a, self.b, deg=deg).integ(lbnd=self.a)
        self.raw_total = float(poly(self.b))
        self._poly = poly
        self._fit = _IntervalFit(self.a, self.b, poly, 0.0)

    def tau(self, x):
        """Normalized time in [0,1] of positions in [a, b]."""
        return self._poly(np.asarray(x, float)) / self.raw_total

    def position(self, sigma):
        """Inverse of tau."""
        s = np.asarray(sigma, dtype=float)
        return self._fit.solve(s * self.raw_total)
