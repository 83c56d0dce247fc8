"""Adaptive Simpson quadrature and piecewise-Chebyshev fitting utilities.

The Simpson routine processes a whole frontier of subintervals per pass, so
integrands that accept numpy arrays are evaluated in large batches.  Final
summation is in fixed left-to-right interval order for determinism.
"""

from __future__ import annotations

import numpy as np
from numpy.polynomial import chebyshev as C

from .errors import SingularIntegrandError

ABS_FLOOR = 1e-13
MAX_DEPTH = 60


def adaptive_simpson(g, a: float, b: float, rel_tol: float = 1e-9,
                     abs_floor: float = ABS_FLOOR, max_depth: int = MAX_DEPTH,
                     abs_tol: float = 0.0):
    """Integrate ``g`` over [a, b] with local error control.

    Returns ``(value, error_estimate, evaluations)``.  ``g`` must accept a
    numpy array of points.  ``abs_tol`` sets an absolute target for the whole
    integral (needed when the integrand is reconstruction noise around zero).
    Raises :class:`SingularIntegrandError` when an interval needs more than
    ``max_depth`` bisections.
    """
    a = float(a)
    b = float(b)
    if a == b:
        return 0.0, 0.0, 0
    if b < a:
        v, e, n = adaptive_simpson(g, b, a, rel_tol, abs_floor, max_depth, abs_tol)
        return -v, e, n
    return _adaptive_multi(g, [(a, b)], rel_tol, abs_floor, max_depth, abs_tol)


def _adaptive_multi(g, segments, rel_tol, abs_floor=ABS_FLOOR,
                    max_depth=MAX_DEPTH, abs_tol=0.0):
    """Shared-frontier adaptive Simpson over several ordered segments.

    All active subintervals across all segments are refined together, so the
    integrand is always evaluated in one large batch per refinement level.
    """
    rel_tol = max(float(rel_tol), 1e-14)
    abs_floor = max(float(abs_floor), float(abs_tol))

    aa0 = np.array([s[0] for s in segments])
    bb0 = np.array([s[1] for s in segments])
    mm0 = 0.5 * (aa0 + bb0)
    xs = np.concatenate([aa0, mm0, bb0])
    fs = np.asarray(g(xs), dtype=float)
    n = len(segments)
    fa0, fm0, fb0 = fs[:n], fs[n:2 * n], fs[2 * n:]
    nev = 3 * n
    span = float(np.sum(bb0 - aa0))

    whole = (bb0 - aa0) / 6.0 * (fa0 + 4.0 * fm0 + fb0)
    frontier = np.stack([aa0, bb0, fa0, fm0, fb0, whole, np.zeros(n)], axis=1)
    done_parts = []
    err_total = 0.0

    while frontier.shape[0]:
        aa, bb = frontier[:, 0], frontier[:, 1]
        fa, fm, fb = frontier[:, 2], frontier[:, 3], frontier[:, 4]
        s_whole, depth = frontier[:, 5], frontier[:, 6]

        m = 0.5 * (aa + bb)
        lm = 0.5 * (aa + m)
        rm = 0.5 * (m + bb)
        fl = np.asarray(g(lm), dtype=float)
        fr = np.asarray(g(rm), dtype=float)
        nev += 2 * len(lm)

        h6 = (bb - aa) / 12.0
        s_left = h6 * (fa + 4.0 * fl + fm)
        s_right = h6 * (fm + 4.0 * fr + fb)
        s2 = s_left + s_right
        delta = s2 - s_whole

        # local acceptance: relative to the local mass, plus a length-share of
        # the absolute floor; keeps power-law integrands at O(log) depth
        tol = np.maximum(rel_tol * np.abs(s2), abs_floor * (bb - aa) / span)
        ok = (np.abs(delta) <= 15.0 * tol) | ((bb - aa) <= 16.0 * np.spacing(np.abs(bb)))
        exhausted = (~ok) & (depth >= max_depth)
        if np.any(exhausted):
            bad = float(aa[exhausted][0])
            raise SingularIntegrandError(
                f"adaptive quadrature exceeded depth {max_depth} near x={bad!r}",
                breakpoint=bad)

        if np.any(ok):
            done_parts.append(np.stack([aa[ok], s2[ok] + delta[ok] / 15.0], axis=1))
            err_total += float(np.sum(np.abs(delta[ok])) / 15.0)

        split = ~ok
        if np.any(split):
            left = np.stack([aa[split], m[split], fa[split], fl[split], fm[split],
                             s_left[split], depth[split] + 1], axis=1)
            right = np.stack([m[split], bb[split], fm[split], fr[split], fb[split],
                              s_right[split], depth[split] + 1], axis=1)
            frontier = np.concatenate([left, right], axis=0)
        else:
            frontier = np.empty((0, 7))

    parts = np.concatenate(done_parts, axis=0)
    order = np.argsort(parts[:, 0], kind="stable")
    value = float(np.sum(parts[order, 1]))
    return value, err_total, nev


def integrate(g, a, b, rel_tol=1e-9, breakpoints=(), abs_tol=0.0):
    """Adaptive Simpson with manual splits at known kinks; returns (value, err).

    All pieces share one refinement frontier, so the integrand is evaluated
    in large batches regardless of how many kinks were supplied.
    """
    sign = 1.0
    if b < a:
        a, b = b, a
        sign = -1.0
    pts = [float(a)] + sorted(float(p) for p in breakpoints if a < p < b) + [float(b)]
    segments = [(lo, hi) for lo, hi in zip(pts[:-1], pts[1:]) if hi > lo]
    if not segments:
        return 0.0, 0.0
    v, e, _ = _adaptive_multi(g, segments, rel_tol, abs_tol=abs_tol)
    return sign * v, e


# ---------------------------------------------------------------------------
# Chebyshev helpers
# ---------------------------------------------------------------------------

def cheb_nodes(deg: int, a: float, b: float):
    """Chebyshev extrema on [a, b], ordered to match ``cheb_from_values``."""
    xi = np.cos(np.pi * np.arange(deg + 1) / deg)
    return 0.5 * (b - a) * xi + 0.5 * (b + a)


def cheb_from_values(vals, a: float, b: float):
    """Chebyshev interpolant from values at ``cheb_nodes(len(vals)-1, a, b)``."""
    coef = _cheb_coeffs_from_extrema(np.asarray(vals, dtype=float))
    return C.Chebyshev(coef, domain=[a, b])


def cheb_fit(f, a: float, b: float, deg: int = 32, tol: float = 1e-13,
             max_deg: int = 512):
    """Chebyshev interpolant of ``f`` on [a, b], raising degree until the
    trailing coefficients fall below ``tol`` relative to the largest one."""
    d = deg
    while True:
        k = np.arange(d + 1)
        nodes = np.cos(np.pi * k / d)
        x = 0.5 * (b - a) * nodes + 0.5 * (b + a)
        vals = np.asarray(f(x), dtype=float)
        coef = _cheb_coeffs_from_extrema(vals)
        top = np.max(np.abs(coef)) or 1.0
        if d >= max_deg or np.max(np.abs(coef[-2:])) <= tol * top:
            return C.Chebyshev(coef, domain=[a, b])
        d *= 2


def _cheb_coeffs_from_extrema(vals):
    """Coefficients of the interpolant through Chebyshev extrema (DCT-I)."""
    n = len(vals) - 1
    ext = np.concatenate([vals, vals[-2:0:-1]])
    fft = np.fft.rfft(ext).real / n
    coef = fft[:n + 1]
    coef[0] *= 0.5
    coef[-1] *= 0.5
    return coef


class PiecewiseCheb:
    """Piecewise Chebyshev representation on a partitioned interval."""

    def __init__(self, pieces, breaks):
        self.pieces = list(pieces)
        self.breaks = np.asarray(breaks, dtype=float)

    @classmethod
    def from_function(cls, f, breaks, deg=32, tol=1e-13):
        breaks = np.asarray(sorted(float(t) for t in breaks), dtype=float)
        pieces = [cheb_fit(f, breaks[i], breaks[i + 1], deg=deg, tol=tol)
                  for i in range(len(breaks) - 1)]
        return cls(pieces, breaks)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.empty_like(x)
        idx = np.clip(np.searchsorted(self.breaks, x, side="right") - 1,
                      0, len(self.pieces) - 1)
        for i in range(len(self.pieces)):
            m = idx == i
            if np.any(m):
                out[m] = self.pieces[i](x[m])
        return out

    def antiderivative(self):
        """Cumulative antiderivative vanishing at the left endpoint."""
        pieces = []
        offset = 0.0
        for p in self.pieces:
            q = p.integ(lbnd=p.domain[0])
            q = q + offset
            offset = q(p.domain[1])
            pieces.append(q)
        return PiecewiseCheb(pieces, self.breaks)

    def integral(self):
        total = 0.0
        for p in self.pieces:
            total += p.integ(lbnd=p.domain[0])(p.domain[1])
        return float(total)
