"""Total variation of log-derivatives, iterate variation, and limit extrapolation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .diffeo import Diffeo
from .errors import DomainError, NumericError
from .intervals import Interval
from .quadrature import integrate

DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class TVResult:
    """Total variation value with an error estimate and the work spent."""

    value: float
    abs_error_estimate: float
    nodes_used: int


@dataclass(frozen=True)
class LimitEstimate:
    value: float
    error: float
    raw_series: tuple


def _sign_pattern(vals, tol=1e-12):
    """+1/-1 if the sample is one-signed up to tol, else 0."""
    if np.all(vals >= -tol):
        return 1
    if np.all(vals <= tol):
        return -1
    return 0


def _sign_change_points(xs, vals):
    s = np.sign(vals)
    idx = np.nonzero(s[:-1] * s[1:] < 0)[0]
    return [0.5 * (xs[i] + xs[i + 1]) for i in idx]


def total_variation_log_deriv(f: Diffeo, interval: Interval,
                              tol: float = DEFAULT_TOL,
                              method: str = "auto") -> TVResult:
    """var(log Df; I).

    For the C^2 trees this is the integral of |D2f/Df| over I; when the
    log-derivative is monotone on a probe grid the exact endpoint difference
    is returned instead.  ``method='partition'`` forces the dyadic
    partition-supremum fallback (stress testing only).
    """
    a, b = interval.a, interval.b
    if b <= a:
        return TVResult(0.0, 0.0, 0)
    if method == "partition":
        return _tv_by_partition(f, a, b, tol)

    xs = np.linspace(a, b, 257)
    _, dvals, nl = f.jet(xs)
    if np.any(dvals <= 0.0):
        raise DomainError("map has non-positive derivative on the interval")
    pattern = _sign_pattern(nl)
    if pattern != 0 and method in ("auto", "exact"):
        _, la, _ = f.iterate_log_jet(1, a)
        _, lb, _ = f.iterate_log_jet(1, b)
        return TVResult(abs(lb - la), 4e-16 * max(abs(la), abs(lb), 1.0), 2)

    breaks = _sign_change_points(xs, nl)
    val, err = integrate(lambda x: np.abs(f.jet(x)[2]), a, b, tol, breaks)
    return TVResult(val, max(err, 1e-15), 257)


def _tv_by_partition(f: Diffeo, a: float, b: float, tol: float) -> TVResult:
    prev = -1.0
    n = 64
    while n <= (1 << 22):
        xs = np.linspace(a, b, n + 1)
        logd = np.log(f.jet(xs)[1])
        val = float(np.sum(np.abs(np.diff(logd))))
        if prev >= 0.0 and val - prev < tol:
            return TVResult(val, max(val - prev, 0.0) + tol, n + 1)
        prev = val
        n *= 2
    raise NumericError("partition refinement did not settle", residual=val - prev)


def var_log_iterate(f: Diffeo, n: int, interval: Interval,
                    tol: float = DEFAULT_TOL) -> TVResult:
    """var(log Df^n; I) via the absolute cocycle sum, never expanding f^n.

    Moderate iterate counts integrate |sum_i N(f) o f^i * Df^i| adaptively;
    large ones (where the cocycle kinks proliferate) switch to refined
    partition sums of log Df^n, each partition needing one orbit sweep.
    """
    if n < 1:
        raise DomainError("iterate count must be >= 1")
    a, b = interval.a, interval.b
    if b <= a:
        return TVResult(0.0, 0.0, 0)

    xs = np.linspace(a, b, 257)
    _, _, nl = f.iterate_log_jet(n, xs)
    pattern = _sign_pattern(nl)
    if pattern != 0:
        _, la, _ = f.iterate_log_jet(n, a)
        _, lb, _ = f.iterate_log_jet(n, b)
        return TVResult(abs(lb - la), 4e-16 * n * max(1.0, abs(la), abs(lb)), 2)

    if n > 96:
        return _tv_iterate_partition(f, n, a, b, tol)

    breaks = _sign_change_points(xs, nl)
    val, err = integrate(lambda x: np.abs(f.iterate_log_jet(n, x)[2]),
                         a, b, tol, breaks)
    return TVResult(val, max(err, 1e-15), 257)


def _tv_iterate_partition(f: Diffeo, n: int, a: float, b: float,
                          tol: float) -> TVResult:
    prev = None
    m = 4097
    val = 0.0
    while m <= 65537:
        xs = np.linspace(a, b, m)
        _, logd, _ = f.iterate_log_jet(n, xs)
        val = float(np.sum(np.abs(np.diff(logd))))
        if prev is not None:
            gain = val - prev
            if gain <= max(4.0 * tol * max(val, 1.0), 1e-12):
                return TVResult(val, 2.0 * gain + tol * max(val, 1.0), m)
        prev = val
        m = 2 * m - 1
    return TVResult(val, 4.0 * (val - prev), m)


def aitken_limit(series) -> LimitEstimate:
    """Accelerate a convergent sequence of (index, value) pairs.

    Applies iterated Aitken delta-squared when the increment ratios look
    stable, otherwise returns the last value with the spread of the last
    three entries as the error.
    """
    entries = [(int(k), float(v)) for k, v in series]
    if len(entries) < 4:
        raise DomainError("need at least 4 series entries")
    vals = np.array([v for _, v in entries])
    scale = max(1.0, float(np.max(np.abs(vals))))

    d = np.diff(vals)
    if np.all(np.abs(d) <= 1e-14 * scale):
        return LimitEstimate(float(vals[-1]), 0.0, tuple(entries))

    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = d[1:] / d[:-1]
    stable = (np.all(np.isfinite(ratios[-2:]))
              and np.all(np.abs(ratios[-2:]) < 1.0)
              and abs(ratios[-1] - ratios[-2]) < 0.25)
    if not stable:
        spread = float(np.max(vals[-3:]) - np.min(vals[-3:]))
        return LimitEstimate(float(vals[-1]), spread, tuple(entries))

    cur = vals.copy()
    last_two = [float(cur[-1])]
    for _ in range(3):
        if len(cur) < 3:
            break
        d1 = cur[1:] - cur[:-1]
        d2 = d1[1:] - d1[:-1]
        with np.errstate(divide="ignore", invalid="ignore"):
            nxt = cur[2:] - d1[1:] ** 2 / d2
        good = np.isfinite(nxt)
        if not np.all(good):
            nxt = np.where(good, nxt, cur[2:])
        cur = nxt
        last_two.append(float(cur[-1]))
    value = float(cur[-1])
    error = max(abs(last_two[-1] - last_two[-2]) if len(last_two) > 1 else 0.0,
                4e-16 * scale)
    return LimitEstimate(value, error, tuple(entries))
