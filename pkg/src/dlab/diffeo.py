"""Orientation-preserving C^2 diffeomorphisms of [0,1] as description trees.

Every node carries exact evaluation rules for f, Df and the log-derivative
cocycle N(f) = D^2f/Df; composite nodes use the chain rule and the cocycle
identity N(f o g) = N(g) + (N(f) o g) * Dg.  No global finite differences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .charts import FlowChart, chart_for
from .errors import (ConstructionError, DomainError, NumericError, SizeError,
                     UnsupportedFieldError)
from .fields import Scale, VectorField
from .profiles import MOLLIFIER, bump_jet, mollified_ramp_jet
from .quadrature import PiecewiseCheb

ITERATE_CAP = 1 << 20
_PROBE_N = 1025


def _arr(x):
    return np.atleast_1d(np.asarray(x, dtype=float))


def _unwrap(x_in, *outs):
    if np.ndim(x_in) == 0:
        vals = tuple(float(o[0]) for o in outs)
        return vals[0] if len(vals) == 1 else vals
    return outs[0] if len(outs) == 1 else outs


@dataclass(frozen=True)
class BumpSpec:
    """Amplitude of the standard-mollifier bump profile (peak value 1).

    The induced map x -> x + eps*|I|*profile((x-a)/|I|) must stay monotone,
    which pins |eps| * max|profile'| < 1.
    """

    eps: float

    def __post_init__(self):
        bound = 1.0 / max(abs(MOLLIFIER.slope_min), MOLLIFIER.slope_max)
        if abs(self.eps) >= bound:
            raise ConstructionError(
                f"bump amplitude eps={self.eps} breaks monotonicity "
                f"(|eps| must be < {bound:.6f})")


class Diffeo:
    """Base class. Subclasses implement ``_jet`` on arrays and ``key``."""

    # -- evaluation ----------------------------------------------------------

    def jet(self, x):
        """Return (f(x), Df(x), N(x)) with N = D2f/Df, elementwise."""
        xa = _arr(x)
        if np.any((xa < 0.0) | (xa > 1.0)):
            raise DomainError("diffeomorphisms of [0,1] take arguments in [0,1]")
        y, dy, nl = self._jet(xa)
        return _unwrap(x, y, dy, nl)

    def __call__(self, x):
        xa = _arr(x)
        if np.any((xa < 0.0) | (xa > 1.0)):
            raise DomainError("diffeomorphisms of [0,1] take arguments in [0,1]")
        return _unwrap(x, self._value(xa))

    def _value(self, xa):
        return self._jet(xa)[0]

    def deriv(self, x):
        return self.jet(x)[1] if np.ndim(x) else self.jet(x)[1]

    def nonlinearity(self, x):
        j = self.jet(x)
        return j[2]

    def evaluate(self, x, order: int = 0):
        if order not in (0, 1, 2):
            raise DomainError("order must be 0, 1 or 2")
        y, dy, nl = self.jet(x)
        return (y, dy, nl * dy)[order]

    def displacement(self, x):
        xa = _arr(x)
        return _unwrap(x, self._value(xa) - xa)

    # -- inversion -----------------------------------------------------------

    def invert(self, y):
        ya = _arr(y)
        if np.any((ya < 0.0) | (ya > 1.0)):
            raise DomainError("invert takes values in [0,1]")
        return _unwrap(y, self._invert(ya))

    def _invert(self, ya):
        return _newton_invert(self, ya)

    def inverse(self) -> "Diffeo":
        return Inverse(self)

    def iterate(self, k: int) -> "Diffeo":
        if k == 0:
            return Identity()
        if k == 1:
            return self
        return Iterate(self, int(k))

    # -- orbits and iterates ---------------------------------------------------

    def iterate_eval(self, n: int, x):
        """(f^n(x), Df^n(x), N(f^n)(x)) accumulated along the orbit."""
        if abs(n) > ITERATE_CAP:
            raise SizeError(f"iterate count {n} exceeds cap {ITERATE_CAP}")
        xa = _arr(x)
        y, logd, nl = self._iterate_jet(int(n), xa)
        return _unwrap(x, y, np.exp(logd), nl)

    def iterate_log_jet(self, n: int, x):
        """(f^n(x), log Df^n(x), N(f^n)(x)): safe for huge derivative products."""
        if abs(n) > ITERATE_CAP:
            raise SizeError(f"iterate count {n} exceeds cap {ITERATE_CAP}")
        xa = _arr(x)
        y, logd, nl = self._iterate_jet(int(n), xa)
        return _unwrap(x, y, logd, nl)

    def _iterate_jet(self, n: int, xa):
        if n == 0:
            return xa.copy(), np.zeros_like(xa), np.zeros_like(xa)
        step = self if n > 0 else Inverse(self)
        y = xa.copy()
        logd = np.zeros_like(xa)
        nl = np.zeros_like(xa)
        for _ in range(abs(n)):
            yv, dy, nlf = step._jet(y)
            nl = nl + nlf * np.exp(logd)
            logd = logd + np.log(dy)
            y = yv
        return y, logd, nl

    def orbit(self, p: float, k_min: int, k_max: int):
        """Strictly monotone orbit segment (f^k(p)) for k_min <= k <= k_max."""
        if max(abs(k_min), abs(k_max)) > ITERATE_CAP:
            raise SizeError("orbit range exceeds cap")
        if k_min > k_max:
            raise DomainError("empty orbit range")
        if not 0.0 < p < 1.0:
            raise DomainError("orbit base point must be interior")
        pts = {0: float(p)}
        x = float(p)
        for k in range(1, k_max + 1):
            x = float(self(x))
            pts[k] = x
        x = float(p)
        for k in range(-1, k_min - 1, -1):
            x = float(self.invert(x))
            pts[k] = x
        return [pts[k] for k in range(k_min, k_max + 1)]

    # -- cached structure ------------------------------------------------------

    @property
    def direction(self) -> int:
        """+1 if f > id on (0,1), -1 if f < id, 0 if interior fixed points."""
        d = getattr(self, "_dir_cache", None)
        if d is None:
            d = self._direction()
            object.__setattr__(self, "_dir_cache", d)
        return d

    def _direction(self) -> int:
        x = np.linspace(0.0, 1.0, _PROBE_N)[1:-1]
        disp = self._value(x) - x
        tol = 1e-13
        if np.all(disp > tol):
            return 1
        if np.all(disp < -tol):
            return -1
        return 0

    @property
    def df0(self) -> float:
        v = getattr(self, "_df0_cache", None)
        if v is None:
            v = float(self._endpoint_deriv(0))
            object.__setattr__(self, "_df0_cache", v)
        return v

    @property
    def df1(self) -> float:
        v = getattr(self, "_df1_cache", None)
        if v is None:
            v = float(self._endpoint_deriv(1))
            object.__setattr__(self, "_df1_cache", v)
        return v

    def _endpoint_deriv(self, end: int) -> float:
        return float(self.jet(float(end))[1])

    def identity_below(self) -> float:
        """A bound c with f = id on [0, c] (0.0 when none is known)."""
        return 0.0

    def identity_above(self) -> float:
        """A bound c with f = id on [c, 1] (1.0 when none is known)."""
        return 1.0

    def key(self):
        raise NotImplementedError

    def __eq__(self, other):
        return isinstance(other, Diffeo) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return f"{type(self).__name__}{self.key()[1:]}"


def _newton_invert(f: Diffeo, ya, tol: float = 1e-13, max_iter: int = 200):
    """Safeguarded Newton (bracketed by bisection) for monotone f on [0,1]."""
    lo = np.zeros_like(ya)
    hi = np.ones_like(ya)
    x = ya.copy()
    best_r = np.full_like(ya, np.inf)
    for _ in range(max_iter):
        fv, dv, _ = f._jet(x)
        r = fv - ya
        best_r = np.minimum(best_r, np.abs(r))
        done = np.abs(r) <= tol
        tight = (hi - lo) <= 4.0 * np.spacing(np.maximum(np.abs(lo), np.abs(hi)))
        if np.all(done | tight):
            return x
        hi = np.where(r > 0, np.minimum(hi, x), hi)
        lo = np.where(r < 0, np.maximum(lo, x), lo)
        with np.errstate(divide="ignore", invalid="ignore"):
            xn = x - r / dv
        bad = ~np.isfinite(xn) | (xn <= lo) | (xn >= hi)
        x = np.where(done, x, np.where(bad, 0.5 * (lo + hi), xn))
    worst = float(np.max(np.abs(best_r)))
    raise NumericError(f"invert failed to converge (residual {worst:.3e})",
                       residual=worst)


# ---------------------------------------------------------------------------
# Leaf nodes
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Identity(Diffeo):
    def _jet(self, xa):
        return xa.copy(), np.ones_like(xa), np.zeros_like(xa)

    def _invert(self, ya):
        return ya.copy()

    def _direction(self):
        return 0

    def identity_below(self):
        return 1.0

    def identity_above(self):
        return 0.0

    def key(self):
        return ("id",)


@dataclass(frozen=True, eq=False)
class Mobius(Diffeo):
    """x -> (1+c)x / (1+cx); fixes both endpoints, Df(0) = 1+c."""

    c: float

    def __post_init__(self):
        if self.c <= -1.0 or self.c == 0.0:
            raise ConstructionError("mobius parameter must satisfy c > -1, c != 0")

    def _jet(self, xa):
        c = self.c
        den = 1.0 + c * xa
        y = (1.0 + c) * xa / den
        dy = (1.0 + c) / (den * den)
        nl = -2.0 * c / den
        return y, dy, nl

    def _invert(self, ya):
        return ya / (1.0 + self.c - self.c * ya)

    def _iterate_jet(self, n, xa):
        if n == 0:
            return xa.copy(), np.zeros_like(xa), np.zeros_like(xa)
        cn = math.expm1(n * math.log1p(self.c))
        m = Mobius(cn)
        y, dy, nl = m._jet(xa)
        return y, np.log(dy), nl

    def _direction(self):
        return 1 if self.c > 0 else -1

    def _endpoint_deriv(self, end):
        return 1.0 + self.c if end == 0 else 1.0 / (1.0 + self.c)

    def key(self):
        return ("mobius", self.c)


@dataclass(frozen=True, eq=False)
class TwoSlope(Diffeo):
    """Piecewise-affine map with slopes e^lam, e^mu mollified at the corner.

    The corner sits at b = (1-e^mu)/(e^lam-e^mu); convolution of the ramp with
    the standard width-1/n mollifier keeps the derivative non-increasing.
    """

    lam: float
    mu: float
    n: int

    def __post_init__(self):
        if not (self.lam > 0.0 > self.mu):
            raise ConstructionError("two-slope map needs lam > 0 > mu")
        if self.n < 1:
            raise ConstructionError("smoothing index must be a positive integer")
        b = self.corner
        if b - self.delta <= 0.0 or b + self.delta >= 1.0:
            raise ConstructionError(
                f"smoothing window 1/{self.n} crosses an endpoint (corner {b:.4f})")

    @property
    def corner(self) -> float:
        el, em = math.exp(self.lam), math.exp(self.mu)
        return (1.0 - em) / (el - em)

    @property
    def delta(self) -> float:
        return 1.0 / self.n

    def _jet(self, xa):
        el, em = math.exp(self.lam), math.exp(self.mu)
        r = mollified_ramp_jet(xa - self.corner, self.delta)
        y = el * xa + (em - el) * r.f
        dy = el + (em - el) * r.d1
        d2 = (em - el) * r.d2
        return y, dy, d2 / dy

    def _direction(self):
        return 1

    def _endpoint_deriv(self, end):
        return math.exp(self.lam) if end == 0 else math.exp(self.mu)

    def key(self):
        return ("exlimit", self.lam, self.mu, self.n)


def _expm1_ratio(t, lam):
    """(e^{t*lam} - 1)/lam with the removable singularity at lam = 0."""
    lam = np.asarray(lam, dtype=float)
    small = np.abs(lam) < 1e-10
    safe = np.where(small, 1.0, lam)
    return np.where(small, t * (1.0 + 0.5 * t * lam), np.expm1(t * safe) / safe)


@dataclass(frozen=True, eq=False)
class FlowMap(Diffeo):
    """Time-t map of the flow of a field with no interior zeros."""

    field: VectorField
    t: float

    def __post_init__(self):
        if self.field.interior_zeros():
            raise UnsupportedFieldError(
                "flow maps need a field without interior zeros; "
                "split on fixed intervals first")
        probe = np.linspace(0.0, 1.0, 257)[1:-1]
        vals = self.field(probe)
        if np.all(vals > 0.0):
            object.__setattr__(self, "_pos", self.field)
            object.__setattr__(self, "_tp", float(self.t))
        elif np.all(vals < 0.0):
            object.__setattr__(self, "_pos", Scale(self.field, -1.0))
            object.__setattr__(self, "_tp", -float(self.t))
        else:
            raise UnsupportedFieldError("field changes sign on the interior")

    @property
    def chart(self) -> FlowChart:
        return chart_for(self._pos)

    def _jet(self, xa):
        y = self._value(xa)
        j_x = self._pos.jet(xa)
        j_y = self._pos.jet(y)
        safe = (j_x.f > 1e-150) & (j_y.f > 1e-150)
        with np.errstate(divide="ignore", invalid="ignore"):
            dy_ratio = j_y.f / j_x.f
            nl_ratio = (j_y.d1 - j_x.d1) / j_x.f
        dy_end = np.exp(self._tp * j_x.d1)
        nl_end = j_x.d2 * _expm1_ratio(self._tp, j_x.d1)
        return y, np.where(safe, dy_ratio, dy_end), np.where(safe, nl_ratio, nl_end)

    def _value(self, xa):
        return np.atleast_1d(self.chart.advance(xa, self._tp))

    def _invert(self, ya):
        return np.atleast_1d(self.chart.advance(ya, -self._tp))

    def _iterate_jet(self, n, xa):
        if n == 0:
            return xa.copy(), np.zeros_like(xa), np.zeros_like(xa)
        big = FlowMap(self.field, self.t * n)
        y, dy, nl = big._jet(xa)
        return y, np.log(dy), nl

    def _direction(self):
        d = 1 if self._tp > 0 else (-1 if self._tp < 0 else 0)
        return d

    def _endpoint_deriv(self, end):
        slope = self._pos.jet(np.array([float(end)])).d1[0]
        return math.exp(self._tp * slope)

    def key(self):
        return ("flow", self.field.key(), self.t)


@dataclass(frozen=True, eq=False)
class BumpDiffeo(Diffeo):
    """x + eps*|I|*profile((x-a)/|I|) on I = [a,b], identity outside."""

    a: float
    b: float
    spec: BumpSpec

    def __post_init__(self):
        if not 0.0 <= self.a < self.b <= 1.0:
            raise ConstructionError("bump support must be a nondegenerate subinterval")

    @property
    def eps(self) -> float:
        return self.spec.eps

    def _jet(self, xa):
        w = self.b - self.a
        u = (xa - self.a) / w
        j = bump_jet(u)
        y = xa + self.eps * w * j.f
        dy = 1.0 + self.eps * j.d1
        d2 = self.eps * j.d2 / w
        return y, dy, d2 / dy

    def _direction(self):
        return 0

    def _endpoint_deriv(self, end):
        return 1.0

    def identity_below(self):
        return self.a

    def identity_above(self):
        return self.b

    def key(self):
        return ("bump", self.a, self.b, self.eps)


# ---------------------------------------------------------------------------
# Composite nodes
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Compose(Diffeo):
    """outer o inner."""

    outer: Diffeo
    inner: Diffeo

    def _jet(self, xa):
        gy, gd, gn = self.inner._jet(xa)
        gy = np.clip(gy, 0.0, 1.0)
        fy, fd, fn = self.outer._jet(gy)
        return fy, fd * gd, gn + fn * gd

    def _value(self, xa):
        return self.outer._value(np.clip(self.inner._value(xa), 0.0, 1.0))

    def _invert(self, ya):
        return self.inner._invert(self.outer._invert(ya))

    def _endpoint_deriv(self, end):
        return self.inner._endpoint_deriv(end) * self.outer._endpoint_deriv(end)

    def identity_below(self):
        return min(self.outer.identity_below(), self.inner.identity_below())

    def identity_above(self):
        return max(self.outer.identity_above(), self.inner.identity_above())

    def key(self):
        return ("compose", self.outer.key(), self.inner.key())


@dataclass(frozen=True, eq=False)
class Inverse(Diffeo):
    inner: Diffeo

    def _jet(self, ya):
        x = self.inner._invert(ya)
        _, dy, nl = self.inner._jet(x)
        return x, 1.0 / dy, -nl / dy

    def _value(self, ya):
        return self.inner._invert(ya)

    def _invert(self, xa):
        return self.inner._value(xa)

    def _iterate_jet(self, n, xa):
        return self.inner._iterate_jet(-n, xa)

    def _direction(self):
        return -self.inner.direction

    def _endpoint_deriv(self, end):
        return 1.0 / self.inner._endpoint_deriv(end)

    def identity_below(self):
        return self.inner.identity_below()

    def identity_above(self):
        return self.inner.identity_above()

    def key(self):
        return ("inverse", self.inner.key())


@dataclass(frozen=True, eq=False)
class Iterate(Diffeo):
    inner: Diffeo
    k: int

    def __post_init__(self):
        if abs(self.k) > ITERATE_CAP:
            raise SizeError("iterate exponent exceeds cap")

    def _jet(self, xa):
        y, logd, nl = self.inner._iterate_jet(self.k, xa)
        return y, np.exp(logd), nl

    def _value(self, xa):
        step = self.inner if self.k > 0 else Inverse(self.inner)
        y = xa.copy()
        for _ in range(abs(self.k)):
            y = step._value(y)
        return y

    def _invert(self, ya):
        y, _, _ = self.inner._iterate_jet(-self.k, ya)
        return y

    def _iterate_jet(self, n, xa):
        return self.inner._iterate_jet(n * self.k, xa)

    def _direction(self):
        base = self.inner.direction
        return base if self.k > 0 else (-base if self.k < 0 else 0)

    def _endpoint_deriv(self, end):
        return self.inner._endpoint_deriv(end) ** self.k

    def identity_below(self):
        return self.inner.identity_below()

    def identity_above(self):
        return self.inner.identity_above()

    def key(self):
        return ("iterate", self.inner.key(), self.k)


@dataclass(frozen=True, eq=False)
class PerturbOnFundamental(Diffeo):
    """g = f o h with h a mollifier bump supported on [p, f(p)]."""

    base: Diffeo
    p: float
    spec: BumpSpec

    def __post_init__(self):
        if not 0.0 < self.p < 1.0:
            raise ConstructionError("perturbation point must be interior")
        if self.base.direction == 0:
            raise ConstructionError(
                "perturbation base must be fixed-point free on (0,1)")
        q = float(self.base(self.p))
        a, b = (self.p, q) if q > self.p else (q, self.p)
        object.__setattr__(self, "_expanded",
                           Compose(self.base, BumpDiffeo(a, b, self.spec)))

    @property
    def bump(self) -> BumpDiffeo:
        return self._expanded.inner

    def _jet(self, xa):
        return self._expanded._jet(xa)

    def _value(self, xa):
        return self._expanded._value(xa)

    def _invert(self, ya):
        return self._expanded._invert(ya)

    def _endpoint_deriv(self, end):
        return self.base._endpoint_deriv(end)

    def _direction(self):
        return self.base.direction

    def key(self):
        return ("perturb", self.base.key(), self.p, self.spec.eps)


@dataclass(frozen=True, eq=False)
class Restrict(Diffeo):
    """Affine reparametrization to [0,1] of the restriction to a fixed interval."""

    inner: Diffeo
    a: float
    b: float

    def __post_init__(self):
        for p in (self.a, self.b):
            if abs(float(self.inner(p)) - p) > 1e-12:
                raise ConstructionError(
                    f"restriction interval endpoint {p} is not fixed by the map")

    def _jet(self, ua):
        w = self.b - self.a
        y, dy, nl = self.inner._jet(self.a + w * ua)
        return (y - self.a) / w, dy, nl * w

    def _invert(self, va):
        w = self.b - self.a
        return (self.inner._invert(self.a + w * va) - self.a) / w

    def key(self):
        return ("restrict", self.inner.key(), self.a, self.b)


@dataclass(frozen=True, eq=False)
class Embed(Diffeo):
    """Map acting as an affinely rescaled copy of ``inner`` on [a,b], identity outside."""

    inner: Diffeo
    a: float
    b: float

    def _jet(self, xa):
        w = self.b - self.a
        u = np.clip((xa - self.a) / w, 0.0, 1.0)
        y, dy, nl = self.inner._jet(u)
        inside = (xa > self.a) & (xa < self.b)
        return (np.where(inside, self.a + w * y, xa),
                np.where(inside, dy, 1.0),
                np.where(inside, nl / w, 0.0))

    def _invert(self, ya):
        w = self.b - self.a
        v = np.clip((ya - self.a) / w, 0.0, 1.0)
        u = self.inner._invert(v)
        inside = (ya > self.a) & (ya < self.b)
        return np.where(inside, self.a + w * u, ya)

    def _direction(self):
        return 0

    def _endpoint_deriv(self, end):
        if (end == 0 and self.a > 0.0) or (end == 1 and self.b < 1.0):
            return 1.0
        return self.inner._endpoint_deriv(end)

    def identity_below(self):
        w = self.b - self.a
        return self.a + w * self.inner.identity_below()

    def identity_above(self):
        w = self.b - self.a
        return self.a + w * self.inner.identity_above()

    def key(self):
        return ("embed", self.inner.key(), self.a, self.b)


@dataclass(frozen=True, eq=False)
class DensityDiffeo(Diffeo):
    """h with Dh proportional to a prescribed positive density on [0,1].

    ``density_jet`` maps an array to a Jet2 of the density; ``breaks`` lists
    known kinks so the cached antiderivative fits cleanly between them.
    """

    density_jet: object
    breaks: tuple
    label: object = "density"

    def _tables(self):
        t = getattr(self, "_tab", None)
        if t is None:
            pieces = PiecewiseCheb.from_function(
                lambda x: self.density_jet(x).f,
                sorted(set((0.0, 1.0) + tuple(self.breaks))), deg=32)
            anti = pieces.antiderivative()
            mass = anti(np.array([1.0]))[0]
            t = (anti, float(mass))
            object.__setattr__(self, "_tab", t)
        return t

    def _jet(self, xa):
        anti, mass = self._tables()
        j = self.density_jet(xa)
        y = np.clip(anti(xa) / mass, 0.0, 1.0)
        dy = j.f / mass
        nl = j.d1 / j.f
        return y, dy, nl

    def third_log_deriv(self, xa):
        """D(N(h)) = D(D2h/Dh), available because the density has exact jets."""
        j = self.density_jet(np.asarray(xa, dtype=float))
        return j.d2 / j.f - (j.d1 / j.f) ** 2

    def _direction(self):
        return 0

    def key(self):
        return ("density", self.label)


@dataclass(frozen=True, eq=False)
class OrbitConjugate(Diffeo):
    """base^j o inner o base^{-j}: a support translated along the orbit.

    Keeps the identity-zone bookkeeping exact: if ``inner`` is supported on
    [a, b], the conjugate is supported on [base^j(a), base^j(b)].
    """

    base: Diffeo
    inner: Diffeo
    j: int

    def __post_init__(self):
        ex = Compose(self.base.iterate(self.j),
                     Compose(self.inner, self.base.iterate(-self.j)))
        object.__setattr__(self, "_expanded", ex)

    def _jet(self, xa):
        return self._expanded._jet(xa)

    def _value(self, xa):
        return self._expanded._value(xa)

    def _invert(self, ya):
        return self._expanded._invert(ya)

    def _direction(self):
        return 0

    def _endpoint_deriv(self, end):
        return 1.0

    def identity_below(self):
        c = self.inner.identity_below()
        if c <= 0.0:
            return 0.0
        y, _, _ = self.base._iterate_jet(self.j, np.array([c]))
        return float(y[0])

    def identity_above(self):
        c = self.inner.identity_above()
        if c >= 1.0:
            return 1.0
        y, _, _ = self.base._iterate_jet(self.j, np.array([c]))
        return float(y[0])

    def key(self):
        return ("orbit_conj", self.base.key(), self.inner.key(), self.j)


def mirror_map(f: Diffeo):
    """sigma o f o sigma (sigma(x) = 1-x) as an exact tree, or None.

    Exactness matters: evaluating near 1 through a literal 1-x wrapper loses
    absolute precision, while these rewrites keep native accuracy.
    """
    from .fields import MirrorField
    if isinstance(f, Identity):
        return Identity()
    if isinstance(f, Mobius):
        return Mobius(-f.c / (1.0 + f.c))
    if isinstance(f, FlowMap):
        return FlowMap(MirrorField(f.field), f.t)
    if isinstance(f, BumpDiffeo):
        # the standard profile is symmetric about 1/2
        return BumpDiffeo(1.0 - f.b, 1.0 - f.a, BumpSpec(-f.eps))
    if isinstance(f, Inverse):
        m = mirror_map(f.inner)
        return None if m is None else Inverse(m)
    if isinstance(f, Iterate):
        m = mirror_map(f.inner)
        return None if m is None else Iterate(m, f.k)
    if isinstance(f, Compose):
        mo, mi = mirror_map(f.outer), mirror_map(f.inner)
        if mo is None or mi is None:
            return None
        return Compose(mo, mi)
    if isinstance(f, PerturbOnFundamental):
        return mirror_map(f._expanded)
    if isinstance(f, Embed):
        m = mirror_map(f.inner)
        return None if m is None else Embed(m, 1.0 - f.b, 1.0 - f.a)
    return None


# ---------------------------------------------------------------------------
# Module-level operations (the public core API)
# ---------------------------------------------------------------------------

def evaluate(f: Diffeo, x, order: int = 0):
    """f(x), Df(x) or D^2f(x)."""
    return f.evaluate(x, order)


def invert(f: Diffeo, y):
    """Preimage under f, by node-exact rules or safeguarded Newton."""
    return f.invert(y)


def iterate_eval(f: Diffeo, n: int, x):
    """(f^n(x), Df^n(x), N(f^n)(x)) along the orbit, log-space accumulation."""
    return f.iterate_eval(n, x)


def flow_map(field: VectorField, t: float) -> Diffeo:
    """Time-t map of the flow of a field with no interior zeros."""
    if t == 0.0:
        return Identity()
    return FlowMap(field, float(t))


def perturb_on_fundamental(f: Diffeo, p: float, bump: BumpSpec) -> Diffeo:
    """g = f o h with h supported on the fundamental interval [p, f(p)]."""
    if bump.eps == 0.0:
        return f
    return PerturbOnFundamental(f, float(p), bump)


def orbit(f: Diffeo, p: float, k_min: int, k_max: int):
    return f.orbit(p, k_min, k_max)
