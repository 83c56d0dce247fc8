"""Evaluable C^2 vector fields on [0,1] with exact first and second derivatives.

Fields are immutable description trees.  ``jet(x)`` returns (X, DX, D2X) as a
:class:`Jet2`; every rule is analytic, no finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConstructionError
from .jets import Jet2
from .profiles import bump_jet, ramp_sharp_flat_jet, smooth_step_jet


class VectorField:
    """Base class; concrete fields implement ``jet`` and ``interior_zeros``."""

    def jet(self, x) -> Jet2:
        raise NotImplementedError

    def __call__(self, x, order: int = 0):
        j = self.jet(np.asarray(x, dtype=float))
        out = (j.f, j.d1, j.d2)[order]
        return float(out) if np.isscalar(x) or np.ndim(x) == 0 else out

    def interior_zeros(self) -> tuple[float, ...]:
        return ()

    def key(self):
        raise NotImplementedError

    def positive_on_interior(self, grid_n: int = 1025) -> bool:
        x = np.linspace(0.0, 1.0, grid_n)[1:-1]
        return bool(np.all(self.jet(x).f > 0.0))

    def __eq__(self, other):
        return isinstance(other, VectorField) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())


@dataclass(frozen=True, eq=False)
class Logistic(VectorField):
    """lam * x * (1 - x)."""

    lam: float

    def __post_init__(self):
        if self.lam == 0.0:
            raise ConstructionError("logistic field needs a nonzero rate")

    def jet(self, x):
        j = Jet2.variable(x)
        return self.lam * j * (1.0 - j)

    def key(self):
        return ("logistic", self.lam)


@dataclass(frozen=True, eq=False)
class PolyFlat(VectorField):
    """c * x^2 * (1 - x)^2: parabolic (quadratic tangency) at both endpoints."""

    c: float

    def __post_init__(self):
        if self.c == 0.0:
            raise ConstructionError("polyflat field needs a nonzero coefficient")

    def jet(self, x):
        j = Jet2.variable(x)
        return self.c * j * j * (1.0 - j) * (1.0 - j)

    def key(self):
        return ("polyflat", self.c)


@dataclass(frozen=True, eq=False)
class Plateau(VectorField):
    """Smooth field, flat at 0 and 1, exactly constant ``nu`` on [1/5, 4/5].

    The transition pieces are nu * exp(1 - 1/s(5x)) with ``s`` a smooth ramp
    that has unit slope at 0 and is flat at 1, so the constant piece is joined
    to all orders while the endpoint tangency stays singly exponential.
    """

    nu: float

    def __post_init__(self):
        if self.nu <= 0.0:
            raise ConstructionError("plateau speed must be positive")

    def _edge(self, u) -> Jet2:
        # u in [0,1] is the rescaled coordinate along the transition
        s = ramp_sharp_flat_jet(u)
        tiny = s.f <= 1e-12
        ss = s.where(~tiny, Jet2.constant(np.full_like(s.f, 0.5)))
        val = self.nu * (1.0 - 1.0 / ss).exp()
        return val.where(~tiny, Jet2.constant(np.zeros_like(s.f)))

    def jet(self, x):
        x = np.asarray(x, dtype=float)
        left = self._edge(5.0 * x)
        left = Jet2(left.f, 5.0 * left.d1, 25.0 * left.d2)
        right = self._edge(5.0 * (1.0 - x))
        right = Jet2(right.f, -5.0 * right.d1, 25.0 * right.d2)
        flat = Jet2.constant(np.full_like(x, self.nu))
        return flat.where((x >= 0.2) & (x <= 0.8), left.where(x < 0.2, right))

    def key(self):
        return ("plateau", self.nu)


@dataclass(frozen=True, eq=False)
class PlateauDip(VectorField):
    """Plateau field with a smooth quadratic-order zero at 1/2.

    Coincides with Plateau(nu) outside [2/5, 3/5]; inside it equals
    nu * (1 - chi * (1 - ((x-1/2)/r)^2)) with chi a smooth cutoff that is
    exactly 1 on [0.45, 0.55].
    """

    nu: float
    radius: float = 0.05

    def __post_init__(self):
        if not 0.0 < self.radius <= 0.05:
            raise ConstructionError("dip radius must lie in (0, 0.05]")

    def _chi(self, x) -> Jet2:
        lo = smooth_step_jet(20.0 * (x - 0.4))
        lo = Jet2(lo.f, 20.0 * lo.d1, 400.0 * lo.d2)
        hi = smooth_step_jet(20.0 * (0.6 - x))
        hi = Jet2(hi.f, -20.0 * hi.d1, 400.0 * hi.d2)
        return lo * hi

    def jet(self, x):
        x = np.asarray(x, dtype=float)
        base = Plateau(self.nu).jet(x)
        j = Jet2.variable(x)
        q = ((j - 0.5) / self.radius) * ((j - 0.5) / self.radius)
        dip = self.nu * (1.0 - self._chi(x) * (1.0 - q))
        return dip.where((x > 0.4) & (x < 0.6), base)

    def interior_zeros(self):
        return (0.5,)

    def key(self):
        return ("plateau_dip", self.nu, self.radius)


@dataclass(frozen=True, eq=False)
class Blend(VectorField):
    """(1 - s) * first + s * second."""

    first: VectorField
    second: VectorField
    s: float

    def jet(self, x):
        return (1.0 - self.s) * self.first.jet(x) + self.s * self.second.jet(x)

    def interior_zeros(self):
        if self.s >= 1.0:
            return self.second.interior_zeros()
        if self.s <= 0.0:
            return self.first.interior_zeros()
        # a strict blend vanishes only where both parts do
        return tuple(z for z in self.first.interior_zeros()
                     if z in self.second.interior_zeros())

    def key(self):
        return ("blend", self.first.key(), self.second.key(), self.s)


@dataclass(frozen=True, eq=False)
class BumpField(VectorField):
    """eps * mollifier((x - a)/(b - a)): supported on (a, b), flat at a and b."""

    a: float
    b: float
    eps: float

    def __post_init__(self):
        if not 0.0 <= self.a < self.b <= 1.0:
            raise ConstructionError("bump field support must be a subinterval of [0,1]")

    def jet(self, x):
        x = np.asarray(x, dtype=float)
        w = self.b - self.a
        u = (x - self.a) / w
        j = bump_jet(u)
        return Jet2(self.eps * j.f, self.eps * j.d1 / w, self.eps * j.d2 / w / w)

    def interior_zeros(self):
        # vanishes on whole subintervals; report the support edges
        return tuple(p for p in (self.a, self.b) if 0.0 < p < 1.0)

    def key(self):
        return ("bumpfield", self.a, self.b, self.eps)


@dataclass(frozen=True, eq=False)
class Scale(VectorField):
    """lam * field."""

    field: VectorField
    lam: float

    def __post_init__(self):
        if self.lam == 0.0:
            raise ConstructionError("scaling a field by zero is not allowed")

    def jet(self, x):
        return self.lam * self.field.jet(x)

    def interior_zeros(self):
        return self.field.interior_zeros()

    def key(self):
        return ("scale", self.field.key(), self.lam)


@dataclass(frozen=True, eq=False)
class Pushforward(VectorField):
    """(Dh * X) o h^{-1} for a diffeomorphism h of [0,1]."""

    h: object  # Diffeo; duck-typed to avoid a circular import
    field: VectorField

    def jet(self, y):
        y = np.asarray(y, dtype=float)
        x = self.h.invert(y)
        xf, xd1, xd2 = self.field.jet(x).as_tuple()
        _, dh, nl = self.h.jet(x)
        val = dh * xf
        d1 = nl * xf + xd1
        d3h = getattr(self.h, "third_log_deriv", None)
        if d3h is None:
            d2 = np.full_like(val, np.nan)
        else:
            # D(nl) = D(D2h/Dh) evaluated at x
            dnl = d3h(x)
            d2 = (dnl * xf + nl * xd1 + xd2) / dh
        return Jet2(val, d1, d2)

    def interior_zeros(self):
        return tuple(float(self.h(z)) for z in self.field.interior_zeros())

    def key(self):
        return ("pushforward", self.h.key(), self.field.key())


@dataclass(frozen=True, eq=False)
class MirrorField(VectorField):
    """Pushforward of ``field`` by the reflection x -> 1-x: -X(1-x)."""

    field: VectorField

    def jet(self, x):
        x = np.asarray(x, dtype=float)
        inner = self.field.jet(1.0 - x)
        return Jet2(-inner.f, inner.d1, -inner.d2)

    def interior_zeros(self):
        return tuple(sorted(1.0 - z for z in self.field.interior_zeros()))

    def key(self):
        return ("mirrorfield", self.field.key())


@dataclass(frozen=True, eq=False)
class Restricted(VectorField):
    """Field induced on [0,1] by affinely rescaling ``field`` from [a, b]."""

    field: VectorField
    a: float
    b: float

    def jet(self, u):
        u = np.asarray(u, dtype=float)
        w = self.b - self.a
        inner = self.field.jet(self.a + w * u)
        return Jet2(inner.f / w, inner.d1, inner.d2 * w)

    def interior_zeros(self):
        return tuple((z - self.a) / (self.b - self.a)
                     for z in self.field.interior_zeros()
                     if self.a < z < self.b)

    def key(self):
        return ("restricted", self.field.key(), self.a, self.b)
