"""Closed subintervals of [0,1]."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ConstructionError


@dataclass(frozen=True)
class Interval:
    a: float
    b: float

    def __post_init__(self):
        if not (0.0 <= self.a <= self.b <= 1.0):
            raise ConstructionError(f"invalid interval [{self.a}, {self.b}]")

    @property
    def length(self) -> float:
        return self.b - self.a

    def contains(self, x) -> bool:
        return self.a <= x <= self.b

    def as_tuple(self):
        return (self.a, self.b)

    @staticmethod
    def of(a, b) -> "Interval":
        return Interval(float(min(a, b)), float(max(a, b)))


UNIT = Interval(0.0, 1.0)
