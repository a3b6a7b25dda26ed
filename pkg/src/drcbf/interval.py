"""Minimal closed-interval arithmetic used by the generic reachability and
margin-bounding paths.

No outward rounding is performed; enclosures are exact up to the last ulp
of the float operations, which the callers absorb with explicit tolerances.
"""
from __future__ import annotations

import math

TWO_PI = 2.0 * math.pi


class Interval:
    __slots__ = ("lo", "hi")

    def __init__(self, lo: float, hi: float | None = None):
        if hi is None:
            hi = lo
        lo = float(lo)
        hi = float(hi)
        if lo > hi:
            raise ValueError(f"empty interval [{lo}, {hi}]")
        self.lo = lo
        self.hi = hi

    @staticmethod
    def _coerce(other) -> "Interval":
        return other if isinstance(other, Interval) else Interval(other, other)

    def __add__(self, other):
        o = self._coerce(other)
        return Interval(self.lo + o.lo, self.hi + o.hi)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        return Interval(self.lo - o.hi, self.hi - o.lo)

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __neg__(self):
        return Interval(-self.hi, -self.lo)

    def __mul__(self, other):
        if not isinstance(other, Interval):
            c = float(other)
            return Interval(c * self.lo, c * self.hi) if c >= 0 else Interval(c * self.hi, c * self.lo)
        a, b, c, d = self.lo * other.lo, self.lo * other.hi, self.hi * other.lo, self.hi * other.hi
        return Interval(min(a, b, c, d), max(a, b, c, d))

    __rmul__ = __mul__

    def sqr(self) -> "Interval":
        lo, hi = self.lo, self.hi
        if lo >= 0.0:
            return Interval(lo * lo, hi * hi)
        if hi <= 0.0:
            return Interval(hi * hi, lo * lo)
        return Interval(0.0, max(lo * lo, hi * hi))

    def abs(self) -> "Interval":
        if self.lo >= 0.0:
            return Interval(self.lo, self.hi)
        if self.hi <= 0.0:
            return Interval(-self.hi, -self.lo)
        return Interval(0.0, max(-self.lo, self.hi))

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def contains(self, x: float, tol: float = 0.0) -> bool:
        return self.lo - tol <= x <= self.hi + tol

    def hull(self, other) -> "Interval":
        o = self._coerce(other)
        return Interval(min(self.lo, o.lo), max(self.hi, o.hi))

    def __repr__(self) -> str:
        return f"[{self.lo!r}, {self.hi!r}]"


def scaled_range(lo: float, hi: float, delta: float) -> tuple[float, float]:
    """Bounds of ``s * [lo, hi]`` over ``s`` in ``[0, delta]``."""
    return min(0.0, delta * lo), max(0.0, delta * hi)


def cos_range(lo: float, hi: float) -> tuple[float, float]:
    """Exact range of cos on [lo, hi], accounting for interior extrema."""
    if hi - lo >= TWO_PI:
        return -1.0, 1.0
    a, b = math.cos(lo), math.cos(hi)
    rlo, rhi = min(a, b), max(a, b)
    # maxima at 2k*pi, minima at (2k+1)*pi
    if math.ceil(lo / TWO_PI) * TWO_PI <= hi:
        rhi = 1.0
    if math.ceil((lo - math.pi) / TWO_PI) * TWO_PI + math.pi <= hi:
        rlo = -1.0
    return rlo, rhi


def sin_range(lo: float, hi: float) -> tuple[float, float]:
    """Exact range of sin on [lo, hi]."""
    if hi - lo >= TWO_PI:
        return -1.0, 1.0
    a, b = math.sin(lo), math.sin(hi)
    rlo, rhi = min(a, b), max(a, b)
    half = 0.5 * math.pi
    if math.ceil((lo - half) / TWO_PI) * TWO_PI + half <= hi:
        rhi = 1.0
    if math.ceil((lo + half) / TWO_PI) * TWO_PI - half <= hi:
        rlo = -1.0
    return rlo, rhi
