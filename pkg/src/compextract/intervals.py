"""Closed real intervals and the interval comparison metrics.

All metrics compare a ground-truth interval ``T`` against an estimate ``E``.
Point (degenerate) intervals are allowed; precision and recall treat them with
a midpoint-membership convention so every metric is total.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

DEFAULT_SMALL_DENOMINATOR = 0.5


@dataclass(frozen=True, order=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if math.isnan(self.lo) or math.isnan(self.hi):
            raise ValueError("interval bounds cannot be NaN")
        if math.isinf(self.lo) or math.isinf(self.hi):
            raise ValueError("interval bounds must be finite")
        if self.lo > self.hi:
            raise ValueError(f"interval lower bound {self.lo} exceeds upper bound {self.hi}")

    @classmethod
    def point(cls, v: float) -> "Interval":
        return cls(v, v)

    @property
    def is_degenerate(self) -> bool:
        return self.lo == self.hi

    def __contains__(self, x) -> bool:
        if isinstance(x, Interval):
            return self.lo <= x.lo and x.hi <= self.hi
        return self.lo <= x <= self.hi

    def shift(self, c: float) -> "Interval":
        return Interval(self.lo + c, self.hi + c)

    def scale(self, s: float) -> "Interval":
        if s <= 0:
            raise ValueError("scale factor must be positive")
        return Interval(self.lo * s, self.hi * s)

    def __str__(self):
        return f"[{self.lo:g}, {self.hi:g}]"


def length(a: Interval) -> float:
    return a.hi - a.lo


def midpoint(a: Interval) -> float:
    return a.lo + (a.hi - a.lo) / 2


def envelope(*intervals: Interval) -> Interval:
    """Smallest interval containing every argument."""
    if not intervals:
        raise ValueError("envelope of no intervals")
    return Interval(min(i.lo for i in intervals), max(i.hi for i in intervals))


def intersection(t: Interval, e: Interval) -> Optional[Interval]:
    lo = max(t.lo, e.lo)
    hi = min(t.hi, e.hi)
    if lo > hi:
        return None
    return Interval(lo, hi)


def midpoint_abs_err(t: Interval, e: Interval) -> float:
    return abs(midpoint(t) - midpoint(e))


class RelativeError(NamedTuple):
    """Relative midpoint error in percent.

    ``value`` is None when the truth midpoint is zero (the metric is undefined,
    which is not the same as a zero error). ``sensitive`` marks results whose
    truth midpoint is below the small-denominator threshold, where a tiny
    absolute miss becomes a large percentage.
    """

    value: Optional[float]
    sensitive: bool


def midpoint_rel_err(t: Interval, e: Interval,
                     small_denominator: float = DEFAULT_SMALL_DENOMINATOR) -> RelativeError:
    m_t = midpoint(t)
    if m_t == 0:
        return RelativeError(None, True)
    # abundances are nonnegative; abs() only keeps the result nonnegative for
    # synthetic negative intervals
    value = 100.0 * abs(m_t - midpoint(e)) / abs(m_t)
    return RelativeError(value, abs(m_t) < small_denominator)


def _overlap_fraction(base: Interval, other: Interval) -> float:
    """|base ∩ other| / |base|, with the midpoint rule when base is a point."""
    if base.is_degenerate:
        return 1.0 if midpoint(base) in other else 0.0
    common = intersection(base, other)
    if common is None:
        return 0.0
    return length(common) / length(base)


def precision(t: Interval, e: Interval) -> float:
    """Share of the estimate that lies inside the truth."""
    return _overlap_fraction(e, t)


def recall(t: Interval, e: Interval) -> float:
    """Share of the truth covered by the estimate."""
    return _overlap_fraction(t, e)
