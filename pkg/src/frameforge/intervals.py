"""Periodic unions of intervals with exact rational endpoints.

``PeriodicIntervalSet(intervals, nu)`` is the set of real ``t`` with
``frac(nu * t)`` in the union of the closed base intervals, i.e.
``nu^{-1}(F + Z)`` for a base set ``F`` inside [0, 1].
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable

import numpy as np

from .errors import InvalidArgument
from .exact import RationalNodes, as_fraction, fmt_fraction


class PeriodicIntervalSet:
    """Finite union of closed intervals in [0, 1], repeated with period 1/nu."""

    __slots__ = ("intervals", "nu")

    def __init__(self, intervals: Iterable = (), nu: int = 1):
        if isinstance(nu, bool) or int(nu) != nu or nu < 1:
            raise InvalidArgument("scale nu must be a positive integer")
        ivs = sorted((as_fraction(a), as_fraction(b)) for a, b in intervals)
        merged: list[tuple[Fraction, Fraction]] = []
        for a, b in ivs:
            if a > b or a < 0 or b > 1:
                raise InvalidArgument(f"interval [{a}, {b}] not inside [0, 1]")
            if a == b:
                continue
            if merged and a < merged[-1][1]:
                raise InvalidArgument("base intervals overlap")
            if merged and a == merged[-1][1]:
                merged[-1] = (merged[-1][0], b)
            else:
                merged.append((a, b))
        self.intervals = tuple(merged)
        self.nu = int(nu)

    @classmethod
    def full(cls, nu: int = 1) -> "PeriodicIntervalSet":
        return cls([(0, 1)], nu)

    @classmethod
    def empty(cls, nu: int = 1) -> "PeriodicIntervalSet":
        return cls([], nu)

    def __repr__(self):
        ivs = ", ".join(f"[{a}, {b}]" for a, b in self.intervals[:4])
        more = "" if len(self.intervals) <= 4 else f", ... ({len(self.intervals)})"
        return f"PeriodicIntervalSet({ivs}{more}; nu={self.nu})"

    def __eq__(self, other):
        if not isinstance(other, PeriodicIntervalSet):
            return NotImplemented
        return self.intervals == other.intervals and self.nu == other.nu

    def __hash__(self):
        return hash((self.intervals, self.nu))

    @property
    def is_empty(self) -> bool:
        return not self.intervals

    def measure(self) -> Fraction:
        """Lebesgue measure of the base set in [0, 1] (density of the periodic set)."""
        return sum((b - a for a, b in self.intervals), Fraction(0))

    def complement(self) -> "PeriodicIntervalSet":
        """Closure of [0, 1] minus the base set, same scale."""
        out = []
        prev = Fraction(0)
        for a, b in self.intervals:
            if a > prev:
                out.append((prev, a))
            prev = b
        if prev < 1:
            out.append((prev, Fraction(1)))
        return PeriodicIntervalSet(out, self.nu)

    def scaled(self, nu: int) -> "PeriodicIntervalSet":
        return PeriodicIntervalSet(self.intervals, nu)

    def _contains_one(self) -> bool:
        return bool(self.intervals) and self.intervals[-1][1] == 1

    def contains(self, t) -> np.ndarray | bool:
        """Membership test ``frac(nu t)`` in the base set.

        Exact for ints, Fractions and ``RationalNodes``.  Float input is reduced
        in floating point, which is exact away from O(1e-12 / nu) neighbourhoods
        of the endpoints.
        """
        if isinstance(t, (int, Fraction)):
            s = (Fraction(t) * self.nu) % 1
            return self._contains_frac(s)
        if isinstance(t, RationalNodes):
            r = t.residues(self.nu)
            den = t.den
            out = np.zeros(len(t), dtype=bool)
            for a, b in self.intervals:
                lo = r * a.denominator >= a.numerator * den
                hi = r * b.denominator <= b.numerator * den
                out |= np.asarray(lo & hi, dtype=bool)
            if self._contains_one():
                out |= np.asarray(r == 0, dtype=bool)
            return out
        tt = np.asarray(t, dtype=float)
        s = np.mod(self.nu * tt, 1.0)
        out = np.zeros(s.shape, dtype=bool)
        for a, b in self.intervals:
            out |= (s >= float(a)) & (s <= float(b))
        if self._contains_one():
            out |= s == 0.0
        return out

    def _contains_frac(self, s: Fraction) -> bool:
        if s == 0 and self._contains_one():
            return True
        return any(a <= s <= b for a, b in self.intervals)

    def intervals_within(self, lo: float, hi: float) -> list[tuple[float, float]]:
        """Line intervals of the periodic set intersected with [lo, hi] (floats)."""
        if hi <= lo or not self.intervals:
            return []
        nu = self.nu
        out = []
        j0 = math.floor(lo * nu) - 1
        j1 = math.ceil(hi * nu) + 1
        base = [(float(a), float(b)) for a, b in self.intervals]
        for j in range(j0, j1 + 1):
            for a, b in base:
                x0 = (j + a) / nu
                x1 = (j + b) / nu
                x0, x1 = max(x0, lo), min(x1, hi)
                if x1 > x0:
                    if out and abs(out[-1][1] - x0) < 1e-15 * max(1.0, abs(x0)):
                        out[-1] = (out[-1][0], x1)
                    else:
                        out.append((x0, x1))
        return out

    def breakpoints(self, lo: float, hi: float) -> np.ndarray:
        """Interval endpoints of the periodic set inside the open interval (lo, hi)."""
        if not self.intervals:
            return np.empty(0)
        ends = sorted({float(a) for a, _ in self.intervals} | {float(b) for _, b in self.intervals})
        ends = [e for e in ends if e not in (0.0, 1.0)] + (
            [0.0] if self._has_boundary_at_zero() else []
        )
        if not ends:
            return np.empty(0)
        ends = np.array(sorted(set(ends)))
        nu = self.nu
        j = np.arange(math.floor(lo * nu) - 1, math.ceil(hi * nu) + 2)
        pts = ((j[:, None] + ends[None, :]) / nu).ravel()
        pts = pts[(pts > lo) & (pts < hi)]
        return np.unique(pts)

    def _has_boundary_at_zero(self) -> bool:
        # 0 (= 1 mod 1) is a boundary point unless the set wraps smoothly across it
        if not self.intervals:
            return False
        starts_at_zero = self.intervals[0][0] == 0
        ends_at_one = self.intervals[-1][1] == 1
        return starts_at_zero != ends_at_one

    def to_json(self) -> dict:
        return {
            "nu": self.nu,
            "intervals": [[fmt_fraction(a), fmt_fraction(b)] for a, b in self.intervals],
        }

    @classmethod
    def from_json(cls, data) -> "PeriodicIntervalSet":
        return cls([(a, b) for a, b in data["intervals"]], data["nu"])
