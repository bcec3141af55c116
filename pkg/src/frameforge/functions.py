"""Functions on the line of the form sum_a s_a(t) P_a(t).

Each term pairs a non-oscillatory factor ``s_a`` (smooth, or piecewise constant
with known jump points) with a trigonometric polynomial ``P_a``.  This is the
shape of every object the construction manipulates: targets ``phi_k`` (P = 1),
products ``gamma * P_k(nu t) * Q_k(t)``, duals and partial sums.  Keeping the
factors separate lets quadrature place panel edges at the jumps and treat the
exponentials exactly.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .exact import RationalNodes
from .intervals import PeriodicIntervalSet
from .trigpoly import TrigPoly


def _float_points(t):
    return t.values if isinstance(t, RationalNodes) else np.asarray(t, dtype=float)


class Factor:
    """Non-oscillatory factor: callable with jump points and a length scale."""

    scale: float = np.inf

    def __call__(self, t) -> np.ndarray:
        raise NotImplementedError

    def breakpoints(self, lo: float, hi: float) -> np.ndarray:
        return np.empty(0)


class Smooth(Factor):
    """Closed-form smooth factor."""

    def __init__(self, func: Callable, scale: float = 1.0, name: str = "", kinks: Sequence = ()):
        self.func = func
        self.scale = float(scale)
        self.name = name
        self.kinks = tuple(float(k) for k in kinks)

    def __call__(self, t):
        return self.func(_float_points(t))

    def breakpoints(self, lo, hi):
        k = np.array(self.kinks, dtype=float)
        return k[(k > lo) & (k < hi)]

    def __repr__(self):
        return f"Smooth({self.name or self.func!r})"


class Gamma(Factor):
    """Piecewise constant damping weight.

    ``gamma(t) = prod_k c_k`` over the steps ``k`` with ``t`` outside ``E_k``;
    on ``E_k`` step ``k`` leaves the value unchanged.
    """

    def __init__(self, steps: Sequence[tuple[PeriodicIntervalSet, float]] = ()):
        self.steps = tuple((E, float(c)) for E, c in steps)

    def with_step(self, E: PeriodicIntervalSet, c: float) -> "Gamma":
        return Gamma(self.steps + ((E, c),))

    def prefix(self, k: int) -> "Gamma":
        return Gamma(self.steps[:k])

    def __len__(self):
        return len(self.steps)

    def __call__(self, t):
        if isinstance(t, RationalNodes):
            out = np.ones(len(t))
        else:
            out = np.ones(np.shape(t))
        for E, c in self.steps:
            if c != 1.0:
                out = np.where(E.contains(t), out, out * c)
        return out

    def at_panels(self, centers: np.ndarray) -> np.ndarray:
        """Values on panels that do not straddle any jump (evaluated at centers)."""
        return self(centers)

    def breakpoints(self, lo, hi):
        pts = [E.breakpoints(lo, hi) for E, c in self.steps if c != 1.0]
        return np.unique(np.concatenate(pts)) if pts else np.empty(0)

    def lower_bound(self) -> float:
        return float(np.prod([min(c, 1.0) for _, c in self.steps])) if self.steps else 1.0

    def __repr__(self):
        return f"Gamma({len(self.steps)} steps)"


class LineFunction:
    """Finite sum of (factor, trigonometric polynomial) terms."""

    def __init__(self, terms: Sequence[tuple[Factor | None, TrigPoly]] = ()):
        self.terms = tuple((s, P) for s, P in terms if not P.is_zero)

    @classmethod
    def trig(cls, P: TrigPoly, factor: Factor | None = None) -> "LineFunction":
        return cls([(factor, P)])

    @classmethod
    def smooth(cls, factor: Factor, coef: complex = 1.0) -> "LineFunction":
        return cls([(factor, TrigPoly.constant(coef))])

    @classmethod
    def zero(cls) -> "LineFunction":
        return cls([])

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def __call__(self, t) -> np.ndarray:
        n = len(t) if isinstance(t, RationalNodes) else None
        shape = (n,) if n is not None else np.shape(t)
        out = np.zeros(shape, dtype=complex)
        for s, P in self.terms:
            v = P(t)
            if s is not None:
                v = v * s(t)
            out = out + v
        return out

    def breakpoints(self, lo, hi) -> np.ndarray:
        pts = [s.breakpoints(lo, hi) for s, _ in self.terms if s is not None]
        return np.unique(np.concatenate(pts)) if pts else np.empty(0)

    @property
    def scale(self) -> float:
        sc = [s.scale for s, _ in self.terms if s is not None]
        return min(sc) if sc else np.inf

    @property
    def max_frequency(self) -> float:
        m = 0.0
        for _, P in self.terms:
            if len(P):
                lo, hi = P.spectrum_bounds()
                m = max(m, abs(float(lo)), abs(float(hi)))
        return m

    def __add__(self, other):
        if isinstance(other, LineFunction):
            merged: list = []
            for s, P in self.terms + other.terms:
                for i, (s2, P2) in enumerate(merged):
                    if s2 is s:
                        merged[i] = (s2, P2 + P)
                        break
                else:
                    merged.append((s, P))
            return LineFunction(merged)
        return NotImplemented

    def __neg__(self):
        return LineFunction([(s, -P) for s, P in self.terms])

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, c):
        if np.isscalar(c):
            return LineFunction([(s, P * c) for s, P in self.terms])
        return NotImplemented

    __rmul__ = __mul__

    def __repr__(self):
        return f"LineFunction({len(self.terms)} terms)"


def as_line_function(f) -> LineFunction:
    if isinstance(f, LineFunction):
        return f
    if isinstance(f, TrigPoly):
        return LineFunction.trig(f)
    if isinstance(f, Factor):
        return LineFunction.smooth(f)
    if hasattr(f, "as_factor"):
        return LineFunction.smooth(f.as_factor())
    raise TypeError(f"cannot interpret {type(f).__name__} as a function on the line")


def combine(coefs, functions: Sequence[LineFunction]) -> LineFunction:
    out = LineFunction.zero()
    for c, f in zip(coefs, functions):
        if c != 0:
            out = out + as_line_function(f) * complex(c)
    return out
