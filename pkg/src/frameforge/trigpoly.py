"""Trigonometric polynomials with exact rational frequencies.

A ``TrigPoly`` is the finite sum ``P(t) = sum_j a_j exp(2 pi i s_j t)`` stored as a
map from ``Fraction`` frequencies to complex coefficients.  Frequencies never go
through floating point until a polynomial is evaluated, so spectra can be
compared, shifted and dilated exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

import numpy as np

from .errors import EmptySpectrum, InvalidArgument
from .exact import RationalNodes, as_fraction, fmt_fraction

_CHUNK = 1 << 21  # complex entries per evaluation block
_SPLIT = 134217729.0  # 2^27 + 1, Veltkamp splitting constant


def _split(a):
    c = _SPLIT * a
    hi = c - (c - a)
    return hi, a - hi


def reduced_phase(t, hi, lo) -> np.ndarray:
    """``frac(s t)`` for ``s = hi + lo`` (double-double frequencies), shape ``t x s``.

    The product ``hi * t`` is formed without rounding error (Dekker), so the
    phase stays accurate to about 1e-16 however large ``s t`` is.
    """
    t = np.asarray(t, dtype=float)[:, None]
    hi = np.asarray(hi, dtype=float)[None, :]
    p = t * hi
    th, tl = _split(t)
    hh, hl = _split(hi)
    e = ((th * hh - p) + th * hl + tl * hh) + tl * hl
    frac = p - np.floor(p)
    return frac + (e + t * np.asarray(lo, dtype=float)[None, :])


def _hi_lo(freqs):
    hi = np.array([float(f) for f in freqs], dtype=float)
    lo = np.array([float(f - Fraction(h)) for f, h in zip(freqs, hi.tolist())], dtype=float)
    return hi, lo


@dataclass(frozen=True)
class SupEstimate:
    """Grid maximum of |P| together with a rigorous upper bound."""

    estimate: float
    upper: float


class TrigPoly:
    """Finite exponential sum with exact frequencies.

    Parameters
    ----------
    terms : mapping or iterable of (frequency, coefficient) pairs
        Repeated frequencies are summed.  Exact zero coefficients are dropped;
        nothing else is pruned.
    """

    __slots__ = ("_terms", "_cache")

    def __init__(self, terms: Mapping | Iterable | None = None):
        acc: dict[Fraction, complex] = {}
        if terms is not None:
            items = terms.items() if isinstance(terms, Mapping) else terms
            for f, c in items:
                f = as_fraction(f)
                acc[f] = acc.get(f, 0j) + complex(c)
        self._terms = {f: c for f, c in acc.items() if c != 0}
        self._cache = None

    # construction helpers
    @classmethod
    def monomial(cls, freq, coef=1.0) -> "TrigPoly":
        return cls({as_fraction(freq): coef})

    @classmethod
    def constant(cls, c=1.0) -> "TrigPoly":
        return cls({Fraction(0): c})

    @classmethod
    def from_coefficients(cls, coeffs, freqs) -> "TrigPoly":
        return cls(zip(freqs, np.asarray(coeffs, dtype=complex).tolist()))

    @classmethod
    def analytic(cls, coeffs, start: int = 1) -> "TrigPoly":
        """Integer-spectrum polynomial with ``coeffs[i]`` at frequency ``start + i``."""
        c = np.asarray(coeffs, dtype=complex)
        return cls(zip(range(start, start + len(c)), c.tolist()))

    # views
    def _arrays(self):
        if self._cache is None:
            freqs = tuple(sorted(self._terms))
            coefs = np.array([self._terms[f] for f in freqs], dtype=complex)
            ffloat, flo = _hi_lo(freqs)
            self._cache = (freqs, coefs, ffloat, flo)
        return self._cache

    def spectrum(self) -> list[Fraction]:
        return list(self._arrays()[0])

    @property
    def coefficients(self) -> np.ndarray:
        return self._arrays()[1].copy()

    @property
    def frequencies_float(self) -> np.ndarray:
        return self._arrays()[2].copy()

    def items(self):
        freqs, coefs = self._arrays()[:2]
        return zip(freqs, coefs.tolist())

    def coefficient(self, freq) -> complex:
        return self._terms.get(as_fraction(freq), 0j)

    def __len__(self):
        return len(self._terms)

    def __bool__(self):
        return bool(self._terms)

    def __eq__(self, other):
        if not isinstance(other, TrigPoly):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        return hash(frozenset(self._terms.items()))

    def __repr__(self):
        if not self._terms:
            return "TrigPoly(0)"
        shown = ", ".join(f"{f}: {c:.4g}" for f, c in list(self.items())[:4])
        more = "" if len(self) <= 4 else f", ... ({len(self)} terms)"
        return f"TrigPoly({{{shown}{more}}})"

    @property
    def is_zero(self) -> bool:
        return not self._terms

    @property
    def is_analytic(self) -> bool:
        return all(f > 0 for f in self._terms)

    @property
    def has_integer_spectrum(self) -> bool:
        return all(f.denominator == 1 for f in self._terms)

    @property
    def degree(self) -> int:
        """Largest integer frequency (integer-spectrum polynomials only); 0 if zero."""
        if not self._terms:
            return 0
        self._require_integer()
        return int(max(self._terms))

    def _require_integer(self):
        if not self.has_integer_spectrum:
            raise InvalidArgument("operation needs an integer spectrum")

    def _require_analytic_integer(self):
        if not (self.is_analytic and self.has_integer_spectrum):
            raise InvalidArgument("operation needs an analytic polynomial with integer spectrum")

    # evaluation
    def __call__(self, t) -> np.ndarray | complex:
        """Evaluate at floats, arrays of floats, or exact ``RationalNodes``."""
        freqs, coefs, ffloat, flo = self._arrays()
        if isinstance(t, RationalNodes):
            out = np.zeros(len(t), dtype=complex)
            for f, c in zip(freqs, coefs):
                out += c * np.exp(2j * np.pi * t.phase(f))
            return out
        scalar = np.ndim(t) == 0
        tt = np.atleast_1d(np.asarray(t, dtype=float)).ravel()
        out = np.zeros(tt.shape, dtype=complex)
        if len(freqs):
            step = max(1, _CHUNK // len(freqs))
            for s in range(0, len(tt), step):
                blk = tt[s : s + step]
                out[s : s + step] = np.exp(2j * np.pi * reduced_phase(blk, ffloat, flo)) @ coefs
        if scalar:
            return complex(out[0])
        return out.reshape(np.shape(t))

    eval = __call__

    def eval_periodic(self, t) -> np.ndarray:
        """Evaluate an integer-spectrum polynomial by exact reduction of n*t modulo 1.

        Accurate for large ``t`` where ``float(n) * t`` loses digits.
        """
        self._require_integer()
        tt = np.asarray(t, dtype=float)
        return self(np.mod(tt, 1.0))

    # algebra
    def __add__(self, other):
        if isinstance(other, TrigPoly):
            out = dict(self._terms)
            for f, c in other._terms.items():
                out[f] = out.get(f, 0j) + c
            return TrigPoly(out)
        if np.isscalar(other):
            return self + TrigPoly.constant(other)
        return NotImplemented

    __radd__ = __add__

    def __neg__(self):
        return TrigPoly({f: -c for f, c in self._terms.items()})

    def __sub__(self, other):
        if isinstance(other, TrigPoly):
            return self + (-other)
        if np.isscalar(other):
            return self + (-other)
        return NotImplemented

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, TrigPoly):
            return self.multiply(other)
        if np.isscalar(other):
            c = complex(other)
            return TrigPoly({f: c * v for f, v in self._terms.items()})
        return NotImplemented

    __rmul__ = __mul__

    def multiply(self, other: "TrigPoly") -> "TrigPoly":
        """Product of exponential sums: convolution of the coefficient maps."""
        out: dict[Fraction, complex] = {}
        for f, a in self._terms.items():
            for g, b in other._terms.items():
                h = f + g
                out[h] = out.get(h, 0j) + a * b
        return TrigPoly(out)

    def conj(self) -> "TrigPoly":
        """Complex conjugate function: frequencies negated, coefficients conjugated."""
        return TrigPoly({-f: c.conjugate() for f, c in self._terms.items()})

    def shift(self, s) -> "TrigPoly":
        """Multiply by exp(2 pi i s t)."""
        s = as_fraction(s)
        return TrigPoly({f + s: c for f, c in self._terms.items()})

    def dilate(self, nu) -> "TrigPoly":
        """``P(nu t)``: every frequency multiplied by ``nu``, coefficients unchanged."""
        if isinstance(nu, bool) or int(nu) != nu or nu <= 0:
            raise InvalidArgument("dilation factor must be a positive integer")
        nu = int(nu)
        return TrigPoly({f * nu: c for f, c in self._terms.items()})

    def restrict(self, lo=None, hi=None) -> "TrigPoly":
        """Keep frequencies in the closed range [lo, hi] (None means unbounded)."""
        lo = None if lo is None else as_fraction(lo)
        hi = None if hi is None else as_fraction(hi)
        return TrigPoly(
            {
                f: c
                for f, c in self._terms.items()
                if (lo is None or f >= lo) and (hi is None or f <= hi)
            }
        )

    def partial_sum_sym(self, r) -> "TrigPoly":
        """Symmetric partial sum: frequencies with |s| <= r."""
        r = as_fraction(r)
        if r < 0:
            raise InvalidArgument("r must be nonnegative")
        return TrigPoly({f: c for f, c in self._terms.items() if abs(f) <= r})

    def prefix_sum_analytic(self, l: int) -> "TrigPoly":
        """Analytic prefix sum: frequencies 1..l."""
        self._require_analytic_integer()
        if l < 0:
            raise InvalidArgument("l must be nonnegative")
        return TrigPoly({f: c for f, c in self._terms.items() if f <= l})

    def prune(self, tol: float) -> "TrigPoly":
        """Drop coefficients with modulus <= tol."""
        return TrigPoly({f: c for f, c in self._terms.items() if abs(c) > tol})

    # norms and spectra
    def coeff_norm(self, q=2) -> float:
        """l^q norm of the coefficient sequence, q in (0, inf]."""
        c = np.abs(self._arrays()[1])
        if q == np.inf or q == "inf":
            return float(c.max()) if len(c) else 0.0
        q = float(q)
        if q <= 0:
            raise InvalidArgument("q must be positive")
        if not len(c):
            return 0.0
        m = c.max()
        if m == 0:
            return 0.0
        return float(m * np.sum((c / m) ** q) ** (1.0 / q))

    def l2_period_norm(self) -> float:
        """L^2([0,1]) norm of an integer-spectrum polynomial via Parseval."""
        self._require_integer()
        return self.coeff_norm(2)

    def lipschitz_bound(self) -> float:
        """Upper bound for sup |P'|: 2 pi sum |s| |a_s|."""
        ffloat, coefs = self._arrays()[2], self._arrays()[1]
        return float(2 * np.pi * np.sum(np.abs(ffloat) * np.abs(coefs)))

    def spectrum_bounds(self) -> tuple[Fraction, Fraction]:
        if not self._terms:
            raise EmptySpectrum("zero polynomial has empty spectrum")
        freqs = self._arrays()[0]
        return freqs[0], freqs[-1]

    def sup_norm_estimate(self, oversample: int = 8, T: float | None = None) -> SupEstimate:
        """Maximum of |P| on a dense grid, with a rigorous upper bound.

        Integer spectra are sampled over one period; other spectra over [-T, T]
        (default T = 32).  The upper bound is the smaller of the coefficient l^1
        norm and, for periodic polynomials, the grid maximum plus a Lipschitz
        margin over half a grid step.
        """
        if oversample < 4:
            raise InvalidArgument("oversample must be at least 4")
        if not self._terms:
            return SupEstimate(0.0, 0.0)
        l1 = self.coeff_norm(1)
        lo, hi = self.spectrum_bounds()
        span = max(float(hi - lo), 1.0)
        if self.has_integer_spectrum:
            m = int(oversample * max(span, 1))
            t = np.arange(m) / m
            vals = np.abs(self(t))
            est = float(vals.max())
            lip = self.lipschitz_bound()
            upper = min(l1, est + lip * 0.5 / m)
            return SupEstimate(est, max(upper, est))
        T = 32.0 if T is None else float(T)
        m = int(min(oversample * span * 2 * T, 1 << 22)) + 1
        t = np.linspace(-T, T, m)
        est = float(np.abs(self(t)).max())
        return SupEstimate(est, max(l1, est))

    # serialization
    def to_json(self) -> list[dict]:
        return [
            {"frequency": fmt_fraction(f), "re": float(c.real), "im": float(c.imag)}
            for f, c in self.items()
        ]

    @classmethod
    def from_json(cls, data) -> "TrigPoly":
        return cls((d["frequency"], complex(d["re"], d["im"])) for d in data)


def exp_matrix(freqs, t) -> np.ndarray:
    """Matrix ``exp(2 pi i s_j t_i)`` with rows indexed by points."""
    if isinstance(t, RationalNodes):
        return np.stack([np.exp(2j * np.pi * t.phase(as_fraction(f))) for f in freqs], axis=1)
    hi, lo = _hi_lo([as_fraction(f) for f in freqs])
    return np.exp(2j * np.pi * reduced_phase(t, hi, lo))


def lq_from_l2(l2: float, n_terms: int, q: float) -> float:
    """Smallest possible l^q norm of ``n_terms`` coefficients with given l^2 norm (q > 2)."""
    if n_terms <= 0:
        return math.inf
    return l2 * n_terms ** (1.0 / q - 0.5)
