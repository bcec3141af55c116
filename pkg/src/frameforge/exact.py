"""Exact rational helpers: parsing, formatting and reduced phases on rational nodes."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational

import numpy as np

from .errors import InvalidArgument

_INT64_SAFE = 3_000_000_000  # moduli below this keep (a mod Q)*(b mod Q) inside int64


def as_fraction(x) -> Fraction:
    """Convert ints, Fractions, decimal strings and "p/q" strings to Fraction.

    Floats are accepted and converted exactly (binary value), which is rarely what
    a caller wants for frequencies; pass strings or Fractions instead.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, Rational):
        return Fraction(x.numerator, x.denominator)
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except ValueError as exc:
            raise InvalidArgument(f"not a rational number: {x!r}") from exc
    if isinstance(x, (float, np.floating)):
        if not np.isfinite(x):
            raise InvalidArgument(f"non-finite value {x!r}")
        return Fraction(float(x))
    raise InvalidArgument(f"cannot interpret {x!r} as a rational number")


def fmt_fraction(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def frac_part(x: Fraction) -> Fraction:
    return x - (x.numerator // x.denominator)


@dataclass(frozen=True)
class RationalNodes:
    """Points t_i = num_i / den held exactly.

    Used for grid nodes so that membership in periodic sets and the phases
    lambda * t_i can be reduced modulo 1 without floating point drift.
    """

    num: np.ndarray
    den: int

    def __post_init__(self):
        if self.den <= 0:
            raise InvalidArgument("denominator must be positive")

    def __len__(self):
        return len(self.num)

    @property
    def values(self) -> np.ndarray:
        return np.asarray(self.num, dtype=float) / self.den

    def __getitem__(self, idx) -> "RationalNodes":
        return RationalNodes(np.atleast_1d(self.num[idx]), self.den)

    def phase(self, lam: Fraction) -> np.ndarray:
        """frac(lam * t_i) as floats in [0, 1), computed exactly then rounded."""
        p, q = lam.numerator, lam.denominator
        modulus = q * self.den
        if modulus < _INT64_SAFE:
            num = np.asarray(self.num, dtype=np.int64)
            r = ((p % modulus) * (num % modulus)) % modulus
            return r.astype(float) / modulus
        r = [(p * int(n)) % modulus for n in self.num]
        return np.array([Fraction(v, modulus) for v in r], dtype=float)

    def residues(self, nu: int) -> np.ndarray:
        """Integers r_i with frac(nu * t_i) = r_i / den."""
        if self.den < _INT64_SAFE:
            num = np.asarray(self.num, dtype=np.int64)
            return ((nu % self.den) * (num % self.den)) % self.den
        return np.array([(nu * int(n)) % self.den for n in self.num], dtype=object)
