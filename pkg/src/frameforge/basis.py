"""Orthonormal targets and least-squares exponential approximation.

Targets are damped monomials ``t^(k-1) exp(-t^2/4)`` orthonormalized in
``L^2_u``.  Each target is approximated by ``gamma * sum_n d_n exp(2 pi i s(n) t)``
with perturbed integer frequencies ``s(n) = n + 1/(n + offset)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import scipy.linalg

from .errors import CompletenessFailure, InvalidArgument, RankDeficiency
from .functions import Factor, Gamma, LineFunction, Smooth, as_line_function
from .grid import GridSpec, SampledDensity, resolving_rule, weighted_rule
from .quadrature import PanelRule
from .trigpoly import TrigPoly

log = logging.getLogger(__name__)

COND_SWITCH = 1e10
AGREEMENT_TOL = 1e-8


@dataclass(frozen=True)
class FrequencyRule:
    """``s(n) = n + 1/(n + offset)``; the default offset 16 keeps |s(n) - n| <= 1/17."""

    offset: int = 16

    def __post_init__(self):
        if int(self.offset) != self.offset or self.offset < 10:
            raise InvalidArgument("offset must be an integer >= 10 so that |s(n) - n| < 1/10")

    def sigma(self, n: int) -> Fraction:
        if int(n) != n or n < 1:
            raise InvalidArgument("frequency index must be a positive integer")
        return Fraction(int(n)) + Fraction(1, int(n) + self.offset)

    def frequencies(self, N: int) -> list[Fraction]:
        return [self.sigma(n) for n in range(1, N + 1)]

    @property
    def max_offset(self) -> Fraction:
        return Fraction(1, 1 + self.offset)


def sigma(n: int, rule: FrequencyRule | None = None) -> Fraction:
    return (rule or FrequencyRule()).sigma(n)


def orthonormal_basis(K: int, grid: GridSpec, u: SampledDensity, rule: PanelRule | None = None,
                      rank_tol: float = 1e-10) -> list[SampledDensity]:
    """Gram-Schmidt of ``t^(k-1) exp(-t^2/4)`` under the ``u``-weighted inner product.

    Modified Gram-Schmidt runs on the weighted sample vectors of a high-order
    panel rule; the resulting triangular coefficients define each ``phi_k`` in
    closed form.
    """
    if int(K) != K or K < 1:
        raise InvalidArgument("K must be a positive integer")
    rule = rule or weighted_rule(u, order=16)
    t = rule.nodes
    sw = np.sqrt(rule.weights * u(t))
    damp = np.exp(-(t**2) / 4)
    mon = np.stack([t**j * damp for j in range(K)], axis=1) * sw[:, None]
    # coefficient matrix C: phi_k = sum_j C[k, j] t^j exp(-t^2/4)
    C = np.zeros((K, K))
    V = np.zeros_like(mon)
    for k in range(K):
        v = mon[:, k].copy()
        c = np.zeros(K)
        c[k] = 1.0
        n0 = np.linalg.norm(v)
        for _ in range(2):  # re-orthogonalize once
            for j in range(k):
                r = V[:, j] @ v
                v -= r * V[:, j]
                c -= r * C[j]
        nv = np.linalg.norm(v)
        if nv < rank_tol * n0:
            raise RankDeficiency(k + 1, nv / n0)
        V[:, k] = v / nv
        C[k] = c / nv

    out = []
    for k in range(K):
        coeffs = C[k].copy()

        def phi(x, coeffs=coeffs):
            x = np.asarray(x, dtype=float)
            return np.polynomial.polynomial.polyval(x, coeffs) * np.exp(-(x**2) / 4)

        out.append(
            SampledDensity(grid, phi(grid.nodes), phi, 0.0, u.support, 1.0, (), f"phi_{k + 1}",
                           {"monomial_coefficients": coeffs.tolist()})
        )
    return out


def gram_matrix(functions, u: SampledDensity, rule: PanelRule | None = None) -> np.ndarray:
    """Gram matrix by plain quadrature on a resolving rule."""
    fs = [as_line_function(f) for f in functions]
    rule = rule or resolving_rule(u, fs)
    W = rule.weights * u(rule.nodes)
    V = np.stack([f(rule.nodes) for f in fs], axis=1)
    return (V.T * W) @ np.conj(V)


@dataclass
class Approximation:
    """Result of the exponential least-squares fit."""

    Q: TrigPoly
    residual: float
    n_terms: int
    reached: bool
    history: list = field(default_factory=list)  # (N, residual, qr_residual, cond, method)
    coefficients: np.ndarray | None = None

    @property
    def floor(self) -> float:
        return min(h[1] for h in self.history) if self.history else self.residual


def _schedule(N_cap: int, start: int = 8) -> list[int]:
    out, n = [], start
    while n < N_cap:
        out.append(n)
        n *= 2
    out.append(N_cap)
    return sorted(set(x for x in out if x >= 1))


def approximate_by_exponentials(
    target,
    gamma_prev: Factor | None,
    rule: FrequencyRule,
    eta: float,
    N_cap: int,
    u: SampledDensity,
    quad: PanelRule | None = None,
    strict: bool = True,
    start: int = 8,
    ridge: float = 1e-14,
) -> Approximation:
    """Minimize ``|| target - gamma_prev * sum_{n<=N} d_n e(s(n) t) ||_{L^2_u}``.

    ``N`` runs over 8, 16, ... up to ``N_cap``, stopping once the residual drops
    below ``eta``.  Each size is solved by ridge-regularized normal equations
    and by a column-pivoted QR solve; the smaller residual is kept and both are
    recorded.  With ``strict`` a residual that never reaches ``eta`` raises
    ``CompletenessFailure``; otherwise the best fit is returned with
    ``reached=False``.
    """
    if not eta > 0:
        raise InvalidArgument("eta must be positive")
    if N_cap < 1:
        raise InvalidArgument("N_cap must be positive")
    tgt = as_line_function(target)
    gam = gamma_prev if gamma_prev is not None else Gamma()
    freqs_all = rule.frequencies(N_cap)
    if quad is None:
        quad = resolving_rule(u, [tgt, LineFunction.smooth(gam)], max_freq=float(freqs_all[-1]))
    t = quad.nodes
    sw = np.sqrt(quad.weights * u(t))
    y = tgt(t) * sw
    g = gam(t) * sw
    fl = np.array([float(f) for f in freqs_all])
    A_all = np.exp(2j * np.pi * np.outer(t, fl)) * g[:, None]

    history = []
    best = None
    prev_res = np.inf
    for N in _schedule(N_cap, start):
        A = A_all[:, :N]
        G = A.conj().T @ A
        b = A.conj().T @ y
        cond = float(np.linalg.cond(G))
        lam = ridge * float(np.trace(G).real) / N
        try:
            d_ne = scipy.linalg.solve(G + lam * np.eye(N), b, assume_a="pos")
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgError):
            d_ne = np.linalg.lstsq(A, y, rcond=None)[0]
        Qm, Rm, perm = scipy.linalg.qr(A, mode="economic", pivoting=True)
        diag = np.abs(np.diag(Rm))
        keep = diag > diag[0] * 1e-14
        d_qr = np.zeros(N, dtype=complex)
        z = Qm.conj().T @ y
        d_qr[perm[keep]] = scipy.linalg.solve_triangular(Rm[np.ix_(keep, keep)], z[keep])
        r_ne = float(np.linalg.norm(y - A @ d_ne))
        r_qr = float(np.linalg.norm(y - A @ d_qr))
        if abs(r_ne - r_qr) > AGREEMENT_TOL:
            log.info("N=%d: normal-equation and QR residuals differ (%.3e vs %.3e)", N, r_ne, r_qr)
        use_qr = cond > COND_SWITCH or r_qr < r_ne
        d, res = (d_qr, r_qr) if use_qr else (d_ne, r_ne)
        # nested spans: the residual cannot grow; keep the earlier fit if rounding says otherwise
        if res > prev_res:
            res = prev_res
            d = best[0] if best is not None else d
        history.append((N, res, r_qr, r_ne, cond, "qr" if use_qr else "normal"))
        best = (d, N, res) if best is None or res <= best[2] else best
        prev_res = res
        if res < eta:
            break

    d, N, res = best
    Q = TrigPoly(zip(freqs_all[: len(d)], d.tolist()))
    approx = Approximation(Q, res, len(d), res < eta, history, d)
    if strict and not approx.reached:
        raise CompletenessFailure(res, len(d), eta, approx)
    return approx
