"""Correction polynomials: analytic, small coefficients, close to 1 off a small set.

A bundle holds an analytic integer-spectrum polynomial ``P``, a set ``F`` in
[0, 1] on which ``|P - 1| < eps``, and for every ``l <= deg P`` a split of the
partial sum ``S_l(P) = A_l + B_l`` with ``|A_l| < 2`` on ``F`` and
``||B_l||_{L^2[0,1]} < eps``.

Construction is a convex fit of the constant 1 on [0, 1] minus a few
exception intervals, with the coefficient norm as objective.  ``F`` is then
certified cell by cell with a Lipschitz margin, so the result does not depend
on how the fit was found.  ``verify_correction`` re-checks every clause
independently.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import CorrectionInfeasible, DecompositionFailure, InvalidArgument
from .intervals import PeriodicIntervalSet
from .report import Report
from .trigpoly import TrigPoly

log = logging.getLogger(__name__)

QUANTUM = 2.0**-40  # coefficient lattice; sums and differences stay exact in float
SOLVER_MAX_DEGREE = 256  # dense convex programs beyond this are not attempted
FIT_FRACTION = 0.85  # fit tolerance as a fraction of eps
NORM_FRACTION = 0.9  # coefficient norm must land below this fraction of eps
DECOMP_MARGIN = 0.05
ROUNDING = 1e-12  # absorbs float evaluation error in certified bounds
_MAX_CELLS = 1 << 22


def _qval(q) -> float:
    if q in ("inf", math.inf) or (isinstance(q, float) and math.isinf(q)):
        return math.inf
    q = float(q)
    if not q > 2:
        raise InvalidArgument("q must exceed 2 (or be inf)")
    return q


def quantize(c) -> np.ndarray:
    """Round real and imaginary parts to the dyadic lattice ``2^-40 Z``."""
    c = np.asarray(c, dtype=complex)
    return np.round(c.real / QUANTUM) * QUANTUM + 1j * np.round(c.imag / QUANTUM) * QUANTUM


def jensen_l2_bound(eps: float, delta: float) -> float:
    """Lower bound on ``sum |P^(n)|^2`` for analytic ``P`` with ``|P - 1| < eps`` off measure ``delta``.

    ``1 - P`` has mean 1, so the mean of ``log|1 - P|`` is nonnegative; on ``F``
    it is below ``log eps``, and concavity of ``log`` on the complement gives
    ``1 + sum |P^(n)|^2 >= delta * eps^(-2 (1 - delta) / delta)``.
    """
    if eps >= 1 or delta >= 1:
        return 0.0
    if delta <= 0:
        return math.inf
    expo = math.log(delta) - 2 * (1 - delta) / delta * math.log(eps)
    if expo > 700:
        return math.inf
    return max(math.exp(expo) - 1.0, 0.0)


def min_degree(eps: float, q=math.inf) -> float:
    """Smallest degree compatible with ``||P^||_q < eps`` and ``m(F^c) < eps``.

    For ``q = inf``: ``sum |P^|^2 < D eps^2``.  For finite ``q``:
    ``sum |P^|^2 <= D^(1 - 2/q) ||P^||_q^2`` by Hoelder.
    """
    q = _qval(q)
    if eps > 1:
        return 0
    B = jensen_l2_bound(eps, eps)
    if B <= 0:
        return 1
    x = B / eps**2
    if math.isinf(x):
        return math.inf
    if math.isinf(q):
        return math.floor(x) + 1
    y = x ** (q / (q - 2))
    return math.floor(y) + 1 if y < 2**62 else y


def _cell_grid(P: TrigPoly, eps: float, floor: int = 64) -> int:
    lip = P.lipschitz_bound()
    need = lip / (2 * 0.005 * eps) if lip > 0 else 1
    m = max(floor, 16 * max(P.degree, 1), int(math.ceil(need)))
    return 1 << int(math.ceil(math.log2(m)))


def certified_set(P: TrigPoly, eps: float, M: int | None = None) -> PeriodicIntervalSet:
    """Union of the cells ``[i/M, (i+1)/M]`` on which ``|P - 1| < eps`` is certified.

    A cell is kept when ``|P(c) - 1| + L/(2M) < eps`` at its center ``c``,
    with ``L = 2 pi sum n |P^(n)|``.
    """
    M = M or _cell_grid(P, eps)
    centers = (np.arange(M) + 0.5) / M  # exact dyadic points
    vals = np.abs(P(centers) - 1.0)
    keep = vals + P.lipschitz_bound() / (2 * M) + ROUNDING * (1 + P.coeff_norm(1)) < eps
    ivs = []
    i = 0
    while i < M:
        if keep[i]:
            j = i
            while j + 1 < M and keep[j + 1]:
                j += 1
            ivs.append((Fraction(i, M), Fraction(j + 1, M)))
            i = j + 1
        else:
            i += 1
    return PeriodicIntervalSet(ivs)


def certified_sup(P: TrigPoly, F: PeriodicIntervalSet, shift: complex = 0.0,
                  resolution: float | None = None) -> tuple[float, float]:
    """Grid maximum and rigorous upper bound of ``|P - shift|`` over ``F``.

    Each interval of ``F`` is cut into cells no wider than ``resolution``; the
    bound adds the Lipschitz constant times half a cell width.
    """
    if F.is_empty:
        return 0.0, 0.0
    lip = P.lipschitz_bound()
    total = float(F.measure())
    if resolution is None:
        resolution = 1.0 / (16 * max(P.degree if P.has_integer_spectrum else 1, 1))
        if lip > 0:
            resolution = min(resolution, 2e-3 / lip)
    resolution = max(resolution, total / _MAX_CELLS)
    best, bound = 0.0, 0.0
    pts, halfw = [], []
    for a, b in F.intervals:
        a, b = float(a), float(b)
        n = max(1, int(math.ceil((b - a) / resolution)))
        h = (b - a) / n
        pts.append(a + h * (np.arange(n) + 0.5))
        halfw.append(np.full(n, h / 2))
    t = np.concatenate(pts)
    hw = np.concatenate(halfw)
    vals = np.abs(P(t) - shift) if not P.is_zero else np.full(len(t), abs(shift))
    best = float(vals.max())
    bound = float(np.max(vals + lip * hw)) + ROUNDING * (1 + P.coeff_norm(1))
    return best, bound


def l2_by_sampling(B: TrigPoly) -> float:
    """``||B||_{L^2[0,1]}`` by the equispaced rule, exact for integer spectra of span < M."""
    if B.is_zero:
        return 0.0
    lo, hi = B.spectrum_bounds()
    M = 4 * (int(hi - lo) + 1)
    t = np.arange(M) / M
    return float(np.sqrt(np.mean(np.abs(B(t)) ** 2)))


@dataclass(frozen=True)
class CorrectionBundle:
    """Correction polynomial with its good set and partial-sum decompositions."""

    P: TrigPoly
    F: PeriodicIntervalSet
    eps: float
    q: float
    decompositions: dict = field(default_factory=dict)  # l -> (A_l, B_l)
    meta: dict = field(default_factory=dict)

    @property
    def degree(self) -> int:
        return self.P.degree

    def sup_P(self) -> float:
        """Rigorous upper bound of ``||P||_inf`` on the line."""
        return self.P.sup_norm_estimate(8).upper

    def sup_A(self) -> float:
        """Rigorous upper bound of ``max_l ||A_l||_inf`` on the line."""
        vals = [A.sup_norm_estimate(8).upper for A, _ in self.decompositions.values()]
        return max(vals) if vals else 0.0

    def to_json(self) -> dict:
        return {
            "eps": self.eps,
            "q": "inf" if math.isinf(self.q) else self.q,
            "P": self.P.to_json(),
            "F": self.F.to_json(),
            "decompositions": [
                {"l": int(l), "A": A.to_json(), "B": B.to_json()}
                for l, (A, B) in sorted(self.decompositions.items())
            ],
            "meta": self.meta,
        }

    @classmethod
    def from_json(cls, d) -> "CorrectionBundle":
        dec = {
            int(e["l"]): (TrigPoly.from_json(e["A"]), TrigPoly.from_json(e["B"]))
            for e in d["decompositions"]
        }
        q = math.inf if d["q"] == "inf" else float(d["q"])
        return cls(TrigPoly.from_json(d["P"]), PeriodicIntervalSet.from_json(d["F"]),
                   float(d["eps"]), q, dec, dict(d.get("meta", {})))


# ---------------------------------------------------------------- decomposition

def _samples_in(F: PeriodicIntervalSet, h: float) -> np.ndarray:
    pts = []
    for a, b in F.intervals:
        a, b = float(a), float(b)
        n = max(1, int(math.ceil((b - a) / h)))
        pts.append(a + (b - a) / n * (np.arange(n) + 0.5))
    return np.concatenate(pts) if pts else np.empty(0)


def decompose_partial_sum(P: TrigPoly, F: PeriodicIntervalSet, l: int, eps: float,
                          margin: float = DECOMP_MARGIN, oversample: int = 16):
    """Split ``S_l(P) = A + B`` with ``|A| < 2`` on ``F`` and ``||B||_{L^2[0,1]} < eps``.

    When ``S_l(P)`` is already below 2 on ``F`` (certified) the split is
    ``(S_l(P), 0)``.  Otherwise ``B`` minimizes its coefficient l^2 norm subject
    to ``|S_l(P) - B| <= 2 - margin`` on samples of ``F``, with ``B`` supported
    on frequencies 1..l.  Coefficients are rounded to a dyadic lattice so that
    ``A + B == S_l(P)`` holds exactly.

    Raises
    ------
    DecompositionFailure
        if the certified split needs ``||B|| >= eps``.
    """
    if not (P.is_analytic and P.has_integer_spectrum):
        raise InvalidArgument("decomposition needs an analytic integer-spectrum polynomial")
    if int(l) != l or l < 0:
        raise InvalidArgument("l must be a nonnegative integer")
    l = int(l)
    zero = TrigPoly()
    S = P.prefix_sum_analytic(l)
    if l == 0 or S.is_zero:
        return S, zero
    if F.is_empty or certified_sup(S, F)[1] < 2:
        return S, zero

    import cvxpy as cp

    freqs = np.arange(1, l + 1)
    s_coef = np.array([S.coefficient(n) for n in freqs])
    best = math.inf
    h = 1.0 / (oversample * l)
    for _ in range(4):
        t = _samples_in(F, h)
        E = np.exp(2j * np.pi * np.outer(t, freqs))
        s_vals = E @ s_coef
        b = cp.Variable(l, complex=True)
        prob = cp.Problem(cp.Minimize(cp.norm(b, 2)), [cp.abs(s_vals - E @ b) <= 2 - margin])
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            try:
                prob.solve(solver=cp.CLARABEL)
            except cp.error.SolverError:
                prob.solve()
        if b.value is None:
            raise DecompositionFailure(l, math.inf, eps)
        bq = quantize(b.value)
        B = TrigPoly(zip(freqs.tolist(), bq.tolist()))
        A = S - B
        nb = B.coeff_norm(2)
        best = min(best, nb)
        if nb >= eps:
            raise DecompositionFailure(l, nb, eps)
        if certified_sup(A, F)[1] < 2:
            return A, B
        h /= 4
    raise DecompositionFailure(l, best, eps)


def decompose_all(P: TrigPoly, F: PeriodicIntervalSet, eps: float) -> dict:
    return {l: decompose_partial_sum(P, F, l, eps) for l in range(1, P.degree + 1)}


# ---------------------------------------------------------------- construction

def _exception_mask(t: np.ndarray, J: int, delta: float) -> np.ndarray:
    """True off ``J`` equally spaced exception intervals of total measure ``delta``."""
    cen = (np.arange(J) + 0.5) / J
    d = np.abs(((t[:, None] - cen[None, :]) + 0.5) % 1.0 - 0.5)
    return ~(d < delta / (2 * J)).any(axis=1)


def _fit(D: int, eps_fit: float, q: float, J: int, delta: float, oversample: int = 16):
    """Smallest coefficient norm with ``|P - 1| <= eps_fit`` off the exception set."""
    import cvxpy as cp

    M = oversample * D
    t = np.arange(M) / M
    t = t[_exception_mask(t, J, delta)]
    E = np.exp(2j * np.pi * np.outer(t, np.arange(1, D + 1)))
    a = cp.Variable(D, complex=True)
    obj = cp.norm(a, "inf") if math.isinf(q) else cp.pnorm(cp.abs(a), q)
    prob = cp.Problem(cp.Minimize(obj), [cp.abs(E @ a - 1) <= eps_fit])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        try:
            prob.solve(solver=cp.CLARABEL)
        except cp.error.SolverError:
            return None
    if a.value is None or prob.status not in ("optimal", "optimal_inaccurate"):
        return None
    return quantize(a.value)


def _best_effort(eps: float, q: float, D: int, iters: int = 400) -> dict:
    """Projected-gradient fit at degree ``D`` (FFT based) for an infeasibility report."""
    M = 8 * D
    t = np.arange(M) / M
    delta = NORM_FRACTION * eps
    mask = _exception_mask(t, 1, delta)
    radius = NORM_FRACTION * eps if math.isinf(q) else NORM_FRACTION * eps * D ** (-1.0 / q)

    def ev(a):
        c = np.zeros(M, dtype=complex)
        c[1 : D + 1] = a
        return np.fft.ifft(c) * M

    def proj(a):
        m = np.abs(a)
        return a * np.minimum(1.0, radius / np.maximum(m, 1e-300))

    a = np.zeros(D, dtype=complex)
    y, tk = a.copy(), 1.0
    for _ in range(iters):
        r = ev(y) - 1.0
        r[~mask] = 0.0
        grad = np.fft.fft(r)[1 : D + 1] / M
        an = proj(y - grad)
        tn = (1 + math.sqrt(1 + 4 * tk * tk)) / 2
        y = an + (tk - 1) / tn * (an - a)
        a, tk = an, tn
    P = TrigPoly.analytic(quantize(a))
    err = np.abs(ev(np.array([P.coefficient(n) for n in range(1, D + 1)])) - 1.0)
    good = err < eps
    return {
        "degree": D,
        "coefficient_norm": P.coeff_norm(q),
        "exceptional_measure": float(1.0 - good.mean()),
        "sup_F_P_minus_1": float(err[mask].max()),
    }


def _achieved(P: TrigPoly, F: PeriodicIntervalSet, q: float) -> dict:
    return {
        "degree": P.degree,
        "coefficient_norm": P.coeff_norm(q),
        "exceptional_measure": float(1 - F.measure()),
        "sup_F_P_minus_1": certified_sup(P, F, 1.0)[1],
    }


def _degree_schedule(d0: int, cap: int) -> list[int]:
    out, d = [], max(d0, 1)
    while d < cap:
        out.append(d)
        d *= 2
    out.append(cap)
    return sorted(set(out))


def build_correction(eps: float, q=math.inf, deg_cap: int = 2048, J_choices=(1, 2),
                     delta_fractions=(0.9, 0.75, 0.6)) -> CorrectionBundle:
    """Construct a verified correction polynomial.

    Tiers, first success wins:

    1. ``eps > 1``: ``P = 0`` and ``F = [0, 1]``.
    2. the single term ``(eps/2) e(t)`` with its certified good set.
    3. convex fit over degrees up to ``deg_cap`` (dense programs only up to
       ``SOLVER_MAX_DEGREE``), several exception layouts.

    Every candidate is decomposed and passed through ``verify_correction``.

    Parameters
    ----------
    eps : target in (0, 1] (values above 1 give the zero polynomial)
    q : coefficient norm, a real > 2 or ``inf``
    deg_cap : largest admissible degree

    Raises
    ------
    CorrectionInfeasible
        if the degree bound from ``min_degree`` exceeds ``deg_cap`` or no
        candidate verifies; carries the achieved (norm, m(F^c), sup_F|P-1|).
    """
    q = _qval(q)
    if not eps > 0:
        raise InvalidArgument("eps must be positive")
    if int(deg_cap) != deg_cap or deg_cap < math.ceil(4 / eps**2):
        raise InvalidArgument(f"deg_cap must be an integer >= ceil(4/eps^2) = {math.ceil(4 / eps**2)}")
    deg_cap = int(deg_cap)
    if eps > 1:
        b = CorrectionBundle(TrigPoly(), PeriodicIntervalSet.full(), eps, q, {}, {"tier": "zero"})
        return b

    def finish(P, tier, extra=None):
        F = certified_set(P, eps)
        try:
            dec = decompose_all(P, F, eps)
        except DecompositionFailure as exc:
            log.info("tier %s: %s", tier, exc)
            return None, _achieved(P, F, q)
        bundle = CorrectionBundle(P, F, eps, q, dec, {"tier": tier, **(extra or {})})
        rep = verify_correction(bundle)
        if rep.passed:
            return bundle, None
        log.info("tier %s failed: %s", tier, [c.name for c in rep.failures])
        return None, _achieved(P, F, q)

    attempts = []
    P1 = TrigPoly.monomial(1, quantize([eps / 2])[0])
    bundle, ach = finish(P1, "monomial")
    if bundle is not None:
        return bundle
    attempts.append(ach)

    dmin = min_degree(eps, q)
    if dmin > deg_cap:
        report = _best_effort(eps, q, deg_cap)
        raise CorrectionInfeasible(
            f"eps={eps:g}, q={q:g}: any valid polynomial needs degree >= {dmin:.4g} "
            f"(log-mean bound), above deg_cap={deg_cap}",
            report, float(dmin),
        )
    d0 = max(int(dmin), math.ceil(4 / eps**2))
    for D in _degree_schedule(d0, min(deg_cap, SOLVER_MAX_DEGREE)):
        for J in J_choices:
            for frac in delta_fractions:
                a = _fit(D, FIT_FRACTION * eps, q, J, frac * eps)
                if a is None:
                    continue
                P = TrigPoly.analytic(a)
                if not P.coeff_norm(q) < NORM_FRACTION * eps:
                    attempts.append({"degree": D, "coefficient_norm": P.coeff_norm(q)})
                    continue
                bundle, ach = finish(P, "convex", {"degree": D, "exception_intervals": J,
                                                   "exception_fraction": frac})
                if bundle is not None:
                    return bundle
                attempts.append(ach)
    best = min(attempts, key=lambda d: d.get("coefficient_norm", math.inf))
    raise CorrectionInfeasible(
        f"eps={eps:g}, q={q:g}: no verified polynomial up to degree "
        f"{min(deg_cap, SOLVER_MAX_DEGREE)}", best, float(dmin))


def unit_example() -> CorrectionBundle:
    """The hand-checkable bundle for ``eps = 1``: ``P = e(t)/2``."""
    return build_correction(1.0, 4, deg_cap=4)


# ---------------------------------------------------------------- verification

def verify_correction(bundle: CorrectionBundle, norm_mode=None) -> Report:
    """Check the four clauses of a bundle and its exactness invariants.

    Parameters
    ----------
    norm_mode : ``"linf"``, ``"lq"`` or a number; default is the bundle's own ``q``.
    """
    P, F, eps = bundle.P, bundle.F, bundle.eps
    if norm_mode in (None, "lq"):
        q = bundle.q
    elif norm_mode in ("linf", "inf", math.inf):
        q = math.inf
    else:
        q = float(norm_mode)
    rep = Report()
    ok_shape = P.is_analytic and P.has_integer_spectrum
    rep.add("analytic_integer_spectrum", float(ok_shape), 1.0, "==")
    qs = "inf" if math.isinf(q) else f"{q:g}"
    rep.add(f"coefficient_norm_l{qs}", P.coeff_norm(q), eps, "<")
    mFc = 1 - F.measure()
    rep.add("exceptional_measure", float(mFc), eps, "<", note=f"exact: {mFc}")
    rep.add("measure_complement_identity", float(F.measure() + F.complement().measure()), 1.0, "==")
    _, sup_bound = certified_sup(P, F, 1.0) if not P.is_zero else (1.0, 1.0 if not F.is_empty else 0.0)
    rep.add("sup_F_P_minus_1", sup_bound, eps, "<", note="grid max plus Lipschitz margin")

    deg = P.degree if ok_shape else 0
    missing = [l for l in range(1, deg + 1) if l not in bundle.decompositions]
    rep.add("decompositions_present", float(len(missing)), 0.0, "==")
    worst_A, worst_B, worst_id, worst_par = 0.0, 0.0, 0.0, 0.0
    for l, (A, B) in sorted(bundle.decompositions.items()):
        S = P.prefix_sum_analytic(l)
        worst_id = max(worst_id, 0.0 if (A + B) == S else 1.0)
        if not A.is_zero:
            worst_A = max(worst_A, certified_sup(A, F)[1])
        nb = B.coeff_norm(2)
        worst_B = max(worst_B, nb)
        worst_par = max(worst_par, abs(nb - l2_by_sampling(B)))
    rep.add("partial_sum_identity", worst_id, 0.0, "==", note="A_l + B_l == S_l(P) as coefficient maps")
    rep.add("partial_sum_A_sup_on_F", worst_A, 2.0, "<")
    rep.add("partial_sum_B_l2", worst_B, eps, "<")
    rep.add("B_parseval_vs_quadrature", worst_par, 1e-10, "<")
    if not P.is_zero:
        linf = P.coeff_norm(math.inf)
        rep.add("pigeonhole_degree", (P.coeff_norm(2) / linf) ** 2, deg + 1e-12, "<=")
    return rep
