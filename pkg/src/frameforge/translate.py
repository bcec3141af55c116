"""Translate side: the final weight, the two unitaries and translates of ``g``.

``U f = f / gamma`` maps L^2_u onto L^2_w with ``w = u gamma^2`` and the Fourier
map ``f -> (f sqrt(w))^`` maps L^2_w onto L^2(R).  Their composite sends
``gamma e(lam t)`` to the translate ``g(x - lam)`` of ``g = (sqrt(w))^``, so the
weighted frame becomes a frame of translates.

On the x side every function is band limited to the support of ``u``, so
sums over an x-lattice with spacing below ``1 / (2 R)`` integrate products
exactly; the only error is truncation of the lattice to a window.  ``g`` decays
like ``1/x`` (``gamma`` jumps), so the window error is estimated a posteriori
from nested windows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateWeight, InvalidArgument
from .functions import Factor, Gamma, LineFunction, Smooth, as_line_function
from .grid import SampledDensity, resolving_rule
from .quadrature import PanelRule
from .report import Report

GAMMA_FLOOR = 1e-12
FOURIER_TOL = 1e-8
MATCH_TOL = 1e-6
TAIL_TOL = 1e-16
_ROW_BLOCK = 64


# ---------------------------------------------------------------- weights

@dataclass(frozen=True, eq=False)
class FinalWeight(SampledDensity):
    """``w = u gamma^2`` keeping both factors for exact square roots."""

    u: SampledDensity | None = None
    gamma: Factor | None = None


def final_weight(u: SampledDensity, gamma: Factor, w0: SampledDensity | None = None) -> FinalWeight:
    """``w(t) = u(t) gamma(t)^2`` on the grid of ``u``.

    Raises
    ------
    DegenerateWeight
        if ``gamma`` is not positive on the grid, or ``w`` exceeds ``w0`` (or
        ``u`` when ``w0`` is not given) at some node.
    """
    nodes = u.grid.nodes
    g = np.asarray(gamma(nodes), dtype=float)
    if not np.all(g > 0):
        raise DegenerateWeight("gamma must be positive on the grid")
    values = u.values * g**2
    cap = (w0 if w0 is not None else u).values
    over = values - cap * (1 + 1e-14)
    if np.any(over > 0):
        i = int(np.argmax(over))
        raise DegenerateWeight(f"w exceeds the cap at t={nodes[i]:.6g} ({values[i]:.6g} > {cap[i]:.6g})")
    uf = u.__call__

    def func(t):
        return uf(t) * np.asarray(gamma(t), dtype=float) ** 2

    return FinalWeight(u.grid, values, func, u.tail * max(1.0, float(np.max(g)) ** 2), u.support,
                       u.scale, u.kinks, "w", {"w0": u.meta.get("w0", "")}, u, gamma)


class _RootWeight(Factor):
    def __init__(self, w: SampledDensity):
        self.w = w
        self.scale = w.scale

    def __call__(self, t):
        w = self.w
        if isinstance(w, FinalWeight) and w.u is not None:
            return np.sqrt(w.u(t)) * np.asarray(w.gamma(t), dtype=float)
        return np.sqrt(w(t))

    def breakpoints(self, lo, hi):
        k = np.asarray(self.w.kinks, dtype=float)
        pts = [k[(k > lo) & (k < hi)]]
        if isinstance(self.w, FinalWeight) and self.w.gamma is not None:
            pts.append(self.w.gamma.breakpoints(lo, hi))
        return np.unique(np.concatenate(pts))


def root_weight(w: SampledDensity) -> Factor:
    """``sqrt(w)`` as a factor whose breakpoints include the jumps of ``gamma``."""
    return _RootWeight(w)


class _Ratio(Factor):
    def __init__(self, s: Factor | None, gamma: Factor):
        self.s, self.gamma = s, gamma
        self.scale = s.scale if s is not None else np.inf

    def __call__(self, t):
        num = self.s(t) if self.s is not None else 1.0
        return num / self.gamma(t)

    def breakpoints(self, lo, hi):
        pts = [self.gamma.breakpoints(lo, hi)]
        if self.s is not None:
            pts.append(self.s.breakpoints(lo, hi))
        return np.unique(np.concatenate(pts))


def weight_unitary(f, gamma: Factor, nodes=None, floor: float = GAMMA_FLOOR) -> LineFunction:
    """``(U f)(t) = f(t) / gamma(t)``, an isometry from L^2_u onto L^2_w.

    Terms whose factor is ``gamma`` itself lose it exactly, so
    ``U(gamma e(lam t)) = e(lam t)``.

    Raises
    ------
    DegenerateWeight
        if ``gamma`` falls below ``floor`` (on ``nodes`` when given).
    """
    lb = gamma.lower_bound() if isinstance(gamma, Gamma) else math.inf
    if nodes is not None:
        lb = min(lb, float(np.min(gamma(nodes))))
    if not lb > floor:
        raise DegenerateWeight(f"gamma lower bound {lb:.3g} is below the floor {floor:.3g}")
    terms = []
    for s, P in as_line_function(f).terms:
        terms.append((None, P) if s is gamma else (_Ratio(s, gamma), P))
    return LineFunction(terms)


# ---------------------------------------------------------------- Fourier map

@dataclass
class FourierImage:
    """``(f sqrt(w))^`` on an x-grid with its Plancherel bookkeeping.

    ``norm`` is the exact L^2(R) norm of the computed transform (the transform
    of the panel interpolant), ``input_norm`` is ``||f||_{L^2_w}`` from an
    independent rule, ``tail`` bounds the mass of ``|f|^2 w`` outside the
    integration range.
    """

    x: np.ndarray
    values: np.ndarray
    norm: float
    input_norm: float
    tail: float
    tolerance: float
    ok: bool = True

    @property
    def plancherel_error(self) -> float:
        return abs(self.norm - self.input_norm)


def _filon_rule(fl: LineFunction, root: Factor, R: float, order: int) -> PanelRule:
    scale = min([root.scale, fl.scale, R])
    bps = np.concatenate([root.breakpoints(-R, R), fl.breakpoints(-R, R)])
    return PanelRule.build(-R, R, bps, scale / 8, order)


def _interpolant_norm(rule: PanelRule, samples, polys, extra: int = 8) -> float:
    """``||sum_a I_a P_a||_{L^2}`` where ``I_a`` interpolates ``samples[a]`` per panel."""
    maxf = max([0.0] + [max(abs(float(P.spectrum_bounds()[0])), abs(float(P.spectrum_bounds()[1])))
                        for P in polys])
    m = max(1, int(math.ceil(2 * float(np.max(rule.halfwidths)) * maxf)) + 1) if maxf > 0 else 1
    n = rule.order + extra
    s, wgl = np.polynomial.legendre.leggauss(n)
    sub = (np.arange(m)[:, None] + 0.5 * (s[None, :] + 1)) * (2.0 / m) - 1.0  # local coords
    sub = sub.ravel()
    wsub = np.tile(wgl / m, m)
    pows = np.vander(sub, rule.order, increasing=True)  # (m n, order)
    c, h = rule.centers, rule.halfwidths
    t = (c[:, None] + h[:, None] * sub[None, :])  # (npan, m n)
    total = np.zeros(t.shape, dtype=complex)
    for v, P in zip(samples, polys):
        coef = np.asarray(v, dtype=complex).reshape(rule.n_panels, rule.order) @ rule._vinv.T
        total += (coef @ pows.T) * P(t.ravel()).reshape(t.shape)
    return float(math.sqrt(np.sum(h[:, None] * wsub[None, :] * np.abs(total) ** 2)))


def fourier_unitary(f, w: SampledDensity, x, order: int = 8) -> FourierImage:
    """``(f sqrt(w))^(x) = int f(t) sqrt(w(t)) exp(-2 pi i x t) dt`` by the Filon rule.

    Panels follow the jumps of ``sqrt(w)`` and ``f``; the oscillation
    ``exp(2 pi i (sigma - x) t)`` of every spectral term is integrated exactly
    against the panel interpolant of the non-oscillatory factor.
    """
    fl = as_line_function(f)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    root = root_weight(w)
    R = w.radius
    values = np.zeros(len(x), dtype=complex)
    if fl.is_zero:
        return FourierImage(x, values, 0.0, 0.0, 0.0, 0.0, True)
    rule = _filon_rule(fl, root, R, order)
    t = rule.nodes
    rv = root(t)
    samples, polys = [], []
    for s, P in fl.terms:
        v = rv * (s(t) if s is not None else 1.0)
        samples.append(v)
        polys.append(P)
        for sigma, coef in P.items():
            values += coef * rule.oscillatory(v, float(sigma) - x)
    norm = _interpolant_norm(rule, samples, polys)
    # independent rule: twice the order, panels resolving the spectrum
    maxf = fl.max_frequency
    width = min(root.scale, fl.scale, R) / 16
    if maxf > 0:
        width = min(width, 1.0 / maxf)
    bps = np.concatenate([root.breakpoints(-R, R), fl.breakpoints(-R, R)])
    ind = PanelRule.build(-R, R, bps, width, 2 * order)
    fi = fl(ind.nodes)
    input_norm = float(math.sqrt(np.sum(ind.weights * w(ind.nodes) * np.abs(fi) ** 2)))
    edge = np.array([-R, R])
    sup_f = float(np.max(np.abs(fl(np.linspace(-R, R, 257)))))
    if np.isfinite(w.tail):
        tail = w.tail * sup_f**2
    else:
        tail = 2 * R * float(np.max(np.abs(fl(edge)) ** 2 * w(edge)))
    tolerance = abs(norm - input_norm) + math.sqrt(tail)
    ok = tail <= TAIL_TOL * max(1.0, input_norm**2)
    return FourierImage(x, values, norm, input_norm, tail, tolerance, ok)


def fourier_sum(x, t, columns) -> np.ndarray:
    """``sum_i exp(-2 pi i x t_i) columns[i, :]`` for every ``x`` (plain quadrature sums).

    Rows of the exponential matrix are generated by multiplication along a
    uniform ``x`` grid and refreshed every ``_ROW_BLOCK`` rows.
    """
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    C = np.asarray(columns, dtype=complex)
    squeeze = C.ndim == 1
    if squeeze:
        C = C[:, None]
    out = np.empty((len(x), C.shape[1]), dtype=complex)
    uniform = len(x) > 2 and np.allclose(np.diff(x), x[1] - x[0], rtol=0, atol=1e-12 * max(1, abs(x).max()))
    z = np.exp(-2j * np.pi * (x[1] - x[0]) * t) if uniform else None
    for i0 in range(0, len(x), _ROW_BLOCK):
        xb = x[i0 : i0 + _ROW_BLOCK]
        if uniform:
            E = np.empty((len(xb), len(t)), dtype=complex)
            E[0] = np.exp(-2j * np.pi * xb[0] * t)
            for r in range(1, len(xb)):
                np.multiply(E[r - 1], z, out=E[r])
        else:
            E = np.exp(-2j * np.pi * np.outer(xb, t))
        out[i0 : i0 + _ROW_BLOCK] = E @ C
    return out[:, 0] if squeeze else out


# ---------------------------------------------------------------- translates

class TranslateFrame:
    """Translates ``g(x - lam)`` and dual images on a windowed x-lattice.

    Parameters
    ----------
    frame : the weighted-side FrameSystem
    window : half-margin ``X`` of the innermost window around the range of Lambda
    dx : lattice spacing (capped below the band-limited sampling spacing)
    levels : number of nested windows ``X, 2X, 4X, ...`` used for the error estimate
    """

    def __init__(self, frame, window: float = 200.0, dx: float = 0.5, levels: int = 3):
        if levels < 2:
            raise InvalidArgument("need at least two nested windows")
        if not window > 0 or not dx > 0:
            raise InvalidArgument("window and dx must be positive")
        self.frame = frame
        u, gamma = frame.u, frame.gamma
        self.u, self.gamma = u, gamma
        self.w = final_weight(u, gamma, frame.result.w0)
        self.R = u.radius
        self.dx = float(min(dx, 0.8 / (2 * self.R)))
        self.points = frame.points
        self.lam = np.array([float(p.lam) for p in self.points])
        self.k = np.array([p.k for p in self.points])
        self.scalars = np.array([p.scalar for p in self.points], dtype=complex)
        lo_lam, hi_lam = float(self.lam.min()), float(self.lam.max())
        self.windows = [window * 2**l for l in range(levels)]
        Xmax = self.windows[-1]
        n = int(math.ceil((hi_lam - lo_lam + 2 * Xmax) / self.dx)) + 1
        self.x = lo_lam - Xmax + self.dx * np.arange(n)
        self.masks = [(self.x >= lo_lam - X - 1e-9) & (self.x <= hi_lam + X + 1e-9) for X in self.windows]
        max_freq = max(float(np.max(np.abs(self.x))) + float(np.max(np.abs(self.lam))), 1.0)
        self.rule = resolving_rule(u, frame.X, max_freq=max_freq)
        t = self.rule.nodes
        self._h = self.rule.weights * np.sqrt(u(t)) * gamma(t)
        cols = np.concatenate([self._h[:, None],
                               self._h[:, None] * np.exp(2j * np.pi * np.outer(t, self.lam))], axis=1)
        TT = fourier_sum(self.x, t, cols)
        self.g = TT[:, 0]
        self.T = TT[:, 1:]
        blocks = [self.T[:, self.k == j] @ self.scalars[self.k == j] for j in range(1, frame.K + 1)]
        self.images = np.stack(blocks, axis=1)  # images of x_1..x_K
        self.dual = self.images @ frame.A  # images of psi_1..psi_K

    @property
    def K(self) -> int:
        return self.frame.K

    def image(self, f) -> np.ndarray:
        """Image of ``f`` in L^2_u under the composite unitary, on the x-lattice."""
        fl = as_line_function(f)
        if fl.is_zero:
            return np.zeros(len(self.x), dtype=complex)
        t = self.rule.nodes
        return fourier_sum(self.x, t, self.rule.weights * np.sqrt(self.u(t)) * fl(t))

    def dual_descriptors(self) -> list[dict]:
        """``g*_n = conj(scalar_n) * image(psi_k)``: scalar and block per point."""
        return [{"lam": str(p.lam), "k": p.k, "scalar": [p.scalar.real, p.scalar.imag]} for p in self.points]

    def inner(self, F, G, level: int = 0) -> complex:
        m = self.masks[level]
        return complex(np.sum(F[m] * np.conj(G[m])) * self.dx)

    def to_json(self) -> dict:
        return {
            "dx": self.dx,
            "windows": self.windows,
            "x_range": [float(self.x[0]), float(self.x[-1])],
            "n_x": int(len(self.x)),
            "n_rule_nodes": int(len(self.rule.nodes)),
            "w": self.w.descriptor(),
            "duals": self.dual_descriptors(),
        }


@dataclass
class TranslateProfile:
    """Translate-side partial-sum errors on nested windows."""

    lam: list
    coefficients: np.ndarray
    errors: np.ndarray  # innermost window
    window_errors: list
    windows: list
    norm_f: float
    tolerance: float
    rate: float = math.nan
    reference: np.ndarray | None = field(default=None, repr=False)

    @property
    def terminal(self) -> float:
        return float(self.errors[-1]) if len(self.errors) else self.norm_f

    @property
    def mismatch(self) -> float:
        if self.reference is None:
            return math.nan
        n = min(len(self.errors), len(self.reference))
        return float(np.max(np.abs(self.errors[:n] - self.reference[:n]))) if n else 0.0

    def rows(self):
        for j, (lam, c, e) in enumerate(zip(self.lam, self.coefficients, self.errors), 1):
            yield j, lam, abs(c), float(e)


def _window_profile(tf: TranslateFrame, fv, level: int, J: int):
    m = tf.masks[level]
    F = fv[m]
    D = tf.dual[m]
    a = (F @ np.conj(D)) * tf.dx  # <f, image(psi_k)>
    c = tf.scalars[:J] * a[tf.k[:J] - 1]
    r = F.astype(complex).copy()
    errs = np.empty(J)
    for j in range(J):
        if c[j] != 0:
            r -= c[j] * tf.T[m, j]
        errs[j] = math.sqrt(float(np.sum(np.abs(r) ** 2)) * tf.dx)
    return c, errs


def verify_translate_expansion(f, tframe: TranslateFrame, J: int | None = None,
                               reference=None) -> TranslateProfile:
    """Ordered expansion ``sum <f, g*_n> g(x - lam_n)`` of ``f`` on the x-lattice.

    ``f`` holds samples on ``tframe.x`` (an array or an object with ``values``).
    Coefficients and errors are computed on every nested window.  The reported
    tolerance is the extrapolated remaining change of the profile, using the
    observed contraction ``rho`` of successive window differences (never
    below the ``2^-1/2`` rate of a ``1/x`` decay).

    ``reference`` (an ExpansionProfile or an array of errors) is stored for the
    comparison ``mismatch``.
    """
    fv = np.asarray(getattr(f, "values", f), dtype=complex)
    if fv.shape != tframe.x.shape:
        raise InvalidArgument("f must be sampled on the translate lattice")
    n = len(tframe.points)
    J = n if J is None else min(max(int(J), 0), n)
    results = [_window_profile(tframe, fv, l, J) for l in range(len(tframe.windows))]
    errs = [e for _, e in results]
    diffs = [float(np.max(np.abs(a - b))) if J else 0.0 for a, b in zip(errs, errs[1:])]
    floor_rate = 2 ** -0.5
    rate = floor_rate
    if len(diffs) >= 2 and diffs[0] > 0:
        rate = max(floor_rate, diffs[1] / diffs[0])
    tol = 0.0 if diffs[0] == 0 else (math.inf if rate >= 1 else diffs[0] / (1 - rate))
    m = tframe.masks[0]
    norm_f = math.sqrt(float(np.sum(np.abs(fv[m]) ** 2)) * tframe.dx)
    ref = getattr(reference, "errors", reference)
    ref = None if ref is None else np.asarray(ref, dtype=float)
    return TranslateProfile([p.lam for p in tframe.points[:J]], results[0][0], errs[0], errs,
                            list(tframe.windows), norm_f, tol, rate, ref)


# ---------------------------------------------------------------- checks

def gaussian_oracle(T: float = 32.0, x=None) -> float:
    """Max error of the Filon transform of ``exp(-pi t^2)`` on [-T, T] against ``exp(-pi x^2)``."""
    from .grid import build_grid, make_w0

    grid = build_grid(T, 1025)
    one = make_w0("one", grid)
    f = Smooth(lambda t: np.exp(-np.pi * np.asarray(t) ** 2), 1.0, "gauss")
    x = np.linspace(-6, 6, 241) if x is None else np.asarray(x, dtype=float)
    img = fourier_unitary(LineFunction.smooth(f), one, x)
    return float(np.max(np.abs(img.values - np.exp(-np.pi * x**2))))


def translate_correspondence(tframe: TranslateFrame, n_lambda: int = 5, n_x: int = 101,
                             seed: int = 0) -> float:
    """Max over sampled ``lam`` and x of ``|F(U(gamma e(lam t))) - g(x - lam)|``.

    The left side is the Filon transform of ``e(lam t) sqrt(w)``; the right
    side is the translate column computed by plain quadrature.
    """
    rng = np.random.default_rng(seed)
    idx = rng.choice(len(tframe.lam), size=min(n_lambda, len(tframe.lam)), replace=False)
    inner = np.nonzero(tframe.masks[0])[0]
    rows = inner[np.linspace(0, len(inner) - 1, n_x).astype(int)]
    err = 0.0
    for j in sorted(idx):
        p = tframe.points[j]
        e = LineFunction.trig(_monomial(p.lam), tframe.gamma)
        img = fourier_unitary(weight_unitary(e, tframe.gamma), tframe.w, tframe.x[rows])
        err = max(err, float(np.max(np.abs(img.values - tframe.T[rows, j]))))
    return err


def _monomial(lam):
    from .trigpoly import TrigPoly

    return TrigPoly.monomial(lam)


def g_growth(tframe: TranslateFrame, n: int = 8) -> list[tuple[float, float]]:
    """``(X, int_{-X}^{X} |g|)`` for geometrically spaced ``X`` inside the lattice."""
    x, g = tframe.x, np.abs(tframe.g)
    Xmax = min(-float(x[0]), float(x[-1]))
    if Xmax <= 0:
        return []
    out = []
    for X in Xmax * 2.0 ** -np.arange(n)[::-1]:
        m = np.abs(x) <= X
        out.append((float(X), float(np.sum(g[m]) * tframe.dx)))
    return out


def plancherel_g(tframe: TranslateFrame) -> tuple[float, float]:
    """``(||g||_{L^2(R)}, (int w)^{1/2})`` for ``g = F(U(1))``."""
    one = LineFunction.smooth(Smooth(lambda t: np.ones(np.shape(t)), np.inf, "one"))
    img = fourier_unitary(one, tframe.w, [0.0])
    return img.norm, img.input_norm


def verify_translate(tframe: TranslateFrame, seed: int = 0, f=None) -> tuple[Report, TranslateProfile]:
    """Checks of the translate side and the pullback of the expansion of ``x_1``."""
    from .frame import expand, random_span_function

    frame = tframe.frame
    rep = Report()
    w0 = frame.result.w0
    rep.add("final_weight_le_w0", float(np.max(tframe.w.values - w0.values)), 0.0, "<=")
    rng = np.random.default_rng(seed)
    worst = 0.0
    t = frame.nodes
    Wr = frame.rule.weights
    for _ in range(5):
        h = random_span_function(frame, rng)
        Uh = weight_unitary(h, tframe.gamma, t)
        nu = math.sqrt(float(np.sum(Wr * frame.u(t) * np.abs(h(t)) ** 2)))
        nw = math.sqrt(float(np.sum(Wr * tframe.w(t) * np.abs(Uh(t)) ** 2)))
        worst = max(worst, abs(nu - nw))
    rep.add("weight_unitary_isometry", worst, 1e-10)
    rep.add("gaussian_fourier_oracle", gaussian_oracle(), FOURIER_TOL)
    gn, wn = plancherel_g(tframe)
    rep.add("plancherel_g", abs(gn - wn), FOURIER_TOL, note=f"||g|| = {gn:.12g}, (int w)^1/2 = {wn:.12g}")
    rep.add("translate_correspondence", translate_correspondence(tframe, seed=seed), FOURIER_TOL)
    x1 = frame.result.x(1) if f is None else f
    ref = expand(x1, frame)
    prof = verify_translate_expansion(tframe.image(x1), tframe, reference=ref)
    rep.add("translate_profile_match", prof.mismatch, MATCH_TOL + prof.tolerance, "<=",
            note=f"window tolerance {prof.tolerance:.4g}, rate {prof.rate:.3f}")
    rep.add("translate_terminal_error", prof.terminal, MATCH_TOL + prof.tolerance + ref.terminal, "<=")
    growth = g_growth(tframe)
    if len(growth) >= 2:
        rep.add("g_l1_growth", growth[-1][1] / growth[0][1], 1.0, ">",
                note="diagnostic: int_{-X}^{X}|g| keeps growing", waived=True)
    return rep, prof
