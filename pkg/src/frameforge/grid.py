"""Truncated line, weights, the measure m_u and weighted inner products.

The line is truncated to [-T, T].  Weights are carried both as samples on the
uniform grid (for export) and as closed forms (for quadrature), together with a
bound on the mass they put outside the region that is actually integrated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np
from scipy.optimize import brentq
from numpy.polynomial import legendre
from scipy.special import erfc

from .errors import InvalidArgument
from .exact import RationalNodes, as_fraction, fmt_fraction
from .functions import Factor, LineFunction, Smooth, as_line_function
from .intervals import PeriodicIntervalSet
from .quadrature import PanelRule

CAUCHY_SCALE = 0.1  # u(t) <= 0.1 / (1 + t^2)
NEGLIGIBLE = 1e-32  # relative weight level treated as the edge of the support
_TINY = np.finfo(float).tiny  # keeps far-field weights strictly positive


def cauchy_cap(t):
    return CAUCHY_SCALE / (1.0 + np.asarray(t, dtype=float) ** 2)


def cauchy_tail(R: float) -> float:
    """Exact mass of the cap outside [-R, R]."""
    return 2 * CAUCHY_SCALE * (math.pi / 2 - math.atan(R))


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid on [-T, T] with ``n`` nodes; nodes are exact rationals."""

    T: Fraction
    n: int
    rule: str = "gauss-legendre panels / filon"

    @property
    def step(self) -> float:
        return float(2 * self.T / (self.n - 1))

    @property
    def exact(self) -> RationalNodes:
        a, b = self.T.numerator, self.T.denominator
        i = np.arange(self.n, dtype=np.int64)
        return RationalNodes(a * (2 * i - (self.n - 1)), b * (self.n - 1))

    @property
    def nodes(self) -> np.ndarray:
        return self.exact.values

    @property
    def weights(self) -> np.ndarray:
        w = np.full(self.n, self.step)
        w[0] = w[-1] = 0.5 * self.step
        return w

    def to_json(self) -> dict:
        return {"T": fmt_fraction(self.T), "n": self.n, "rule": self.rule}

    @classmethod
    def from_json(cls, d) -> "GridSpec":
        return build_grid(d["T"], d["n"])


def build_grid(T, n: int) -> GridSpec:
    """Uniform grid with ``n`` nodes spanning [-T, T]."""
    T = as_fraction(T) if not isinstance(T, float) else Fraction(str(T))
    if T <= 0:
        raise InvalidArgument("half-width T must be positive")
    if int(n) != n or n < 2:
        raise InvalidArgument("grid needs at least two nodes")
    return GridSpec(T, int(n))


@dataclass(frozen=True, eq=False)
class SampledDensity:
    """Function sampled on a grid, with an optional closed form.

    Attributes
    ----------
    values : samples at ``grid.nodes``
    func : closed form used off the grid (quadrature nodes)
    tail : bound on the mass outside [-support, support] (weights only)
    support : half-width of the region carrying non-negligible mass
    scale : smallest length scale, used to size quadrature panels
    kinks : points where the closed form is only continuous
    """

    grid: GridSpec
    values: np.ndarray
    func: Callable | None = None
    tail: float = 0.0
    support: float | None = None
    scale: float = 1.0
    kinks: tuple = ()
    name: str = ""
    meta: dict = field(default_factory=dict)

    def __call__(self, t):
        if isinstance(t, RationalNodes):
            t = t.values
        if self.func is not None:
            return self.func(np.asarray(t, dtype=float))
        return np.interp(t, self.grid.nodes, self.values)

    @property
    def radius(self) -> float:
        T = float(self.grid.T)
        return T if self.support is None else min(self.support, T)

    def as_factor(self) -> Smooth:
        return Smooth(self.__call__, self.scale, self.name, self.kinks)

    def descriptor(self) -> dict:
        return {
            "name": self.name,
            "grid": self.grid.to_json(),
            "tail": self.tail,
            "support": self.radius,
            "scale": self.scale,
            "kinks": list(self.kinks),
            **self.meta,
        }


def make_w0(spec: str, grid: GridSpec) -> SampledDensity:
    """Base weight from a short spec string.

    ``one`` (w0 = 1), ``inf`` (no cap beyond the Cauchy bound), ``const:c`` and
    ``gauss:s`` (w0 = exp(-t^2 / (2 s^2))).
    """
    kind, _, arg = spec.partition(":")
    kind = kind.strip().lower()
    T = float(grid.T)
    if kind in ("one", "inf"):
        c = 1.0 if kind == "one" else np.inf
        func = (lambda t, c=c: np.full(np.shape(t), c, dtype=float))
        return SampledDensity(grid, func(grid.nodes), func, np.inf, None, np.inf, (), f"w0:{kind}",
                              {"w0": spec})
    if kind == "const":
        c = float(arg)
        if not c > 0:
            raise InvalidArgument("constant weight must be positive")
        func = (lambda t, c=c: np.full(np.shape(t), c, dtype=float))
        return SampledDensity(grid, func(grid.nodes), func, np.inf, None, np.inf, (), f"w0:{spec}",
                              {"w0": spec})
    if kind == "gauss":
        s = float(arg)
        if not s > 0:
            raise InvalidArgument("gaussian width must be positive")
        func = (lambda t, s=s: np.maximum(np.exp(-0.5 * (np.asarray(t, dtype=float) / s) ** 2), _TINY))
        R = s * math.sqrt(2 * math.log(1 / NEGLIGIBLE))
        tail = s * math.sqrt(2 * math.pi) * erfc(R / (s * math.sqrt(2))) + 2 * T * _TINY
        return SampledDensity(grid, func(grid.nodes), func, tail, min(R, T), s, (), f"w0:{spec}",
                              {"w0": spec})
    raise InvalidArgument(f"unknown base weight {spec!r}")


def weight_u(w0: SampledDensity, grid: GridSpec) -> SampledDensity:
    """``u = min(w0, 0.1 / (1 + t^2))`` with support, tail and kink metadata."""
    vals0 = w0(grid.nodes)
    if np.any(~(vals0 > 0)):
        raise InvalidArgument("base weight must be positive on the grid")
    w0f = w0.func if w0.func is not None else w0.__call__

    def u(t):
        t = np.asarray(t, dtype=float)
        return np.minimum(w0f(t), cauchy_cap(t))

    T = float(grid.T)
    R = w0.radius if w0.support is not None else T
    kinks = _crossings(w0f, R)
    tail = min(cauchy_tail(R), w0.tail)
    scale = min(w0.scale, 1.0)
    return SampledDensity(grid, u(grid.nodes), u, tail, R, scale, kinks, "u",
                          {"w0": w0.meta.get("w0", w0.name)})


def _crossings(w0f, R: float) -> tuple:
    """Points in [-R, R] where w0 crosses the Cauchy cap (kinks of u)."""
    t = np.linspace(0, R, 4001)
    d = w0f(t) - cauchy_cap(t)
    out = []
    for i in np.nonzero(np.sign(d[:-1]) * np.sign(d[1:]) < 0)[0]:
        r = brentq(lambda x: float(w0f(np.array([x]))[0] - cauchy_cap(x)), t[i], t[i + 1],
                   xtol=1e-15)
        out += [r, -r]
    return tuple(sorted(out))


@dataclass(frozen=True)
class Measured:
    """Quadrature value, quadrature error estimate, and truncation tail bound."""

    value: float
    error: float
    tail: float = 0.0
    ok: bool = True

    def __float__(self):
        return float(self.value)


def weighted_rule(u: SampledDensity, functions=(), order: int = 8, max_width=None,
                  max_freq: float = 0.0) -> PanelRule:
    """Panels over the support of ``u`` split at every jump and kink.

    With ``max_freq > 0`` panels are also narrow enough for plain Gauss
    quadrature to resolve that frequency.
    """
    R = u.radius
    fs = [as_line_function(f) for f in functions]
    bps = [np.asarray(u.kinks, dtype=float)] + [f.breakpoints(-R, R) for f in fs]
    scale = min([u.scale] + [f.scale for f in fs])
    width = scale / 4 if max_width is None else max_width
    if max_freq > 0:
        width = min(width, 1.0 / max_freq)
    return PanelRule.build(-R, R, np.concatenate(bps), width, order)


def resolving_rule(u: SampledDensity, functions=(), max_freq: float = 0.0, order: int = 16):
    fs = [as_line_function(f) for f in functions]
    mf = max([max_freq] + [f.max_frequency for f in fs])
    return weighted_rule(u, fs, order=order, max_freq=max(mf, 1.0))


def total_mass(u: SampledDensity, rule: PanelRule | None = None) -> Measured:
    rule = rule or weighted_rule(u, order=16)
    val = float(rule.integrate(u(rule.nodes)).real)
    tail = u.tail if np.isfinite(u.tail) else 0.0
    return Measured(val + tail, rule.error_indicator(u(rule.nodes)), tail)


def mu_measure(E: PeriodicIntervalSet, u: SampledDensity, order: int = 12) -> Measured:
    """``m_u(E) = int_E u`` over the support, plus the tail bound as error."""
    if E.is_empty:
        return Measured(0.0, 0.0)
    R = u.radius
    pieces = E.intervals_within(-R, R)
    if not pieces:
        return Measured(0.0, 0.0, u.tail)
    width = u.scale / 4
    edges = []
    kinks = np.asarray(u.kinks, dtype=float)
    for a, b in pieces:
        inner = kinks[(kinks > a) & (kinks < b)]
        cuts = np.unique(np.concatenate([[a, b], inner]))
        for c0, c1 in zip(cuts[:-1], cuts[1:]):
            m = max(1, int(math.ceil((c1 - c0) / width)))
            edges.append(np.linspace(c0, c1, m + 1))
    # integrate panel by panel (pieces are disjoint, so gaps are skipped);
    # a lower-order pass gives the error estimate
    e = np.concatenate([np.column_stack([p[:-1], p[1:]]) for p in edges])
    c = 0.5 * (e[:, 0] + e[:, 1])
    h = 0.5 * (e[:, 1] - e[:, 0])
    totals = []
    for n in (order, order // 2):
        x, w = legendre.leggauss(n)
        nodes = (c[:, None] + h[:, None] * x[None, :]).ravel()
        totals.append(float(np.sum((h[:, None] * w[None, :]).ravel() * u(nodes))))
    tail = u.tail if np.isfinite(u.tail) else 0.0
    return Measured(totals[0], abs(totals[0] - totals[1]), tail)


def inner_product_u(f, g, u: SampledDensity, rule: PanelRule | None = None,
                    tol: float = 1e-8) -> Measured:
    """Weighted sesquilinear form ``int f conj(g) u`` by Filon-type quadrature.

    Both operands are split into (factor, exponential sum) terms; for each pair
    of terms the exponentials are combined into frequency differences and the
    remaining factor ``s_a conj(s_b) u`` is integrated against each difference
    in closed form on every panel.
    """
    f, g = as_line_function(f), as_line_function(g)
    if rule is None:
        rule = weighted_rule(u, [f, g])
    nodes = rule.nodes
    wu = u(nodes)
    total = 0j
    err = 0.0
    sup_f = sup_g = 0.0
    for sa, Pa in f.terms:
        va = sa(nodes) if sa is not None else 1.0
        sup_f += Pa.coeff_norm(1) * float(np.max(np.abs(va)))
    for sb, Pb in g.terms:
        vb = sb(nodes) if sb is not None else 1.0
        sup_g += Pb.coeff_norm(1) * float(np.max(np.abs(vb)))
    for sa, Pa in f.terms:
        va = sa(nodes) if sa is not None else np.ones_like(nodes)
        fa, ca = Pa.frequencies_float, Pa.coefficients
        for sb, Pb in g.terms:
            vb = sb(nodes) if sb is not None else np.ones_like(nodes)
            fb, cb = Pb.frequencies_float, Pb.coefficients
            smooth = va * np.conj(vb) * wu
            diff = (fa[:, None] - fb[None, :]).ravel()
            coef = (ca[:, None] * np.conj(cb)[None, :]).ravel()
            uniq, inv = np.unique(diff, return_inverse=True)
            vals = rule.oscillatory(smooth, uniq)
            total += np.sum(coef * vals[inv])
            err += rule.error_indicator(smooth) * float(np.sum(np.abs(coef)))
    tail = u.tail if np.isfinite(u.tail) else 0.0
    return Measured(complex(total), err, tail * sup_f * sup_g, err <= tol)


def norm_u(f, u: SampledDensity, rule: PanelRule | None = None) -> float:
    """L^2_u norm by plain Gauss quadrature on a frequency-resolving rule."""
    f = as_line_function(f)
    rule = rule or resolving_rule(u, [f])
    v = f(rule.nodes)
    return float(np.sqrt(np.sum(rule.weights * u(rule.nodes) * np.abs(v) ** 2)))
