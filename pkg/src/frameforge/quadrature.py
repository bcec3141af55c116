"""Composite Gauss-Legendre panels and a Filon-type oscillatory rule on them.

Every panel carries ``order`` Gauss-Legendre nodes.  Plain integrals use the
Gauss weights.  Oscillatory integrals ``int f(t) exp(2 pi i w t) dt`` interpolate
``f`` by a polynomial on each panel and integrate it against the exponential in
closed form, so the cost and accuracy do not depend on ``w``.
"""

from __future__ import annotations

import numpy as np
from numpy.polynomial import legendre

from .errors import InvalidArgument

_SERIES_THETA = 2.0  # below this the moment recurrence loses digits; use Taylor series
_SERIES_TERMS = 40
_BLOCK = 1 << 22


def _monomial_moments(theta: np.ndarray, n: int) -> np.ndarray:
    """Moments int_{-1}^{1} s^j exp(i theta s) ds for j < n, shape theta.shape + (n,)."""
    theta = np.asarray(theta, dtype=float)
    out = np.empty(theta.shape + (n,), dtype=complex)
    small = np.abs(theta) < _SERIES_THETA
    if np.any(small):
        th = theta[small]
        m = np.arange(_SERIES_TERMS)
        # (i theta)^m / m!
        logfact = np.cumsum(np.log(np.maximum(m, 1)))
        powc = (1j ** m)[None, :] * np.exp(
            m[None, :] * np.log(np.abs(th)[:, None] + 1e-300) - logfact[None, :]
        )
        powc[:, 0] = 1.0
        sgn = np.sign(th)[:, None] ** m[None, :]
        powc = powc * sgn
        j = np.arange(n)
        jm = j[:, None] + m[None, :]
        ker = np.where(jm % 2 == 0, 2.0 / (jm + 1), 0.0)  # int s^(j+m)
        out[small] = powc @ ker.T
    big = ~small
    if np.any(big):
        th = theta[big]
        e_p = np.exp(1j * th)
        e_m = np.exp(-1j * th)
        it = 1j * th
        mu = np.empty(th.shape + (n,), dtype=complex)
        mu[..., 0] = 2 * np.sin(th) / th
        for j in range(1, n):
            mu[..., j] = (e_p - (-1) ** j * e_m) / it - (j / it) * mu[..., j - 1]
        out[big] = mu
    return out


class PanelRule:
    """Composite Gauss-Legendre rule on panels with given edges.

    Parameters
    ----------
    edges : increasing array of panel boundaries
    order : Gauss-Legendre nodes per panel
    """

    def __init__(self, edges, order: int = 8):
        edges = np.unique(np.asarray(edges, dtype=float))
        if len(edges) < 2:
            raise InvalidArgument("need at least one panel")
        if order < 2:
            raise InvalidArgument("order must be at least 2")
        self.edges = edges
        self.order = order
        self.centers = 0.5 * (edges[1:] + edges[:-1])
        self.halfwidths = 0.5 * (edges[1:] - edges[:-1])
        x, w = legendre.leggauss(order)
        self._x, self._w = x, w
        self.nodes = (self.centers[:, None] + self.halfwidths[:, None] * x[None, :]).ravel()
        self.weights = (self.halfwidths[:, None] * w[None, :]).ravel()
        # values at Gauss nodes -> monomial coefficients in the local variable s
        self._vinv = np.linalg.inv(np.vander(x, order, increasing=True))
        # values -> Legendre coefficients (exact for degree < order)
        P = legendre.legvander(x, order - 1)
        self._to_leg = (P * w[:, None]).T * ((2 * np.arange(order) + 1) / 2)[:, None]

    @classmethod
    def build(
        cls,
        a: float,
        b: float,
        breakpoints=(),
        max_width: float = np.inf,
        order: int = 8,
    ) -> "PanelRule":
        """Panels on [a, b] split at ``breakpoints`` and refined to ``max_width``."""
        if not b > a:
            raise InvalidArgument("empty integration range")
        bp = np.asarray(breakpoints, dtype=float)
        bp = bp[(bp > a) & (bp < b)]
        cuts = np.unique(np.concatenate([[a, b], bp]))
        if np.isfinite(max_width):
            widths = np.diff(cuts)
            pieces = np.maximum(1, np.ceil(widths / max_width).astype(int))
            if np.any(pieces > 1):
                parts = [
                    np.linspace(cuts[i], cuts[i + 1], pieces[i] + 1)[:-1] for i in range(len(widths))
                ]
                cuts = np.concatenate(parts + [[b]])
        return cls(cuts, order)

    @property
    def n_panels(self) -> int:
        return len(self.centers)

    @property
    def span(self) -> tuple[float, float]:
        return float(self.edges[0]), float(self.edges[-1])

    def integrate(self, values) -> complex | float:
        return np.sum(self.weights * np.asarray(values))

    def error_indicator(self, values) -> float:
        """Size of the two highest Legendre coefficients per panel, summed over panels."""
        v = np.asarray(values).reshape(self.n_panels, self.order)
        leg = v @ self._to_leg.T
        tail = np.abs(leg[:, -1]) + np.abs(leg[:, -2])
        return float(np.sum(2 * self.halfwidths * tail))

    def oscillatory(self, values, freqs) -> np.ndarray:
        """``int f(t) exp(2 pi i w t) dt`` for every ``w`` in ``freqs``.

        ``values`` are samples of the non-oscillatory factor ``f`` at ``self.nodes``.
        """
        v = np.asarray(values, dtype=complex).reshape(self.n_panels, self.order)
        coef = v @ self._vinv.T  # monomial coefficients per panel
        freqs = np.atleast_1d(np.asarray(freqs, dtype=float))
        out = np.empty(len(freqs), dtype=complex)
        npan = self.n_panels
        step = max(1, _BLOCK // (npan * self.order))
        h, c = self.halfwidths, self.centers
        for s in range(0, len(freqs), step):
            w = freqs[s : s + step]
            theta = 2 * np.pi * w[:, None] * h[None, :]
            mom = _monomial_moments(theta, self.order)  # (nw, npan, order)
            local = np.einsum("wpj,pj->wp", mom, coef)
            phase = np.exp(2j * np.pi * w[:, None] * c[None, :])
            out[s : s + step] = (local * phase) @ h
        return out

    def fourier(self, values, x) -> np.ndarray:
        """``int f(t) exp(-2 pi i x t) dt`` on the panel range."""
        return self.oscillatory(values, -np.asarray(x, dtype=float))
