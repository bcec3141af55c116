import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from frameforge.errors import InvalidArgument
from frameforge.grid import (build_grid, cauchy_cap, cauchy_tail, inner_product_u, make_w0, mu_measure,
                             norm_u, total_mass, weight_u, weighted_rule)
from frameforge.intervals import PeriodicIntervalSet
from frameforge.quadrature import PanelRule
from frameforge.trigpoly import TrigPoly

PI10 = math.pi / 10


@pytest.fixture(scope="module")
def gauss_u(default_grid):
    return weight_u(make_w0("gauss:0.05", default_grid), default_grid)


def test_build_grid_examples():
    g = build_grid(1, 3)
    assert list(g.nodes) == [-1, 0, 1]
    g = build_grid(32, 2**16)
    assert len(g.nodes) == 65536
    assert g.step == pytest.approx(64 / 65535, rel=1e-15)
    assert g.exact.den == 65535 and g.exact.num[0] == -32 * 65535
    with pytest.raises(InvalidArgument):
        build_grid(0, 10)
    with pytest.raises(InvalidArgument):
        build_grid(1, 1)


def test_weight_u_examples(default_grid):
    u1 = weight_u(make_w0("one", default_grid), default_grid)
    assert u1(np.array([0.0]))[0] == pytest.approx(0.1)
    u2 = weight_u(make_w0("const:0.05", default_grid), default_grid)
    assert u2(np.array([0.0]))[0] == pytest.approx(0.05)
    u3 = weight_u(make_w0("inf", default_grid), default_grid)
    assert total_mass(u3).value == pytest.approx(PI10, abs=1e-10)
    with pytest.raises(InvalidArgument):
        make_w0("const:-1", default_grid)
    with pytest.raises(InvalidArgument):
        make_w0("bogus", default_grid)


def test_cauchy_tail_closed_form():
    mpmath.mp.dps = 30
    ref = 2 * mpmath.quad(lambda t: mpmath.mpf(1) / 10 / (1 + t * t), [32, mpmath.inf])
    assert cauchy_tail(32) == pytest.approx(float(ref), rel=1e-13)


def test_u_pointwise_bounds(default_grid, cauchy_u, gauss_u):
    t = default_grid.nodes
    w0 = make_w0("gauss:0.05", default_grid)
    assert np.all(cauchy_u.values <= cauchy_cap(t))
    assert np.all(gauss_u.values <= cauchy_cap(t))
    assert np.all(gauss_u.values <= w0.values)


def test_total_mass_bounded(cauchy_u, gauss_u):
    m = total_mass(cauchy_u)
    assert m.value == pytest.approx(PI10, abs=1e-10)
    assert m.value <= 1
    assert total_mass(gauss_u).value <= 0.05 * math.sqrt(2 * math.pi) + 1e-12


def test_mu_measure_examples(cauchy_u):
    assert mu_measure(PeriodicIntervalSet.empty(), cauchy_u).value == 0
    full = mu_measure(PeriodicIntervalSet.full(), cauchy_u)
    assert full.value + full.tail == pytest.approx(PI10, abs=1e-12)


def test_mu_measure_against_series(cauchy_u):
    # m_u([0, 1/5] + Z) = 0.1 sum_j (atan(j + 1/5) - atan(j))
    E = PeriodicIntervalSet([(0, Fraction(1, 5))])
    mpmath.mp.dps = 30
    ref = mpmath.nsum(lambda j: (mpmath.atan(j + mpmath.mpf(1) / 5) - mpmath.atan(j)) / 10, [-mpmath.inf, mpmath.inf])
    got = mu_measure(E, cauchy_u)
    assert abs(got.value - float(ref)) <= got.tail + 1e-10
    assert got.value <= 0.2


@st.composite
def base_sets(draw):
    den = draw(st.integers(2, 40))
    cuts = sorted(set(draw(st.lists(st.integers(0, den), max_size=8))))
    return PeriodicIntervalSet([(Fraction(a, den), Fraction(b, den)) for a, b in zip(cuts[::2], cuts[1::2])],
                               draw(st.integers(1, 9)))


@settings(max_examples=25)
@given(base_sets())
def test_mufz_property(cauchy_u, E):
    m = mu_measure(E, cauchy_u)
    assert m.value <= float(E.measure()) + m.error + 1e-12


def test_inner_product_unimodular(cauchy_u):
    lam = Fraction(12345, 7)
    e = TrigPoly.monomial(lam)
    ip = inner_product_u(e, e, cauchy_u)
    assert abs(ip.value.imag) < 1e-14
    assert ip.value.real == pytest.approx(total_mass(cauchy_u).value - cauchy_u.tail, abs=1e-10)


def _riemann(f, g, u, R, max_gap):
    h = 1 / (40 * max_gap)
    n = int(math.ceil(2 * R / h))
    t = np.linspace(-R, R, n + 1)
    w = np.full(n + 1, 2 * R / n)
    w[0] = w[-1] = R / n
    return np.sum(w * f(t) * np.conj(g(t)) * u(t))


def test_inner_product_vs_dense_riemann_gap500(cauchy_u):
    e1 = TrigPoly.monomial(Fraction(3, 2))
    e2 = TrigPoly.monomial(Fraction(3, 2) + 500)
    ip = inner_product_u(e1, e2, cauchy_u).value
    ref = _riemann(e1, e2, cauchy_u, 32.0, 500)
    assert abs(ip - ref) < 1e-6


def test_inner_product_random_pairs_large_gaps(gauss_u):
    rng = np.random.default_rng(3)
    R = gauss_u.radius
    for gap in (10, 300, 3000, 10_000):
        f = TrigPoly(zip([Fraction(int(n), 17) for n in rng.integers(0, 170, 4)], rng.standard_normal(4)))
        g = TrigPoly(zip([Fraction(gap) + Fraction(int(n), 13) for n in rng.integers(0, 130, 4)],
                         rng.standard_normal(4) + 1j * rng.standard_normal(4)))
        ip = inner_product_u(f, g, gauss_u).value
        ref = _riemann(f, g, gauss_u, R, gap + 20)
        assert abs(ip - ref) < 1e-6, gap


@settings(max_examples=20)
@given(st.lists(st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False), min_size=1, max_size=6),
       st.integers(-20, 20))
def test_form_positive(cauchy_u, coefs, shift):
    P = TrigPoly.analytic(coefs).shift(shift)
    v = inner_product_u(P, P, cauchy_u).value
    assert v.real >= 0 and abs(v.imag) < 1e-12 * (1 + abs(v))


@settings(max_examples=15)
@given(st.lists(st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False), min_size=1, max_size=8),
       st.integers(-10, 10))
def test_periodic_norm_bound(cauchy_u, coefs, shift):
    P = TrigPoly.analytic(coefs).shift(shift)
    assert norm_u(P, cauchy_u) <= P.l2_period_norm() + 1e-10


def test_filon_rule_matches_closed_form():
    # int_{-1}^{1} t^2 exp(2 pi i w t) dt in closed form
    rule = PanelRule.build(-1, 1, (), 0.25, 8)
    for w in (0.0, 0.3, 7.0, 1234.5):
        got = rule.oscillatory(rule.nodes**2, [w])[0]
        mpmath.mp.dps = 30
        ref = mpmath.quad(lambda t: t**2 * mpmath.expjpi(2 * w * t), [-1, 0, 1], maxdegree=12) if w < 10 else None
        if ref is None:
            a = 2 * math.pi * w
            ref = 2 * math.sin(a) / a + 4 * math.cos(a) / a**2 - 4 * math.sin(a) / a**3
        assert abs(got - complex(ref)) < 1e-13


def test_weighted_rule_respects_kinks(gauss_u):
    rule = weighted_rule(gauss_u)
    for k in gauss_u.kinks:
        assert np.min(np.abs(rule.edges - k)) < 1e-15
