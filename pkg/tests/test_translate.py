import math
from fractions import Fraction

import numpy as np
import pytest

from frameforge.errors import DegenerateWeight, InvalidArgument
from frameforge.frame import expand, random_span_function
from frameforge.functions import Gamma, LineFunction, Smooth
from frameforge.intervals import PeriodicIntervalSet
from frameforge.translate import (FOURIER_TOL, final_weight, fourier_sum, fourier_unitary, gaussian_oracle,
                                  plancherel_g, translate_correspondence, verify_translate,
                                  verify_translate_expansion, weight_unitary)
from frameforge.trigpoly import TrigPoly


def _const_gamma(c):
    return Gamma([(PeriodicIntervalSet.empty(), c)])


def test_final_weight_constant_gammas(cauchy_u):
    w = final_weight(cauchy_u, Gamma())
    assert np.array_equal(w.values, cauchy_u.values)
    w = final_weight(cauchy_u, _const_gamma(0.5))
    assert np.allclose(w.values, cauchy_u.values / 4, rtol=1e-15)
    t = np.linspace(-5, 5, 11)
    assert np.allclose(w(t), cauchy_u(t) / 4, rtol=1e-15)


def test_final_weight_rejects(cauchy_u):
    with pytest.raises(DegenerateWeight):
        final_weight(cauchy_u, _const_gamma(2.0))
    with pytest.raises(DegenerateWeight):
        final_weight(cauchy_u, Smooth(lambda t: np.zeros(np.shape(t))))


def test_constructed_weight_below_u_and_w0(desk_tframe, desk_result):
    w = desk_tframe.w.values
    assert np.all(w <= desk_result.u.values)
    assert np.all(desk_result.u.values <= desk_result.w0.values)


def test_weight_unitary_identity_and_cancellation(cauchy_u):
    t = np.linspace(-3, 3, 31)
    f = LineFunction.trig(TrigPoly({Fraction(5, 3): 1 - 1j}), Smooth(lambda s: np.exp(-s**2)))
    assert np.allclose(weight_unitary(f, Gamma())(t), f(t))
    gam = Gamma([(PeriodicIntervalSet([(0, Fraction(1, 2))], 4), 0.3)])
    e = LineFunction.trig(TrigPoly.monomial(Fraction(41, 7)), gam)
    Ue = weight_unitary(e, gam)
    assert Ue.terms[0][0] is None
    assert np.array_equal(Ue(t), TrigPoly.monomial(Fraction(41, 7))(t))
    with pytest.raises(DegenerateWeight):
        weight_unitary(e, _const_gamma(1e-13))


def test_weight_unitary_isometry(desk_frame, desk_tframe):
    rng = np.random.default_rng(2)
    t = desk_frame.nodes
    W = desk_frame.rule.weights
    for _ in range(5):
        h = random_span_function(desk_frame, rng)
        Uh = weight_unitary(h, desk_tframe.gamma, t)
        a = math.sqrt(np.sum(W * desk_frame.u(t) * np.abs(h(t)) ** 2))
        b = math.sqrt(np.sum(W * desk_tframe.w(t) * np.abs(Uh(t)) ** 2))
        assert abs(a - b) < 1e-10


def test_gaussian_oracle():
    assert gaussian_oracle() < 1e-8


def test_fourier_of_modulated_gaussian(cauchy_u):
    # (exp(-pi t^2) e(a t))^(x) = exp(-pi (x - a)^2) with w = 1
    from frameforge.grid import build_grid, make_w0

    grid = build_grid(32, 1025)
    one = make_w0("one", grid)
    f = LineFunction.trig(TrigPoly.monomial(Fraction(7, 2)), Smooth(lambda t: np.exp(-np.pi * t**2)))
    x = np.linspace(-2, 9, 45)
    img = fourier_unitary(f, one, x)
    assert np.max(np.abs(img.values - np.exp(-np.pi * (x - 3.5) ** 2))) < 1e-8


def test_fourier_sum_matches_direct():
    rng = np.random.default_rng(0)
    t = rng.uniform(-1, 1, 300)
    c = rng.standard_normal((300, 2)) + 0j
    for x in (np.linspace(-400, 400, 201), np.sort(rng.uniform(-50, 50, 70))):
        direct = np.exp(-2j * np.pi * np.outer(x, t)) @ c
        assert np.max(np.abs(fourier_sum(x, t, c) - direct)) < 1e-10


def test_plancherel_g(desk_tframe):
    gn, wn = plancherel_g(desk_tframe)
    assert abs(gn - wn) < FOURIER_TOL
    # the lattice sum of |g|^2 converges to the same norm from below
    m = desk_tframe.masks[-1]
    lattice = math.sqrt(np.sum(np.abs(desk_tframe.g[m]) ** 2) * desk_tframe.dx)
    assert lattice <= gn + 1e-12 and lattice > 0.9 * gn


def test_translate_correspondence(desk_tframe):
    assert translate_correspondence(desk_tframe, 5, 101, seed=0) < FOURIER_TOL


def test_translate_expansion_of_x1(desk_frame, desk_tframe):
    ref = expand(desk_frame.X[0], desk_frame)
    prof = verify_translate_expansion(desk_tframe.image(desk_frame.X[0]), desk_tframe, reference=ref)
    assert prof.terminal < 1e-6 + prof.tolerance
    assert prof.mismatch <= 1e-6 + prof.tolerance


def test_translate_expansion_zero_and_shape(desk_tframe):
    prof = verify_translate_expansion(np.zeros(len(desk_tframe.x)), desk_tframe)
    assert np.all(prof.errors == 0) and np.all(prof.coefficients == 0)
    with pytest.raises(InvalidArgument):
        verify_translate_expansion(np.zeros(3), desk_tframe)


def test_verify_translate_report(desk_tframe):
    rep, prof = verify_translate(desk_tframe, seed=0)
    assert rep.passed, [(c.name, c.value, c.bound) for c in rep.failures]
    growth = next(c for c in rep.checks if c.name == "g_l1_growth")
    assert growth.waived
