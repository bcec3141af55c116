import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from frameforge.basis import FrequencyRule, approximate_by_exponentials, gram_matrix, orthonormal_basis, sigma
from frameforge.errors import CompletenessFailure, InvalidArgument
from frameforge.functions import Gamma, LineFunction, as_line_function
from frameforge.grid import inner_product_u, norm_u
from frameforge.intervals import PeriodicIntervalSet
from frameforge.trigpoly import TrigPoly


def test_sigma_examples():
    assert sigma(1) == 1 + Fraction(1, 17)
    assert sigma(84) == 84 + Fraction(1, 100)
    with pytest.raises(InvalidArgument):
        sigma(0)
    with pytest.raises(InvalidArgument):
        FrequencyRule(5)


@given(st.integers(1, 10**9))
def test_sigma_offsets(n):
    s = sigma(n)
    assert s != n and abs(s - n) < Fraction(1, 10)
    assert sigma(n + 1) - sigma(n) > 1 - Fraction(2, 17)


@pytest.fixture(scope="module")
def phis3(default_grid, cauchy_u):
    return orthonormal_basis(3, default_grid, cauchy_u)


def test_phi1_normalization_closed_form(phis3):
    # ||exp(-t^2/4)||_u^2 = 0.1 pi e^(1/2) erfc(1/sqrt 2) for u = 0.1/(1+t^2)
    mpmath.mp.dps = 30
    n2 = mpmath.mpf("0.1") * mpmath.pi * mpmath.exp(mpmath.mpf(1) / 2) * mpmath.erfc(1 / mpmath.sqrt(2))
    # truncation at |t| = 32 loses exp(-256) of the mass
    assert phis3[0](np.array([0.0]))[0] == pytest.approx(float(1 / mpmath.sqrt(n2)), rel=1e-12)


def test_gram_identity(phis3, cauchy_u):
    G = gram_matrix(phis3, cauchy_u)
    assert np.max(np.abs(G - np.eye(3))) < 1e-10
    ip = inner_product_u(phis3[0], phis3[1], cauchy_u)
    assert abs(ip.value) < 1e-10


def test_rank_and_argument_errors(default_grid, cauchy_u):
    with pytest.raises(InvalidArgument):
        orthonormal_basis(0, default_grid, cauchy_u)


def test_exactly_representable_target(cauchy_u):
    rule = FrequencyRule()
    target = LineFunction.trig(TrigPoly.monomial(rule.sigma(5), 0.7 - 0.2j))
    a = approximate_by_exponentials(target, Gamma(), rule, 0.05, 8, cauchy_u)
    assert a.residual < 1e-10
    assert abs(a.Q.coefficient(rule.sigma(5)) - (0.7 - 0.2j)) < 1e-8


def test_representable_through_gamma(cauchy_u):
    rule = FrequencyRule()
    gam = Gamma([(PeriodicIntervalSet([(0, Fraction(1, 2))], 3), 0.5)])
    target = LineFunction.trig(TrigPoly.monomial(rule.sigma(5)), gam)
    a = approximate_by_exponentials(target, gam, rule, 0.05, 8, cauchy_u)
    assert a.residual < 1e-10


def test_single_term_projection(phis3, cauchy_u):
    rule = FrequencyRule()
    target = phis3[1]
    a = approximate_by_exponentials(target, None, rule, 1e-6, 1, cauchy_u, strict=False, start=1)
    b = TrigPoly.monomial(rule.sigma(1))
    tb = inner_product_u(target, b, cauchy_u).value
    bb = inner_product_u(b, b, cauchy_u).value.real
    resid = as_line_function(target) - LineFunction.trig(b * (tb / bb))
    assert a.n_terms == 1
    assert a.residual == pytest.approx(norm_u(resid, cauchy_u), abs=1e-8)


def test_residual_history(phis3, cauchy_u):
    a = approximate_by_exponentials(phis3[0], None, FrequencyRule(), 1e-9, 64, cauchy_u, strict=False)
    res = [h[1] for h in a.history]
    assert all(b <= a_ for a_, b in zip(res, res[1:]))
    assert [h[0] for h in a.history] == [8, 16, 32, 64]
    for N, r, r_qr, r_ne, cond, method in a.history:
        if cond <= 1e10:
            assert abs(r_qr - r_ne) < 1e-8


def test_completeness_failure_strict(phis3, cauchy_u):
    with pytest.raises(CompletenessFailure) as exc:
        approximate_by_exponentials(phis3[0], None, FrequencyRule(), 1e-9, 8, cauchy_u)
    assert exc.value.to_dict()["error"] == "CompletenessFailure"
