import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from frameforge.correction import (CorrectionBundle, build_correction, certified_set, certified_sup,
                                   decompose_partial_sum, jensen_l2_bound, l2_by_sampling, min_degree,
                                   quantize, unit_example, verify_correction)
from frameforge.errors import CorrectionInfeasible, InvalidArgument
from frameforge.intervals import PeriodicIntervalSet
from frameforge.trigpoly import TrigPoly


def test_degenerate_zero_bundle():
    b = build_correction(1.5, 4, deg_cap=2)
    assert b.P.is_zero and b.F == PeriodicIntervalSet.full()
    assert verify_correction(b).passed


def test_unit_example_analytic():
    b = unit_example()
    assert b.P == TrigPoly({1: 0.5})
    # |e^{i theta}/2 - 1| < 1 iff cos(theta) > 1/4 / (1) ... i.e. 5/4 - cos(theta) < 1
    # here cos(2 pi t) > 1/4, measure acos(1/4)/pi
    exact = math.acos(0.25) / math.pi
    assert float(b.F.measure()) <= exact
    assert float(b.F.measure()) > exact - 0.01
    assert float(1 - b.F.measure()) < 1
    t = np.linspace(0, 1, 20001)
    inside = b.F.contains(t)
    assert np.all(np.abs(b.P(t[inside]) - 1) < 1)
    A, B = b.decompositions[1]
    assert A == b.P and B.is_zero
    rep = verify_correction(b)
    assert rep.passed, [c.name for c in rep.failures]


def test_boundary_coefficient_fails_strict():
    b = unit_example()
    bad = CorrectionBundle(TrigPoly({1: 1.0}), b.F, 1.0, 4, {1: (TrigPoly({1: 1.0}), TrigPoly())})
    rep = verify_correction(bad)
    names = {c.name for c in rep.failures}
    assert "coefficient_norm_l4" in names


def test_decompose_first_branch_and_zero():
    P = TrigPoly({1: 0.5, 2: 0.25})
    F = PeriodicIntervalSet.full()
    A, B = decompose_partial_sum(P, F, 2, 0.5)
    assert A == P and B.is_zero
    A, B = decompose_partial_sum(P, F, 0, 0.5)
    assert A.is_zero and B.is_zero
    with pytest.raises(InvalidArgument):
        decompose_partial_sum(TrigPoly({0: 1}), F, 1, 0.5)


def test_decompose_spike():
    # S = 3 at t = 0 (Dirichlet-like spike); F a window around the spike
    P = TrigPoly({1: 1.0, 2: 1.0, 3: 1.0})
    F = PeriodicIntervalSet([(0, Fraction(1, 16)), (Fraction(15, 16), 1)])
    A, B = decompose_partial_sum(P, F, 3, 2.0)
    assert (A + B) == P.prefix_sum_analytic(3)
    assert certified_sup(A, F)[1] < 2
    # the spike of height 3 at t = 0 must lose at least one unit
    assert abs(B(0.0)) >= 1
    assert B.coeff_norm(2) < 2.0
    assert abs(B.coeff_norm(2) - l2_by_sampling(B)) < 1e-10


@settings(max_examples=25)
@given(st.lists(st.complex_numbers(max_magnitude=0.2, allow_nan=False, allow_infinity=False), min_size=1, max_size=12))
def test_quantized_identity_and_parseval(coefs):
    P = TrigPoly.analytic(quantize(coefs))
    l = len(coefs)
    S = P.prefix_sum_analytic(l // 2 + 1)
    B = TrigPoly.analytic(quantize(np.asarray(coefs) / 3))
    A = S - B
    assert A + B == S
    assert abs(B.coeff_norm(2) - l2_by_sampling(B)) < 1e-10


def test_certified_set_is_sound():
    P = TrigPoly.analytic(quantize([0.3, 0.2, 0.1]))
    F = certified_set(P, 0.9)
    t = np.linspace(0, 1, 50001)
    assert np.all(np.abs(P(t[F.contains(t)]) - 1) < 0.9)
    assert F.measure() + F.complement().measure() == 1


def test_jensen_bound_and_min_degree():
    assert jensen_l2_bound(1.0, 0.5) == 0
    # closed form delta eps^(-2(1-delta)/delta) - 1
    assert jensen_l2_bound(0.5, 0.5) == pytest.approx(0.5 * 0.5 ** -2 - 1)
    assert jensen_l2_bound(1e-4, 1e-4) == math.inf
    assert min_degree(1.5) == 0
    d = min_degree(0.3, 4)
    B = 0.3 * 0.3 ** (-2 * 0.7 / 0.3) - 1
    assert d == math.floor((B / 0.09) ** 2) + 1
    assert min_degree(0.01) == math.inf


def test_eps03_q4_reports_infeasible():
    with pytest.raises(CorrectionInfeasible) as exc:
        build_correction(0.3, 4, 2048)
    assert exc.value.to_dict()["min_degree"] > 2048


def test_deg_cap_precondition():
    with pytest.raises(InvalidArgument):
        build_correction(0.3, 4, 10)
    with pytest.raises(InvalidArgument):
        build_correction(0.5, 2, 64)


@pytest.mark.parametrize("eps", [0.75, 0.6975])
def test_desk_scale_bundles_verify(eps):
    b = build_correction(eps, math.inf, 16)
    rep = verify_correction(b, "linf")
    assert rep.passed, [(c.name, c.value, c.bound) for c in rep.failures]
    # pigeonhole consistency in the l-infinity mode
    c = np.abs(b.P.coefficients)
    assert b.degree >= np.sum(c**2) / np.max(c) ** 2
    for l, (A, B) in b.decompositions.items():
        assert A + B == b.P.prefix_sum_analytic(l)


def test_bundle_json_roundtrip():
    b = build_correction(0.75, math.inf, 16)
    b2 = CorrectionBundle.from_json(b.to_json())
    assert b2.P == b.P and b2.F == b.F and b2.decompositions == b.decompositions
