from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from frameforge.errors import InvalidArgument
from frameforge.exact import RationalNodes, as_fraction, fmt_fraction, frac_part
from frameforge.intervals import PeriodicIntervalSet


@st.composite
def interval_sets(draw, max_n=5):
    den = draw(st.integers(2, 64))
    cuts = sorted(set(draw(st.lists(st.integers(0, den), min_size=0, max_size=2 * max_n))))
    ivs = [(Fraction(a, den), Fraction(b, den)) for a, b in zip(cuts[::2], cuts[1::2])]
    return PeriodicIntervalSet(ivs, draw(st.integers(1, 50)))


def test_as_fraction_and_format():
    assert as_fraction("3/4") == Fraction(3, 4)
    assert as_fraction(" 0.25 ") == Fraction(1, 4)
    assert as_fraction(0.5) == Fraction(1, 2)
    assert fmt_fraction(Fraction(-6, 4)) == "-3/2"
    assert frac_part(Fraction(-1, 3)) == Fraction(2, 3)
    with pytest.raises(InvalidArgument):
        as_fraction("abc")
    with pytest.raises(InvalidArgument):
        as_fraction(float("inf"))


def test_rational_node_phase_exact():
    nodes = RationalNodes(np.array([-7, 1, 3, 10**6]), 9)
    lam = Fraction(10**12 + 1, 17)
    expect = [float(frac_part(lam * Fraction(int(n), 9))) for n in nodes.num]
    assert np.array_equal(nodes.phase(lam), np.array(expect))


@given(interval_sets())
def test_complement_measure_is_exact(E):
    assert E.measure() + E.complement().measure() == 1
    assert E.complement().complement() == E or E.is_empty or E.measure() == 1


def test_construction_rules():
    with pytest.raises(InvalidArgument):
        PeriodicIntervalSet([(0, Fraction(1, 2)), (Fraction(1, 4), 1)])
    with pytest.raises(InvalidArgument):
        PeriodicIntervalSet([(0, 2)])
    with pytest.raises(InvalidArgument):
        PeriodicIntervalSet([], nu=0)
    E = PeriodicIntervalSet([(0, Fraction(1, 3)), (Fraction(1, 3), Fraction(1, 2))])
    assert E.intervals == ((0, Fraction(1, 2)),)


def test_membership_exact_at_endpoints():
    E = PeriodicIntervalSet([(Fraction(1, 3), Fraction(2, 3))], nu=5)
    assert E.contains(Fraction(1, 15))
    assert E.contains(Fraction(2, 15) + 7)
    assert not E.contains(Fraction(2, 15) + Fraction(1, 10**9))
    nodes = RationalNodes(np.arange(-60, 61), 45)
    fr = [E.contains(Fraction(int(n), 45)) for n in nodes.num]
    assert list(E.contains(nodes)) == fr


def test_full_set_contains_integers():
    E = PeriodicIntervalSet([(Fraction(1, 2), 1)])
    assert E.contains(3) and E.contains(Fraction(1, 2))
    assert not E.contains(Fraction(1, 4))


@given(interval_sets(), st.floats(-3, 3))
def test_float_membership_matches_exact_away_from_edges(E, t):
    s = (Fraction(t) * E.nu) % 1
    dist = min([abs(s - a) for iv in E.intervals for a in iv] + [Fraction(1)])
    if dist > Fraction(1, 10**9):
        assert bool(E.contains(np.array([t]))[0]) == E.contains(Fraction(t))


@given(interval_sets())
def test_intervals_within_total_length(E):
    lo, hi = -2.0, 3.0
    total = sum(b - a for a, b in E.intervals_within(lo, hi))
    assert total == pytest.approx(5 * float(E.measure()), abs=1e-9)


def test_breakpoints_and_scaling():
    F = PeriodicIntervalSet([(Fraction(1, 4), Fraction(3, 4))])
    E = F.scaled(2)
    assert E.nu == 2 and E.intervals == F.intervals
    assert np.allclose(E.breakpoints(0, 1), [1 / 8, 3 / 8, 5 / 8, 7 / 8])
    assert PeriodicIntervalSet.full().breakpoints(-1, 1).size == 0


@given(interval_sets())
def test_json_roundtrip(E):
    assert PeriodicIntervalSet.from_json(E.to_json()) == E
