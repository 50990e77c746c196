"""Fourier states, potentials, gauge phases."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cascadelab.errors import InvalidInput
from cascadelab.lattice import (
    FourierState,
    PotentialSpec,
    bracket,
    distance_l1,
    gauge,
    norms,
    seeded_direction,
)

modes_st = st.tuples(st.integers(-50, 50), st.integers(-50, 50))
amp_st = st.complex_numbers(max_magnitude=10.0, allow_nan=False, allow_infinity=False)


def test_bracket_floor_and_growth():
    assert bracket((0, 0)) == 1.0
    assert bracket((1, 0)) == 1.0
    assert bracket((3, 4)) == 5.0


def test_state_accessors_and_zero_default():
    s = FourierState({(1, 2): 1 + 1j})
    assert s[(1, 2)] == 1 + 1j
    assert s[(0, 0)] == 0j
    assert (1, 2) in s and (9, 9) not in s
    s[(0, 3)] = 2.0
    assert s.support() == [(0, 3), (1, 2)]


def test_norms_against_direct_sums():
    s = FourierState({(3, 4): 3j, (0, 0): 1.0, (-1, 0): -2.0})
    rep = norms(s, 1.5)
    assert rep.l1 == pytest.approx(6.0)
    assert rep.mass == pytest.approx(9 + 1 + 4)
    assert rep.momentum[0] == pytest.approx(3 * 9 + 0 - 1 * 4)
    assert rep.momentum[1] == pytest.approx(4 * 9)
    assert rep.hs_sq == pytest.approx(5.0**3 * 9 + 1 + 4)


def test_vector_round_trip():
    modes = [(0, 1), (2, 3), (5, -1)]
    s = FourierState({(2, 3): 1j, (5, -1): 2.0})
    vec = s.to_vector(modes)
    assert vec.tolist() == [0j, 1j, 2 + 0j]
    # from_vector keeps explicit zeros; equality is amplitude-dict equality
    assert FourierState.from_vector(modes, vec) == FourierState(
        {(0, 1): 0j, (2, 3): 1j, (5, -1): 2 + 0j}
    )


def test_json_lines_round_trip():
    s = FourierState({(1, -2): 0.5 - 0.25j, (-3, 0): 2j})
    assert FourierState.from_json_lines(s.to_json_lines()) == s
    assert FourierState.from_json_lines("") == FourierState()


@settings(max_examples=50, deadline=None)
@given(st.dictionaries(modes_st, amp_st, min_size=1, max_size=8), st.floats(-20, 20))
def test_gauge_round_trip_and_mass_invariance(amp, t):
    s = FourierState(amp)
    u = gauge(s, t, +1)
    assert u.mass() == pytest.approx(s.mass(), rel=1e-12, abs=1e-12)
    back = gauge(u, t, -1)
    # rounding in exp scales with the accumulated phase 2*mass*|t|
    slack = 1e-14 * max(1.0, 2.0 * s.mass() * abs(t)) * max(1.0, s.l1())
    assert distance_l1(back, s) <= slack


def test_gauge_direction_validation():
    with pytest.raises(InvalidInput):
        gauge(FourierState(), 1.0, direction=2)


def test_seeded_direction_is_unit_l1_and_deterministic():
    modes = [(0, 1), (1, 1), (4, -2)]
    d1 = seeded_direction(modes, 9)
    d2 = seeded_direction(modes, 9)
    assert d1 == d2
    assert d1.l1() == pytest.approx(1.0, rel=1e-12)
    assert seeded_direction(modes, 10) != d1
    with pytest.raises(InvalidInput):
        seeded_direction([], 0)


def test_zero_potential():
    v = PotentialSpec()
    assert v.coeff((3, 2)) == 0.0
    assert v.sup_abs() == 0.0


def test_decay_potential_real_symmetric_and_bounded():
    v = PotentialSpec(kind="decay", amplitude=0.25, s0=4.0, seed=3)
    for n in [(1, 0), (2, 3), (-2, -3), (5, -1)]:
        assert v.coeff(n) == v.coeff((-n[0], -n[1]))  # real-valued potential
        assert abs(v.coeff(n)) <= 0.25 * bracket(n) ** -4.0 + 1e-18
    assert v.sup_abs() == pytest.approx(0.25)
    assert abs(v.coeff((100, 0))) <= 0.25 * 100.0**-4.0 * (1 + 1e-12)


def test_table_potential_lookup_and_sup():
    v = PotentialSpec(kind="table", table={(1, 0): 0.5, (0, 2): -1.5})
    assert v.coeff((1, 0)) == 0.5
    assert v.coeff((7, 7)) == 0.0
    assert v.sup_abs() == 1.5


def test_potential_validation():
    with pytest.raises(InvalidInput):
        PotentialSpec(kind="fourier")
    with pytest.raises(InvalidInput):
        PotentialSpec(kind="decay", s0=-1.0)
    with pytest.raises(InvalidInput):
        PotentialSpec(kind="table")


def test_distance_l1_metric_properties():
    a = FourierState({(0, 1): 1.0})
    b = FourierState({(0, 1): 1j, (2, 2): -1.0})
    assert distance_l1(a, a) == 0.0
    assert distance_l1(a, b) == pytest.approx(abs(1 - 1j) + 1.0)
    assert distance_l1(a, b) == distance_l1(b, a)
