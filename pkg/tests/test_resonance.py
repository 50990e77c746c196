"""Resonance combinations, divisor extrema, smallness functional."""

import itertools
import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cascadelab.diophantine import ApproxFunction, ContinuedFraction
from cascadelab.errors import EmptyClass, InvalidInput
from cascadelab.lambda_set import build_genealogy, place
from cascadelab.resonance import (
    Quadruple,
    build_report,
    classify,
    compute_U0,
    estimate_L1,
    omega_interval,
    omega_values,
    theta,
)

SQRT2 = ContinuedFraction((1,) + (2,) * 29)

coord = st.integers(-30, 30)
mode_st = st.tuples(coord, coord)


def test_quadruple_momentum_validation():
    with pytest.raises(InvalidInput):
        Quadruple((1, 0), (0, 0), (0, 0), (0, 1))
    q = Quadruple.from_triple((3, 1), (1, 2), (0, -4))
    assert q.n4 == (2, -5)
    assert Quadruple((1, 2), (1, 2), (5, 5), (5, 5)).is_trivial()
    assert Quadruple((1, 2), (5, 5), (5, 5), (1, 2)).is_trivial()
    assert not q.is_trivial()


@settings(max_examples=200)
@given(mode_st, mode_st, mode_st)
def test_decomposition_is_parallelogram_form(n1, n2, n3):
    # Omega_omega = 2 (j1-j2)(j2-j3) + 2 omega^2 (k1-k2)(k2-k3), exactly
    q = Quadruple.from_triple(n1, n2, n3)
    a, b = q.decomposition()
    assert a == 2 * (n1[0] - n2[0]) * (n2[0] - n3[0])
    assert b == 2 * (n1[1] - n2[1]) * (n2[1] - n3[1])


@settings(max_examples=100)
@given(mode_st, mode_st, mode_st, st.fractions(min_value=0, max_value=4))
def test_omega_values_exact_vs_float(n1, n2, n3, om):
    q = Quadruple.from_triple(n1, n2, n3)
    a, b = q.decomposition()
    vals = omega_values(q, om)
    assert isinstance(vals.omega_part, Fraction)
    assert vals.omega_part == a + om * om * b
    fl = omega_values(q, float(om)).omega_part
    assert fl == pytest.approx(float(vals.omega_part), rel=1e-12, abs=1e-9)


def test_omega_interval_contains_pointwise_values():
    q = Quadruple.from_triple((5, -2), (1, 3), (-4, 0))
    lo, hi = Fraction(7, 5), Fraction(3, 2)
    ivlo, ivhi = omega_interval(q, lo, hi)
    for om in (lo, hi, (lo + hi) / 2):
        v = omega_values(q, om).omega_part
        assert ivlo <= v <= ivhi
    with pytest.raises(InvalidInput):
        omega_interval(q, Fraction(-1), Fraction(1))


def test_classify_counts_outside_modes(placed_n2):
    modes = placed_n2.modes()
    quad = Quadruple.from_triple(modes[0], modes[1], modes[2])
    inside = sum(1 for n in quad.modes() if n in placed_n2.mode_set())
    assert classify(quad, placed_n2) == 4 - inside
    assert classify(quad, frozenset()) == 4


def test_families_exactly_resonant_at_matching_ratio(placed_n3):
    # the scaled set diag(p, q) Lambda is resonant for omega = p/q: the
    # right angle at the children kills Omega identically
    om = Fraction(3, 2)
    for p1, c1, p2, c2 in placed_n3.family_quadruples():
        quad = Quadruple(p1, c1, p2, c2)
        assert omega_values(quad, om).omega_part == 0


def _brute_class1(placed, box):
    """All class-1 quadruples (n1, n2, n3 in set, n4 off) with |n4| <= box."""
    modes = placed.modes()
    members = set(modes)
    for n1, n2, n3 in itertools.product(modes, repeat=3):
        n4 = (n1[0] - n2[0] + n3[0], n1[1] - n2[1] + n3[1])
        if n4 in members or math.hypot(*n4) > box:
            continue
        yield Quadruple(n1, n2, n3, n4)


def test_estimate_L1_matches_brute_force(placed_n2):
    lo, hi = SQRT2.enclosure()
    rep = estimate_L1(placed_n2, SQRT2)
    best = min(
        min(abs(omega_interval(q, lo, hi)[0]), abs(omega_interval(q, lo, hi)[1]))
        if omega_interval(q, lo, hi)[0] > 0 or omega_interval(q, lo, hi)[1] < 0
        else Fraction(0)
        for q in _brute_class1(placed_n2, rep.box)
    )
    assert rep.value == float(best)
    assert rep.n_quadruples == sum(1 for _ in _brute_class1(placed_n2, rep.box))
    assert rep.value > 0 and rep.certified


def test_estimate_L1_empty_box(placed_n2):
    with pytest.raises(EmptyClass):
        estimate_L1(placed_n2, SQRT2, box=0.1)


def test_compute_U0_matches_brute_force(placed_n3):
    lo, hi = SQRT2.enclosure()
    rep = compute_U0(placed_n3, SQRT2)
    best = Fraction(0)
    for p1, c1, p2, c2 in placed_n3.family_quadruples():
        iv = omega_interval(Quadruple(p1, c1, p2, c2), lo, hi)
        best = max(best, abs(iv[0]), abs(iv[1]))
    assert rep.value == float(best)
    assert rep.n_quadruples == len(placed_n3.genealogy.families())
    assert rep.certified


def test_theta_formula_and_validation():
    psi = ApproxFunction("power", c=1.0, tau=0.1)
    val = theta(3, 40.0, 1.5, 7, psi, 4.0)
    assert val == pytest.approx(
        9.0**3 * 1600.0 * 1.5**3 * 7 * psi.psi(7) + 4.0 * (7 * 40.0) ** -4.0
    )
    with pytest.raises(InvalidInput):
        theta(3, 0.0, 1.5, 7, psi, 4.0)
    with pytest.raises(InvalidInput):
        theta(3, 40.0, 1.5, 0, psi, 4.0)


def test_build_report_shape(placed_n2):
    psi = ApproxFunction("power", c=1.0, tau=0.1)
    rep = build_report(placed_n2, SQRT2, psi, L=2.0, s0=4.0)
    doc = rep.as_dict()
    assert doc["p"] == 3 and doc["q"] == 2
    assert doc["L1_over_L"] == pytest.approx(rep.L1.value / 2.0)
    assert doc["U0_over_theta"] == pytest.approx(rep.U0.value / rep.theta)
    unscaled = place(build_genealogy(2), 7)
    with pytest.raises(InvalidInput):
        build_report(unscaled, SQRT2, psi, L=2.0, s0=4.0)
