"""Continued fractions, certification, synthesis, scaling selection."""

import math
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cascadelab.diophantine import (
    ApproxFunction,
    ContinuedFraction,
    approximation_error,
    certify,
    expand,
    lower_bound_ok,
    monza_bracket_ok,
    select_scaling,
    synthesize,
)
from cascadelab.errors import InvalidInput, NoConvergentInRange

GOLDEN = ContinuedFraction((1,) * 30)
SQRT2 = ContinuedFraction((1,) + (2,) * 29)


def test_convergents_recurrence_oracle():
    # independent recurrence against known sequences
    assert [(c.p, c.q) for c in GOLDEN.convergents(6)] == [
        (1, 1), (2, 1), (3, 2), (5, 3), (8, 5), (13, 8)
    ]
    assert [(c.p, c.q) for c in SQRT2.convergents(6)] == [
        (1, 1), (3, 2), (7, 5), (17, 12), (41, 29), (99, 70)
    ]


def _decimal_fraction(make, digits=50) -> Fraction:
    # evaluate inside the high-precision context, then truncate to 10^-digits
    with mpmath.workdps(digits + 10):
        return Fraction(int(mpmath.floor(make() * mpmath.mpf(10) ** digits)), 10**digits)


def test_enclosure_contains_true_value():
    lo, hi = SQRT2.enclosure()
    root2 = _decimal_fraction(lambda: mpmath.sqrt(2))
    assert lo < root2 < hi
    lo_g, hi_g = GOLDEN.enclosure()
    phi = _decimal_fraction(lambda: (1 + mpmath.sqrt(5)) / 2)
    assert lo_g < phi < hi_g


def test_exact_rational_enclosure_is_a_point():
    cf = ContinuedFraction((1, 2), exact=True)  # 3/2
    assert cf.enclosure() == (Fraction(3, 2), Fraction(3, 2))
    assert cf.to_float() == 1.5


def test_digit_validation():
    with pytest.raises(InvalidInput):
        ContinuedFraction(())
    with pytest.raises(InvalidInput):
        ContinuedFraction((1, 0, 2))
    with pytest.raises(InvalidInput):
        ContinuedFraction((3,))  # truncated irrational needs two digits


def test_expand_recovers_sqrt2_digits():
    cf = expand(math.sqrt(2.0), 12)
    assert cf.digits[:8] == (1, 2, 2, 2, 2, 2, 2, 2)


def test_approximation_error_brackets_true_error():
    root2 = _decimal_fraction(lambda: mpmath.sqrt(2))
    slack = Fraction(1, 10**49)
    for conv in SQRT2.convergents(8):
        lo, hi = approximation_error(SQRT2, conv)
        err = abs(root2 - conv.value)
        assert lo <= err + slack
        assert err <= hi + slack


def test_certify_log_kind_frozen_crossing():
    # |sqrt2 - p/q| ~ 0.354/q^2 vs 1/(q^2 log q): certified iff log q <= 2sqrt2
    psi = ApproxFunction("log")
    flags = {c.q: certify(SQRT2, c, psi) for c in SQRT2.convergents(7)}
    assert flags == {1: True, 2: True, 5: True, 12: True, 29: False, 70: False, 169: False}


def test_certify_decides_the_inequality():
    psi = ApproxFunction("log")
    assert certify(SQRT2, (3, 2), psi)
    # 4/3 is not a convergent but still a valid log-psi approximation
    assert certify(SQRT2, (4, 3), psi)
    assert not certify(SQRT2, (3, 3), psi)
    with pytest.raises(InvalidInput):
        certify(SQRT2, (1, 0), psi)


def test_lower_bound_diagnostic_small_q_fails():
    # ledgered behavior: golden q=3 sits below q^-(1+log q)
    convs = GOLDEN.convergents(8)
    by_q = {c.q: lower_bound_ok(GOLDEN, c) for c in convs}
    assert by_q[3] is False
    assert by_q[8] is True


def test_monza_bracket_on_certified_levels():
    psi = ApproxFunction("power", c=1.0, tau=0.1)
    for cf in (GOLDEN, SQRT2):
        for conv in cf.convergents(10):
            if certify(cf, conv, psi):
                assert monza_bracket_ok(conv, cf)


def test_psi_kinds_and_validation():
    log_psi = ApproxFunction("log")
    power_psi = ApproxFunction("power", c=2.0, tau=1.0)
    assert log_psi.psi(3) == pytest.approx(1.0 / (3 * math.log(3)))
    assert power_psi.psi(3) == pytest.approx(2.0 / 9.0)
    with pytest.raises(InvalidInput):
        ApproxFunction("power", c=0.0, tau=1.0)
    with pytest.raises(InvalidInput):
        ApproxFunction("cubic")
    iv = power_psi.psi_over_q_iv(7)
    assert float(iv.a) <= 2.0 / 7**3 <= float(iv.b)


@settings(max_examples=25, deadline=None)
@given(
    tau=st.floats(min_value=0.2, max_value=1.5),
    seed=st.integers(min_value=0, max_value=2**31),
)
def test_synthesize_certifies_below_tip(tau, seed):
    psi = ApproxFunction("power", c=1.0, tau=tau)
    cf = synthesize(psi, seed, 5)
    convs = cf.convergents()
    assert all(certify(cf, c, psi) for c in convs[:-1])
    # determinism: digits are a pure function of (psi, seed, depth)
    assert synthesize(psi, seed, 5).digits == cf.digits


def test_synthesize_seed_none_picks_lowest_digits():
    psi = ApproxFunction("power", c=1.0, tau=1.0)
    lowest = synthesize(psi, None, 5)
    assert lowest.digits == synthesize(psi, None, 5).digits
    seeded = synthesize(psi, 123, 5)
    assert all(a <= b for a, b in zip(lowest.digits, seeded.digits))


def _oracle_select(cf, psi, L_min, N, R, q_min):
    # independent scan of the three conditions in plain floats
    lo, hi = cf.enclosure()
    for conv in cf.convergents():
        if conv.q < q_min or not certify(cf, conv, psi):
            continue
        if float(lo) ** 2 * conv.q**2 / 8.0 < L_min:
            continue
        if 3.0 ** (2 * N) * R**2 * psi.psi(conv.q) / conv.q > 0.125:
            continue
        return conv.q
    return None


def test_select_scaling_matches_oracle_scan():
    psi = ApproxFunction("power", c=1.0, tau=0.1)
    sel = select_scaling(SQRT2, psi, L_min=1.0, N=2, R=40.0)
    assert sel.convergent.q == _oracle_select(SQRT2, psi, 1.0, 2, 40.0, 2)
    assert sel.L >= 1.0
    assert sel.assumption_lhs <= 0.125


def test_select_scaling_relaxed_golden_picks_q8():
    # ledgered reading of the golden example: with the assumption condition
    # relaxed the smallest certified level with L >= 10 is q = 8
    psi = ApproxFunction("log")
    sel = select_scaling(GOLDEN, psi, L_min=10.0, N=2, R=2.0, c_assumption=1e9)
    assert (sel.convergent.p, sel.convergent.q) == (13, 8)


def test_select_scaling_no_admissible_convergent():
    psi = ApproxFunction("log")
    with pytest.raises(NoConvergentInRange):
        select_scaling(GOLDEN, psi, L_min=1e12, N=2, R=2.0)
    with pytest.raises(InvalidInput):
        select_scaling(GOLDEN, psi, L_min=-1.0, N=2, R=2.0)
