"""Quartic tables, normalizing generator, coordinate transform, eta sweeps."""

import itertools
import math

import numpy as np
import pytest

from cascadelab.diophantine import ContinuedFraction
from cascadelab.errors import (
    CapacityExceeded,
    InvalidInput,
    RadiusExceeded,
    SmallDivisor,
)
from cascadelab.lattice import FourierState, distance_l1, seeded_direction
from cascadelab.normal_form import (
    MonomialTable,
    build_generator,
    build_quartic,
    check_cancellation,
    check_generator_commutes,
    completion_modes,
    default_etas,
    entry_divisors,
    eta_sweep,
    make_instance,
    mode_energies,
    remainder_sweep,
    transform,
)
from cascadelab.resonance import Quadruple, classify, omega_values

SQRT2 = ContinuedFraction((1,) + (2,) * 29)

SQUARE = [(0, 0), (1, 0), (0, 1), (1, 1)]


def _brute_entries(support, truncation):
    """Reference enumeration: momentum-closed quadruples with the exclusion."""
    sup = set(support)
    modes = sorted(set(truncation))
    out = {}
    for n1, n2, n3, n4 in itertools.product(modes, repeat=4):
        if (n1[0] - n2[0] + n3[0] - n4[0], n1[1] - n2[1] + n3[1] - n4[1]) != (0, 0):
            continue
        if n1 == n2 == n3 == n4:
            out[(n1, n2, n3, n4)] = (-0.5, 0)
            continue
        if n1 == n2 or n1 == n4:
            continue
        cls = sum(1 for n in (n1, n2, n3, n4) if n not in sup)
        out[(n1, n2, n3, n4)] = (0.5, cls)
    return out


def test_build_quartic_matches_brute_force():
    table = build_quartic(SQUARE[:2], SQUARE)
    expect = _brute_entries(SQUARE[:2], SQUARE)
    got = {quad: (complex(c), d) for quad, c, d in table.entries()}
    assert {q: (complex(c), d) for q, (c, d) in expect.items()} == got


def test_table_select_and_counts():
    table = build_quartic(SQUARE[:2], SQUARE)
    counts = table.class_counts()
    assert sum(counts.values()) == len(table)
    sub = table.select(1, 2)
    assert len(sub) == counts.get(1, 0) + counts.get(2, 0)
    assert set(np.unique(sub.cls)) <= {1, 2}


def test_class_labels_match_resonance_classify(placed_n2):
    sup = placed_n2.modes()
    table = build_quartic(sup, completion_modes(sup))
    members = frozenset(sup)
    for quad, _, d in table.entries():
        assert d == classify(Quadruple(*quad), members)


def test_field_matches_entry_level_sum():
    table = build_quartic(SQUARE[:2], SQUARE)
    rng = np.random.Generator(np.random.PCG64(3))
    z = rng.normal(size=len(table.modes)) + 1j * rng.normal(size=len(table.modes))
    idx = {n: i for i, n in enumerate(table.modes)}
    ref = np.zeros(len(z), dtype=complex)
    for (n1, n2, n3, n4), c, _ in table.entries():
        i1, i2, i3, i4 = (idx[n] for n in (n1, n2, n3, n4))
        ref[i2] += c * z[i1] * z[i3] * np.conj(z[i4])
        ref[i4] += c * z[i1] * np.conj(z[i2]) * z[i3]
    assert np.allclose(table.field(z), 1j * ref, rtol=1e-13, atol=1e-13)
    # the table is conjugation symmetric, so its value is real
    terms = [
        c * z[idx[n1]] * np.conj(z[idx[n2]]) * z[idx[n3]] * np.conj(z[idx[n4]])
        for (n1, n2, n3, n4), c, _ in table.entries()
    ]
    total = sum(terms)
    assert abs(total.imag) < 1e-13
    assert table.value(z) == pytest.approx(total.real, rel=1e-13)


def test_completion_contains_all_triples(placed_n2):
    sup = placed_n2.modes()
    comp = set(completion_modes(sup))
    assert set(sup) <= comp
    for a, b, c in itertools.product(sup, repeat=3):
        assert (a[0] - b[0] + c[0], a[1] - b[1] + c[1]) in comp


def test_capacity_guards():
    with pytest.raises(CapacityExceeded):
        build_quartic([(0, 0)], [(i, 0) for i in range(4001)])
    # collinear modes collide in pair sums; candidate count grows like m^3
    with pytest.raises(CapacityExceeded):
        build_quartic([(0, 0)], [(i, 0) for i in range(250)])
    with pytest.raises(InvalidInput):
        build_quartic([(9, 9)], SQUARE)


def test_mode_energies_formula():
    from cascadelab.lattice import PotentialSpec

    v = PotentialSpec(kind="table", table={(1, 0): 0.25})
    en = mode_energies([(1, 0), (2, -3)], 1.5, v)
    assert en[0] == pytest.approx(1 + 0 + 0.25)
    assert en[1] == pytest.approx(4 + 2.25 * 9)


def test_entry_divisors_match_omega_values(placed_n2):
    sup = placed_n2.modes()
    table = build_quartic(sup, completion_modes(sup)).select(1)
    divs = entry_divisors(table, SQRT2.to_float(), None)
    for (quad, _, _), om in zip(table.entries(), divs):
        ref = omega_values(Quadruple(*quad), SQRT2.to_float()).total
        assert om == pytest.approx(float(ref), rel=1e-12, abs=1e-12)


def test_generator_identities(placed_n2):
    inst = make_instance(placed_n2.modes(), SQRT2.to_float())
    assert check_cancellation(inst.table, inst.generator, inst.omega) <= 1e-12
    assert check_generator_commutes(inst.generator) == 0.0
    # coefficient-level inverse: g = c / (i Omega) entry by entry
    divs = entry_divisors(inst.table.select(1), inst.omega, None)
    ref = inst.table.select(1).coeff / (1j * divs)
    assert np.array_equal(inst.generator.coeff, ref)


def test_generator_small_divisor_guards(placed_n2):
    table = build_quartic(placed_n2.modes(), completion_modes(placed_n2.modes()))
    divs = np.abs(entry_divisors(table.select(1), SQRT2.to_float(), None))
    with pytest.raises(SmallDivisor):
        build_generator(table, SQRT2.to_float(), divisor_floor=float(divs.min()) * 2)
    with pytest.raises(InvalidInput):
        build_generator(table, SQRT2.to_float(), divisor_floor=-1.0)


def test_transform_round_trip_and_ride_along(placed_n2):
    inst = make_instance(placed_n2.modes(), SQRT2.to_float())
    w = seeded_direction(placed_n2.modes(), 4).scaled(0.05)
    far = (10_001, -7)
    w[far] = 0.001 + 0.002j
    fwd = transform(w, inst.generator, +1)
    assert fwd[far] == w[far]
    back = transform(fwd, inst.generator, -1)
    assert distance_l1(back, w) <= 1e-10
    assert fwd.mass() == pytest.approx(w.mass(), rel=1e-11)
    mom_f, mom_w = fwd.momentum(), w.momentum()
    assert mom_f[0] == pytest.approx(mom_w[0], rel=1e-9, abs=1e-11)
    assert mom_f[1] == pytest.approx(mom_w[1], rel=1e-9, abs=1e-11)


def test_transform_validation(placed_n2):
    inst = make_instance(placed_n2.modes(), SQRT2.to_float())
    with pytest.raises(InvalidInput):
        transform(FourierState({(1, 0): 1.0}), inst.generator, +1)  # past eta0
    with pytest.raises(InvalidInput):
        transform(FourierState({(1, 0): 0.01}), inst.generator, 2)


def test_transform_radius_guard():
    # one huge off-diagonal coefficient pumps mode (0,0) past the doubled ball
    table = MonomialTable(
        modes=((0, 0), (1, 0)),
        support=frozenset({(1, 0)}),
        quads=np.array([[1, 0, 1, 0]], dtype=np.int32),
        coeff=np.array([-5000.0j]),
        cls=np.array([1], dtype=np.int8),
    )
    w = FourierState({(0, 0): 0.04, (1, 0): 0.04})
    with pytest.raises(RadiusExceeded):
        transform(w, table, +1)


def test_eta_sweep_cubic_contact(placed_n2):
    inst = make_instance(placed_n2.modes(), SQRT2.to_float())
    sweep = eta_sweep(inst)
    assert abs(sweep["slope"] - 3.0) <= 0.1
    assert sweep == eta_sweep(inst)  # seeded, deterministic


def test_remainder_sweep_order(placed_n2):
    inst = make_instance(placed_n2.modes(), SQRT2.to_float())
    sweep = remainder_sweep(inst)
    assert sum(sweep["used"]) >= 2
    assert sweep["slope"] >= 4.7


def test_default_etas_validation():
    etas = default_etas()
    assert len(etas) == 8 and etas[0] == 2.0**-6 and etas[-1] == 2.0**-3
    with pytest.raises(InvalidInput):
        default_etas(0.5, 0.25)
