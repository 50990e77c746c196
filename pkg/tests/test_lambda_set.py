"""Genealogy structure, lattice placement, verification, generation stats."""

import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cascadelab.errors import InvalidInput, PlacementFailed
from cascadelab.lambda_set import (
    PlacedSet,
    build_genealogy,
    place,
    placed_from_json,
    placed_to_json,
    stats,
    verify_properties,
)


def test_genealogy_counts():
    for N in (2, 3, 4, 5):
        g = build_genealogy(N)
        assert len(g.elements()) == N * 2 ** (N - 1)
        assert len(g.families()) == (N - 1) * 2 ** (N - 2)
        assert g.check_structure()


def test_genealogy_maps_are_bit_flips():
    g = build_genealogy(4)
    for i in range(1, 4):
        for s in g.strings:
            assert g.spouse((i, s)) == (i, s ^ (1 << (i - 1)))
            kids = g.children((i, s))
            assert set(kids) == {(i + 1, s), (i + 1, s ^ (1 << (i - 1)))}
            for kid in kids:
                assert (i, s) in g.parents(kid)
    for i in range(2, 5):
        for s in g.strings:
            sib = g.sibling((i, s))
            assert sib != (i, s) and g.sibling(sib) == (i, s)


def test_genealogy_boundaries():
    g = build_genealogy(3)
    with pytest.raises(InvalidInput):
        g.spouse((3, 0))
    with pytest.raises(InvalidInput):
        g.children((3, 0))
    with pytest.raises(InvalidInput):
        g.sibling((1, 0))
    with pytest.raises(InvalidInput):
        g.parents((1, 0))
    with pytest.raises(InvalidInput):
        build_genealogy(1)


def test_place_is_deterministic():
    g = build_genealogy(3)
    a = place(g, 11)
    b = place(g, 11)
    assert a.positions == b.positions
    assert place(g, 12).positions != a.positions


def test_place_exhausts_retries():
    # box 0 keeps every draw at the origin, which is always rejected
    with pytest.raises(PlacementFailed):
        place(build_genealogy(2), 0, box=0, retries=3)


def test_generation_divisibility():
    # generation 1 carries the 2^(N-1) premultiplier; each transition
    # halves the guaranteed power of two
    placed = place(build_genealogy(4), 5)
    for i in range(1, 5):
        d = 1 << (4 - i)
        for j, k in placed.generation(i):
            assert j % d == 0 and k % d == 0


def test_family_geometry_exact():
    placed = place(build_genealogy(4), 5)
    for p1, c1, p2, c2 in placed.family_quadruples():
        assert (p1[0] + p2[0], p1[1] + p2[1]) == (c1[0] + c2[0], c1[1] + c2[1])
        # children sit on the circle with the parents as a diameter
        d1 = (p1[0] - c1[0], p1[1] - c1[1])
        d2 = (p2[0] - c1[0], p2[1] - c1[1])
        assert d1[0] * d2[0] + d1[1] * d2[1] == 0
        mid2 = (p1[0] + p2[0], p1[1] + p2[1])
        r2 = (p1[0] * 2 - mid2[0]) ** 2 + (p1[1] * 2 - mid2[1]) ** 2
        assert (c1[0] * 2 - mid2[0]) ** 2 + (c1[1] * 2 - mid2[1]) ** 2 == r2


def test_verify_counts(placed_n2, placed_n3):
    for placed in (placed_n2, placed_n3):
        rep = verify_properties(placed)
        m = placed.N * 2 ** (placed.N - 1)
        assert rep.ok and not rep.violations
        assert rep.n_modes == m
        assert rep.n_triples_scanned == m**3
        assert rep.n_trivial_relations == m * (2 * m - 1)
        # each nuclear family closes exactly 8 ordered momentum relations
        assert rep.n_family_relations == 8 * len(placed.genealogy.families())


def test_verify_detects_duplicate_position(placed_n3):
    pos = dict(placed_n3.positions)
    pos[(3, 0)] = pos[(3, 1)]
    rep = verify_properties(PlacedSet(placed_n3.genealogy, pos, p=3, q=2))
    assert not rep.ok
    assert {v.kind for v in rep.violations} == {"prolificity"}


def test_verify_detects_broken_family(placed_n3):
    pos = dict(placed_n3.positions)
    j, k = pos[(2, 0)]
    pos[(2, 0)] = (j + 3 * 4, k)  # slide one child off its circle
    rep = verify_properties(PlacedSet(placed_n3.genealogy, pos, p=3, q=2))
    assert not rep.ok
    assert "family-geometry" in {v.kind for v in rep.violations}


def test_verify_detects_covariant_shift(placed_n3):
    # move a child pair by +t and -t: momentum closure survives but the
    # right angle at the children generically breaks
    pos = {el: (j // 3, k // 2) for el, (j, k) in placed_n3.positions.items()}
    fam = placed_n3.genealogy.families()[0]
    c1, c2 = fam.children
    t = (4, 0)
    pos[c1] = (pos[c1][0] + t[0], pos[c1][1] + t[1])
    pos[c2] = (pos[c2][0] - t[0], pos[c2][1] - t[1])
    rep = verify_properties(PlacedSet(placed_n3.genealogy, pos))
    assert not rep.ok


def test_scale_and_unscale(placed_n3):
    assert placed_n3.p == 3 and placed_n3.q == 2
    unscaled = placed_n3.unscaled_positions()
    for el, (j, k) in placed_n3.positions.items():
        assert (j, k) == (3 * unscaled[el][0], 2 * unscaled[el][1])
    with pytest.raises(InvalidInput):
        placed_n3.scale(2, 2)
    base = place(build_genealogy(2), 3)
    with pytest.raises(InvalidInput):
        base.scale(0, 1)


def test_scaled_verification_matches_unscaled():
    base = place(build_genealogy(3), 7)
    rep0 = verify_properties(base)
    rep1 = verify_properties(base.scale(5, 3))
    assert rep0.ok and rep1.ok
    assert rep0.n_family_relations == rep1.n_family_relations
    assert rep0.n_trivial_relations == rep1.n_trivial_relations


def test_stats_against_direct_sums(placed_n2):
    s = 1.5
    st_ = stats(placed_n2, s)
    assert st_.sizes == (2, 2)
    for i in (1, 2):
        gen_modes = placed_n2.generation(i)
        expect = math.fsum(math.hypot(j, k) ** (2 * s) for j, k in gen_modes)
        assert st_.S[i - 1] == pytest.approx(expect, rel=1e-15)
        assert st_.min_abs[i - 1] == min(math.hypot(j, k) for j, k in gen_modes)
        assert st_.max_abs[i - 1] == max(math.hypot(j, k) for j, k in gen_modes)
    assert st_.R_empirical == min(st_.min_abs) / 2
    assert st_.ratio(1, 2) == pytest.approx(st_.S[1] / st_.S[0])
    with pytest.raises(InvalidInput):
        stats(placed_n2, 0.0)


def test_json_round_trip(placed_n3):
    text = placed_to_json(placed_n3)
    back = placed_from_json(text)
    assert back.positions == placed_n3.positions
    assert (back.p, back.q, back.seed, back.N) == (3, 2, 7, 3)
    doc = json.loads(text)
    assert doc["generations"][0] == [[j, k] for j, k in placed_n3.generation(1)]


def test_json_validation(placed_n2):
    doc = json.loads(placed_to_json(placed_n2))
    del doc["p"]
    with pytest.raises(InvalidInput):
        placed_from_json(json.dumps(doc))
    doc2 = json.loads(placed_to_json(placed_n2))
    doc2["elements"] = doc2["elements"][:-1]
    with pytest.raises(InvalidInput):
        placed_from_json(json.dumps(doc2))


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([2, 3]))
def test_placements_always_verify(seed, N):
    placed = place(build_genealogy(N), seed)
    assert verify_properties(placed).ok
    assert len(placed.mode_set()) == N * 2 ** (N - 1)
