"""Genealogy combinatorics, lattice placement, and generation statistics.

The abstract genealogy lives on binary strings of length N-1: generation
``i`` holds every string, the spouse map at transition ``i`` flips
coordinate ``i``, and a nuclear family at that transition consists of a
string pair {sigma, flip_i(sigma)} read in generations i (parents) and
i+1 (children).  Placement sends elements to integer modes so that every
family is an exact rectangle; a rejection loop plus an exhaustive exact
verifier enforce the closure/faithfulness properties that make the set
usable downstream.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInput, PlacementFailed
from .lattice import Mode

Element = tuple[int, int]  # (generation 1..N, string bitmask)


@dataclass(frozen=True)
class Family:
    """Nuclear family at a transition: two parents, two children."""

    transition: int
    parents: tuple[Element, Element]
    children: tuple[Element, Element]


@dataclass(frozen=True)
class Genealogy:
    """Abstract N-generation family structure on {0,1}^(N-1) strings."""

    N: int

    def __post_init__(self):
        if self.N < 2:
            raise InvalidInput("genealogy needs at least two generations")

    @property
    def strings(self) -> range:
        return range(1 << (self.N - 1))

    def elements(self) -> list[Element]:
        return [(i, s) for i in range(1, self.N + 1) for s in self.strings]

    def spouse(self, el: Element) -> Element:
        i, s = el
        if not 1 <= i <= self.N - 1:
            raise InvalidInput(f"no spouse: generation {i} has no outgoing transition")
        return (i, s ^ (1 << (i - 1)))

    def children(self, el: Element) -> tuple[Element, Element]:
        i, s = el
        if not 1 <= i <= self.N - 1:
            raise InvalidInput(f"no children: generation {i} has no outgoing transition")
        return ((i + 1, s), (i + 1, s ^ (1 << (i - 1))))

    def sibling(self, el: Element) -> Element:
        i, s = el
        if not 2 <= i <= self.N:
            raise InvalidInput("generation 1 has no sibling")
        return (i, s ^ (1 << (i - 2)))

    def parents(self, el: Element) -> tuple[Element, Element]:
        i, s = el
        if not 2 <= i <= self.N:
            raise InvalidInput("generation 1 has no parents")
        return ((i - 1, s), (i - 1, s ^ (1 << (i - 2))))

    def families(self) -> list[Family]:
        """All nuclear families, by transition then base string."""
        out = []
        for i in range(1, self.N):
            bit = 1 << (i - 1)
            for s in self.strings:
                if s & bit:
                    continue
                out.append(
                    Family(
                        transition=i,
                        parents=((i, s), (i, s | bit)),
                        children=((i + 1, s), (i + 1, s | bit)),
                    )
                )
        return out

    def check_structure(self) -> bool:
        """Re-verify spouse/children/parents/sibling coherence and P4."""
        for el in self.elements():
            i, _ = el
            if i <= self.N - 1:
                sp = self.spouse(el)
                if sp == el or self.spouse(sp) != el:
                    return False
                c1, c2 = self.children(el)
                if c1 == c2 or el not in self.parents(c1) or el not in self.parents(c2):
                    return False
            if i >= 2:
                sib = self.sibling(el)
                if sib == el or self.sibling(sib) != el:
                    return False
                # non-degeneracy: sibling and spouse use different flip bits
                if 2 <= i <= self.N - 1 and sib == self.spouse(el):
                    return False
        return True


def build_genealogy(N: int) -> Genealogy:
    return Genealogy(N)


def _rot90(v: Mode) -> Mode:
    return (-v[1], v[0])


@dataclass(frozen=True)
class PlacedSet:
    """A genealogy realized on the integer lattice, optionally scaled.

    ``p == q == 1`` is the unscaled set; otherwise every position lies in
    p*Z x q*Z and is the image of the unscaled set under diag(p, q).
    """

    genealogy: Genealogy
    positions: dict[Element, Mode]
    p: int = 1
    q: int = 1
    seed: int | None = None

    @property
    def N(self) -> int:
        return self.genealogy.N

    def generation(self, i: int) -> list[Mode]:
        if not 1 <= i <= self.N:
            raise InvalidInput(f"generation index {i} out of range")
        return sorted(self.positions[(i, s)] for s in self.genealogy.strings)

    def modes(self) -> list[Mode]:
        return sorted(self.positions.values())

    def mode_set(self) -> frozenset[Mode]:
        return frozenset(self.positions.values())

    def family_quadruples(self) -> list[tuple[Mode, Mode, Mode, Mode]]:
        """Families as (parent, child, parent, child) mode quadruples."""
        pos = self.positions
        out = []
        for fam in self.genealogy.families():
            p1, p2 = (pos[e] for e in fam.parents)
            c1, c2 = (pos[e] for e in fam.children)
            out.append((p1, c1, p2, c2))
        return out

    def scale(self, p: int, q: int) -> "PlacedSet":
        """Image under diag(p, q): (j, k) -> (p*j, q*k)."""
        if self.p != 1 or self.q != 1:
            raise InvalidInput("set is already scaled")
        if p < 1 or q < 1:
            raise InvalidInput("scaling integers must be >= 1")
        pos = {el: (p * n[0], q * n[1]) for el, n in self.positions.items()}
        return PlacedSet(self.genealogy, pos, p=p, q=q, seed=self.seed)

    def unscaled_positions(self) -> dict[Element, Mode]:
        """Divide out diag(p, q); raises if membership in pZ x qZ fails."""
        out = {}
        for el, (j, k) in self.positions.items():
            if j % self.p or k % self.q:
                raise InvalidInput(f"position {(j, k)} not in {self.p}Z x {self.q}Z")
            out[el] = (j // self.p, k // self.q)
        return out


@dataclass(frozen=True)
class Violation:
    kind: str  # "prolificity" | "family-geometry" | "P1" | "P5/P6" | "P6" | "structure"
    detail: str
    quadruple: tuple[Mode, ...] = ()


@dataclass(frozen=True)
class VerifyReport:
    ok: bool
    n_modes: int
    n_triples_scanned: int
    n_family_relations: int
    n_trivial_relations: int
    violations: tuple[Violation, ...]


def verify_properties(placed: PlacedSet) -> VerifyReport:
    """Exhaustive exact check of the placement properties.

    Scans every ordered triple (n1, n2, n3): the forced fourth vertex
    n4 = n1 - n2 + n3 either closes a momentum relation inside the set
    (then it must be trivial or a nuclear family) or, when it completes a
    non-degenerate orthogonal parallelogram in the B^-2 inner product, it
    must already belong to the set.  Scaled sets are normalized through
    diag(p,q)^-1 first; the orthogonality condition is equivalent under
    that bijection, which also keeps the integer arithmetic small.
    """
    violations: list[Violation] = []
    if not placed.genealogy.check_structure():
        violations.append(Violation("structure", "genealogy maps are incoherent"))
    pos = placed.unscaled_positions()
    elements = sorted(pos)
    modes = [pos[e] for e in elements]

    seen: dict[Mode, Element] = {}
    for el in elements:
        n = pos[el]
        if n in seen:
            violations.append(
                Violation("prolificity", f"elements {seen[n]} and {el} share position {n}")
            )
        seen[n] = el
    if any(v.kind == "prolificity" for v in violations):
        return VerifyReport(False, len(set(modes)), 0, 0, 0, tuple(violations))

    fam_keys = set()
    for (p1, c1, p2, c2) in _unscaled_family_quadruples(placed, pos):
        # exact family geometry: momentum closure and the right angle
        mj = p1[0] - c1[0] + p2[0] - c2[0]
        mk = p1[1] - c1[1] + p2[1] - c2[1]
        d1 = (p1[0] - c1[0], p1[1] - c1[1])
        d2 = (p2[0] - c1[0], p2[1] - c1[1])
        orth = d1[0] * d2[0] + d1[1] * d2[1]
        if mj or mk or orth or p1 == p2:
            violations.append(
                Violation("family-geometry", "family fails momentum/orthogonality", (p1, c1, p2, c2))
            )
        fam_keys.add(frozenset({frozenset({p1, p2}), frozenset({c1, c2})}))

    arr = np.array(modes, dtype=np.int64)
    m = len(arr)
    off = int(np.abs(arr).max()) * 3 + 2
    stride = 2 * off + 1

    def encode(a):
        return (a[..., 0] + off) * stride + (a[..., 1] + off)

    keys = encode(arr)
    order = np.argsort(keys, kind="stable")
    sorted_keys = keys[order]

    n_triples = 0
    n_family = 0
    n_trivial = 0
    candidates: list[tuple[int, int, int, int]] = []
    for i2 in range(m):
        n2 = arr[i2]
        # n4 over the (n1, n3) grid
        n4 = arr[:, None, :] + arr[None, :, :] - n2
        k4 = encode(n4)
        idx = np.searchsorted(sorted_keys, k4)
        idx_c = np.clip(idx, 0, m - 1)
        found = sorted_keys[idx_c] == k4
        n_triples += m * m

        i1g, i3g = np.nonzero(found)
        if i1g.size:
            i4g = order[idx_c[i1g, i3g]]
            trivial = (i1g == i2) | (i3g == i2)
            n_trivial += int(trivial.sum())
            for a, b, c in zip(i1g[~trivial], i3g[~trivial], i4g[~trivial]):
                candidates.append((int(a), i2, int(b), int(c)))

        # P1 closure: orthogonal non-degenerate completions must be present
        d1 = arr - n2  # n1 - n2 rows
        d2 = n2 - arr  # n2 - n3 rows
        orth = d1[:, None, 0] * d2[None, :, 0] + d1[:, None, 1] * d2[None, :, 1]
        miss = (~found) & (orth == 0)
        if miss.any():
            i1m, i3m = np.nonzero(miss)
            keep = (i1m != i2) & (i3m != i2)
            for a, b in zip(i1m[keep], i3m[keep]):
                quad = (modes[a], modes[i2], modes[b], tuple(int(x) for x in n4[a, b]))
                violations.append(
                    Violation("P1", "orthogonal completion missing from the set", quad)
                )

    for (a, i2, b, c) in candidates:
        key = frozenset({frozenset({modes[a], modes[b]}), frozenset({modes[i2], modes[c]})})
        if key in fam_keys:
            n_family += 1
            continue
        d1 = (modes[a][0] - modes[i2][0], modes[a][1] - modes[i2][1])
        d2 = (modes[i2][0] - modes[b][0], modes[i2][1] - modes[b][1])
        kind = "P5/P6" if d1[0] * d2[0] + d1[1] * d2[1] == 0 else "P6"
        violations.append(
            Violation(kind, "momentum relation is neither trivial nor a family",
                      (modes[a], modes[i2], modes[b], modes[c]))
        )

    violations.sort(key=lambda v: (v.kind, v.detail, v.quadruple))
    return VerifyReport(
        ok=not violations,
        n_modes=m,
        n_triples_scanned=n_triples,
        n_family_relations=n_family,
        n_trivial_relations=n_trivial,
        violations=tuple(violations),
    )


def _unscaled_family_quadruples(placed, pos):
    out = []
    for fam in placed.genealogy.families():
        p1, p2 = (pos[e] for e in fam.parents)
        c1, c2 = (pos[e] for e in fam.children)
        out.append((p1, c1, p2, c2))
    return out


def _representations(D: int) -> list[Mode]:
    """All integer points (x, y) with x^2 + y^2 = D, sorted."""
    out = set()
    x = 0
    while x * x <= D:
        y2 = D - x * x
        y = math.isqrt(y2)
        if y * y == y2:
            out.update({(x, y), (x, -y), (-x, y), (-x, -y)})
        x += 1
    return sorted(out)


def place(
    gen: Genealogy,
    seed: int,
    box: int | None = None,
    retries: int = 400,
) -> PlacedSet:
    """Place the genealogy on Z^2 by randomized rejection.

    Generation 1 is sampled in [-box, box]^2 and pre-multiplied by
    2^(N-1).  Children of parents (a, b) sit at (a+b)/2 +- w where w is
    drawn among the integer points with |w| = |a-b|/2, excluding the
    degenerate +-(a-b)/2: any such w closes an exact rectangle on the
    parents' diagonal.  Fixing w to the perpendicular choice (a square)
    at consecutive transitions is forbidden territory: it forces
    grandchildren pair-sums onto grandparent pair-sums, a non-family
    momentum relation, so the draw must range over all representations.
    The premultiplier keeps everything integral: 2^(2(N-1)) divides
    |w|^2, hence 2^(N-1) divides w.  Samples containing the origin,
    duplicates, degenerate families, or any verifier violation are
    rejected and redrawn; the verifier makes acceptance exact.
    """
    N = gen.N
    if box is None:
        box = _default_box(N)
    rng = np.random.Generator(np.random.PCG64(seed))
    n_strings = 1 << (N - 1)
    mult = 1 << (N - 1)
    for _ in range(retries):
        pts = rng.integers(-box, box + 1, size=(n_strings, 2))
        cand = [(int(x) * mult, int(y) * mult) for x, y in pts]
        if (0, 0) in cand or len(set(cand)) < n_strings:
            continue
        positions: dict[Element, Mode] = {}
        for s, n in zip(gen.strings, cand):
            positions[(1, s)] = n
        ok = True
        for i in range(1, N):
            bit = 1 << (i - 1)
            for s in gen.strings:
                if s & bit:
                    continue
                a = positions[(i, s)]
                b = positions[(i, s | bit)]
                if a == b:
                    ok = False
                    break
                mid = ((a[0] + b[0]) // 2, (a[1] + b[1]) // 2)
                half = ((a[0] - b[0]) // 2, (a[1] - b[1]) // 2)
                sq = (-half[1], half[0])
                banned = {half, (-half[0], -half[1])}
                reps = [w for w in _representations(half[0] ** 2 + half[1] ** 2)
                        if w not in banned]
                # Avoid the whole symmetry orbit of the parent offset when
                # possible: square completions at consecutive transitions
                # recreate the grandparent identity, and reflections breed
                # axis-aligned differences whose chance right angles pile
                # up from five generations on.
                d4 = {
                    sq, (-sq[0], -sq[1]),
                    (half[0], -half[1]), (-half[0], half[1]),
                    (half[1], half[0]), (-half[1], -half[0]),
                }
                opts = (
                    [w for w in reps if w not in d4]
                    or [w for w in reps if w != sq and w != (-sq[0], -sq[1])]
                    or reps
                )
                w = opts[int(rng.integers(len(opts)))]
                positions[(i + 1, s)] = (mid[0] + w[0], mid[1] + w[1])
                positions[(i + 1, s | bit)] = (mid[0] - w[0], mid[1] - w[1])
            if not ok:
                break
        if not ok:
            continue
        vals = list(positions.values())
        if (0, 0) in vals or len(set(vals)) < len(vals):
            continue
        placed = PlacedSet(gen, positions, seed=seed)
        if verify_properties(placed).ok:
            return placed
    raise PlacementFailed(
        f"no valid placement for N={N}, seed={seed}, box={box} in {retries} tries"
    )


def _default_box(N: int) -> int:
    # Accidental right angles scale like |set|^3 / box; sizes found empirically.
    return {2: 8, 3: 25, 4: 200, 5: 2500, 6: 20000}.get(N, 20000 * 8 ** (N - 6))


@dataclass(frozen=True)
class GenerationStats:
    """Per-generation weighted sums S_i and size/extent diagnostics."""

    s: float
    sizes: tuple[int, ...]
    S: tuple[float, ...]
    min_abs: tuple[float, ...]
    max_abs: tuple[float, ...]
    R_empirical: float

    def ratio(self, i: int, j: int) -> float:
        """S_j / S_i with 1-based generation indices."""
        return self.S[j - 1] / self.S[i - 1]

    def as_dict(self) -> dict:
        return {
            "s": self.s,
            "sizes": list(self.sizes),
            "S": list(self.S),
            "min_abs": list(self.min_abs),
            "max_abs": list(self.max_abs),
            "R_empirical": self.R_empirical,
        }


def stats(placed: PlacedSet, s: float) -> GenerationStats:
    """Generation sums S_i = sum |n|^(2s) and the empirical radius min|n|/q."""
    if s <= 0:
        raise InvalidInput("stats needs s > 0")
    sizes, S, mins, maxs = [], [], [], []
    for i in range(1, placed.N + 1):
        gen_modes = placed.generation(i)
        absvals = [math.hypot(*n) for n in gen_modes]
        sizes.append(len(gen_modes))
        S.append(math.fsum(a ** (2.0 * s) for a in absvals))
        mins.append(min(absvals))
        maxs.append(max(absvals))
    return GenerationStats(
        s=s,
        sizes=tuple(sizes),
        S=tuple(S),
        min_abs=tuple(mins),
        max_abs=tuple(maxs),
        R_empirical=min(mins) / placed.q,
    )


# --- serialization -----------------------------------------------------------

def placed_to_json(placed: PlacedSet) -> str:
    """JSON document with the genealogy map and per-generation mode lists."""
    elements = [
        [el[0], el[1], n[0], n[1]] for el, n in sorted(placed.positions.items())
    ]
    doc = {
        "N": placed.N,
        "p": placed.p,
        "q": placed.q,
        "seed": placed.seed,
        "elements": elements,
        "generations": [
            [[j, k] for j, k in placed.generation(i)] for i in range(1, placed.N + 1)
        ],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def placed_from_json(text: str) -> PlacedSet:
    """Rebuild a placed set from its JSON document."""
    try:
        doc = json.loads(text)
        gen = build_genealogy(int(doc["N"]))
        positions = {
            (int(i), int(s)): (int(j), int(k)) for i, s, j, k in doc["elements"]
        }
        seed = doc.get("seed")
        placed = PlacedSet(
            genealogy=gen,
            positions=positions,
            p=int(doc["p"]),
            q=int(doc["q"]),
            seed=None if seed is None else int(seed),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInput(f"malformed placed-set document: {exc}") from exc
    if set(positions) != set(gen.elements()):
        raise InvalidInput("document does not cover the genealogy")
    return placed
