"""Weak Birkhoff normal form on a finite Galerkin block.

The quartic part of the gauged Hamiltonian is stored as an explicit table
of monomials ``z_{n1} conj(z_{n2}) z_{n3} conj(z_{n4})``, each tagged by
how many of its four modes fall outside the support set.  The normalizing
change of coordinates removes exactly the class-1 block: its generator
divides each class-1 coefficient by ``i * Omega`` and the map itself is
realized as the time-(+1) flow of the generator, so the inverse is the
time-(-1) flow and every closeness claim is measurable.

Conventions: the equations of motion are ``dz_n/dt = i dH/d(conj z_n)``
and the quadratic energy of a mode is ``j^2 + omega^2 k^2 + V_n``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Iterable, Iterator

import numpy as np

from .errors import CapacityExceeded, InvalidInput, RadiusExceeded, SmallDivisor
from .lattice import FourierState, Mode, PotentialSpec, distance_l1, seeded_direction
from .odes import solve_field
from .resonance import Quadruple, omega_values

# Contraction ball for the generator flow; sweeps stay inside [2^-6, 2^-3].
ETA0 = 0.125

# gather/scatter passes over a monomial table work in blocks of this many
# entries, so the complex temporaries stay bounded on multi-million tables
SCATTER_CHUNK = 1 << 22

_FD_STEP = float(np.finfo(float).eps) ** (1.0 / 3.0)

# Hard caps keeping the dense monomial table in memory-friendly territory.
_MAX_MODES = 4000
_MAX_ENTRIES = 5_000_000


@dataclass(frozen=True)
class MonomialTable:
    """Quartic monomials ``coeff * z1 conj(z2) z3 conj(z4)`` over a fixed mode list.

    ``quads`` holds indices into ``modes``; ``cls[e]`` counts how many of
    the four modes of entry ``e`` lie outside ``support``.
    """

    modes: tuple[Mode, ...]
    support: frozenset[Mode]
    quads: np.ndarray
    coeff: np.ndarray
    cls: np.ndarray

    def __len__(self) -> int:
        return len(self.coeff)

    def entries(self) -> Iterator[tuple[tuple[Mode, Mode, Mode, Mode], complex, int]]:
        for e in range(len(self.coeff)):
            i1, i2, i3, i4 = (int(i) for i in self.quads[e])
            yield (
                (self.modes[i1], self.modes[i2], self.modes[i3], self.modes[i4]),
                complex(self.coeff[e]),
                int(self.cls[e]),
            )

    def select(self, *classes: int) -> "MonomialTable":
        mask = np.isin(self.cls, classes)
        return replace(
            self, quads=self.quads[mask], coeff=self.coeff[mask], cls=self.cls[mask]
        )

    def class_counts(self) -> dict[int, int]:
        vals, cnt = np.unique(self.cls, return_counts=True)
        return {int(v): int(c) for v, c in zip(vals, cnt)}

    def field(self, z: np.ndarray) -> np.ndarray:
        """Vector field i*dH/d(conj z) of the table on a dense mode vector."""
        # scatter sums run over every entry touching a component, so they
        # dominate the roundoff; accumulate in 80-bit extended precision.
        # chunked so the gather temporaries stay bounded on large tables
        out = np.zeros(len(z), dtype=np.clongdouble)
        for lo in range(0, len(self.coeff), SCATTER_CHUNK):
            sl = slice(lo, lo + SCATTER_CHUNK)
            i1, i2, i3, i4 = (self.quads[sl, s] for s in range(4))
            c = self.coeff[sl]
            np.add.at(out, i2, (c * z[i1] * z[i3] * np.conj(z[i4])).astype(np.clongdouble))
            np.add.at(out, i4, (c * z[i1] * np.conj(z[i2]) * z[i3]).astype(np.clongdouble))
        return 1j * out.astype(np.complex128)

    def value(self, z: np.ndarray) -> float:
        """Real value of the table Hamiltonian on a dense mode vector."""
        parts = []
        for lo in range(0, len(self.coeff), SCATTER_CHUNK):
            sl = slice(lo, lo + SCATTER_CHUNK)
            i1, i2, i3, i4 = (self.quads[sl, s] for s in range(4))
            terms = self.coeff[sl] * z[i1] * np.conj(z[i2]) * z[i3] * np.conj(z[i4])
            parts.append(complex(np.sum(terms)))
        return float(sum(parts).real) if parts else 0.0


def _mode_array(modes: Iterable[Mode]) -> np.ndarray:
    arr = np.array(sorted({(int(j), int(k)) for j, k in modes}), dtype=np.int64)
    if arr.ndim != 2:
        raise InvalidInput("empty mode set")
    return arr


def build_quartic(support: Iterable[Mode], truncation: Iterable[Mode]) -> MonomialTable:
    """All momentum-closed quartic monomials inside the truncation.

    Off-diagonal entries carry coefficient 1/2 and obey the exclusion
    ``n1 not in {n2, n4}``; diagonal entries ``(n,n,n,n)`` carry -1/2.
    """
    sup = frozenset((int(j), int(k)) for j, k in support)
    arr = _mode_array(truncation)
    modes = tuple((int(j), int(k)) for j, k in arr)
    if not sup <= set(modes):
        raise InvalidInput("truncation must contain the support set")
    m = len(modes)
    if m > _MAX_MODES:
        raise CapacityExceeded(f"truncation has {m} modes (cap {_MAX_MODES})")

    # Ordered pairs (i, j); the key encodes the pair sum n_i + n_j.
    ii, jj = np.divmod(np.arange(m * m, dtype=np.int64), m)
    sx = arr[ii, 0] + arr[jj, 0]
    sy = arr[ii, 1] + arr[jj, 1]
    span = 4 * int(np.abs(arr).max()) + 2
    key = sx * span + sy
    order = np.argsort(key, kind="stable")
    skey, pi, pj = key[order], ii[order], jj[order]
    uniq, starts, counts = np.unique(skey, return_index=True, return_counts=True)

    total = int(np.sum(counts * counts))
    if total > _MAX_ENTRIES:
        raise CapacityExceeded(f"{total} candidate monomials (cap {_MAX_ENTRIES})")

    # Expand every (pair13, pair24) combination within a sum group.
    cnt_at = np.repeat(counts, counts)            # group size, per sorted pair
    off_at = np.repeat(starts, counts)            # group offset, per sorted pair
    rep13 = np.repeat(np.arange(m * m), cnt_at)
    block_starts = np.concatenate(([0], np.cumsum(cnt_at)))[:-1]
    within = np.arange(total) - np.repeat(block_starts, cnt_at)
    rep24 = np.repeat(off_at, cnt_at) + within

    i1, i3 = pi[rep13], pj[rep13]
    i2, i4 = pi[rep24], pj[rep24]
    keep = (i1 != i2) & (i1 != i4)
    i1, i2, i3, i4 = i1[keep], i2[keep], i3[keep], i4[keep]

    diag = np.arange(m, dtype=np.int64)
    quads = np.concatenate(
        [
            np.stack([i1, i2, i3, i4], axis=1),
            np.stack([diag, diag, diag, diag], axis=1),
        ]
    ).astype(np.int32)
    coeff = np.concatenate([np.full(len(i1), 0.5), np.full(m, -0.5)]).astype(complex)

    off = np.array([0 if n in sup else 1 for n in modes], dtype=np.int8)
    cls = off[quads].sum(axis=1).astype(np.int8)
    return MonomialTable(modes=modes, support=sup, quads=quads, coeff=coeff, cls=cls)


def completion_modes(support: Iterable[Mode]) -> list[Mode]:
    """The support plus every momentum completion of one of its triples.

    This is the minimal truncation on which the class-1 block is fully
    represented: a fourth mode interacting with three support modes is
    always of the form a - b + c.
    """
    arr = _mode_array(support)
    m = len(arr)
    a = arr[:, None, None, :]
    b = arr[None, :, None, :]
    c = arr[None, None, :, :]
    comp = (a - b + c).reshape(-1, 2)
    out = {(int(j), int(k)) for j, k in comp}
    out.update((int(j), int(k)) for j, k in arr)
    return sorted(out)


def mode_energies(modes: Iterable[Mode], omega, potential: PotentialSpec | None = None) -> np.ndarray:
    """Quadratic energies j^2 + omega^2 k^2 + V_n as a float vector."""
    arr = _mode_array(modes)
    w2 = float(omega) ** 2
    e = arr[:, 0].astype(float) ** 2 + w2 * arr[:, 1].astype(float) ** 2
    if potential is not None:
        e = e + np.array([potential.coeff((int(j), int(k))) for j, k in arr])
    return e


def entry_divisors(table: MonomialTable, omega, potential: PotentialSpec | None) -> np.ndarray:
    """Omega_{omega,V} per entry, from the exact integer split a + omega^2 b."""
    arr = np.array(table.modes, dtype=np.int64)
    j2 = arr[:, 0] ** 2
    k2 = arr[:, 1] ** 2
    sgn = np.array([1, -1, 1, -1])
    a = (j2[table.quads] * sgn).sum(axis=1).astype(float)
    b = (k2[table.quads] * sgn).sum(axis=1).astype(float)
    out = a + float(omega) ** 2 * b
    if potential is not None:
        v = np.array([potential.coeff(n) for n in table.modes])
        out = out + (v[table.quads] * sgn).sum(axis=1)
    return out


def build_generator(
    table: MonomialTable,
    omega,
    potential: PotentialSpec | None = None,
    divisor_floor: float = 0.0,
) -> MonomialTable:
    """Generator killing the class-1 block: coefficients divided by i*Omega.

    Raises SmallDivisor when some class-1 divisor has modulus below
    ``divisor_floor`` (or vanishes outright), i.e. the instance does not
    satisfy the quasi-resonance lower bound it was planned with.
    """
    if divisor_floor < 0:
        raise InvalidInput("divisor_floor must be >= 0")
    sub = table.select(1)
    if len(sub) == 0:
        return replace(
            sub, coeff=sub.coeff.astype(complex), cls=sub.cls.copy()
        )
    om = entry_divisors(sub, omega, potential)
    worst = float(np.min(np.abs(om)))
    if worst == 0.0 or worst < divisor_floor:
        raise SmallDivisor(
            f"class-1 divisor {worst:.6g} below floor {divisor_floor:.6g}"
        )
    return replace(sub, coeff=sub.coeff / (1j * om))


@dataclass(frozen=True)
class NormalFormInstance:
    """A Galerkin block with its quartic table and normalizing generator."""

    table: MonomialTable
    generator: MonomialTable
    omega: float | Fraction
    potential: PotentialSpec | None
    divisor_floor: float
    flow_tol: float = 1e-14
    eta0: float = ETA0

    def support_modes(self) -> list[Mode]:
        return sorted(self.table.support)


def make_instance(
    support: Iterable[Mode],
    omega,
    potential: PotentialSpec | None = None,
    divisor_floor: float = 0.0,
    truncation: Iterable[Mode] | None = None,
    flow_tol: float = 1e-14,
) -> NormalFormInstance:
    """Build the quartic table and generator over a truncation.

    Default truncation is the support plus all of its momentum
    completions, the smallest block carrying the full class-1 dynamics.
    """
    sup = [(int(j), int(k)) for j, k in support]
    trunc = completion_modes(sup) if truncation is None else truncation
    table = build_quartic(sup, trunc)
    gen = build_generator(table, omega, potential, divisor_floor)
    return NormalFormInstance(
        table=table,
        generator=gen,
        omega=omega,
        potential=potential,
        divisor_floor=divisor_floor,
        flow_tol=flow_tol,
    )


def transform(
    w: FourierState,
    generator: MonomialTable,
    direction: int,
    tol: float = 1e-12,
    eta0: float = ETA0,
) -> FourierState:
    """Time-(direction) flow of the generator applied to a state.

    Modes outside the generator's truncation ride along unchanged.  The
    flow is rejected with RadiusExceeded if the ell^1 norm leaves the
    doubled ball of the initial state before time 1.
    """
    if direction not in (-1, 1):
        raise InvalidInput("direction must be +1 or -1")
    eta = w.l1()
    if eta > eta0:
        raise InvalidInput(f"state norm {eta:.6g} outside the ball eta0={eta0:g}")
    if eta == 0.0 or len(generator) == 0:
        return w.copy()

    modes = list(generator.modes)
    index = set(modes)
    extra = [(n, z) for n, z in w.items() if n not in index]
    z0 = w.to_vector(modes)
    sol = solve_field(lambda t, z: generator.field(z), (0.0, float(direction)), z0, tol)

    extra_l1 = math.fsum(abs(z) for _, z in extra)
    for t in np.linspace(0.0, float(direction), 33):
        if float(np.abs(sol.state(float(t))).sum()) + extra_l1 > 2.0 * eta:
            raise RadiusExceeded(f"generator flow left B(2*{eta:.6g})")

    out = FourierState.from_vector(modes, sol.state(float(direction)))
    for n, z in extra:
        out[n] = z
    return out


def quadratic_field(
    modes: list[Mode], omega, potential: PotentialSpec | None, z: np.ndarray
) -> np.ndarray:
    """Linear rotation field i*E_n*z_n of the quadratic Hamiltonian."""
    return 1j * mode_energies(modes, omega, potential) * z


def hamiltonian_value(instance: NormalFormInstance, w: FourierState) -> float:
    """Full Galerkin energy H^(2) + H^(4) of a state on the block."""
    modes = list(instance.table.modes)
    z = w.to_vector(modes)
    quad = float(
        np.sum(mode_energies(modes, instance.omega, instance.potential) * np.abs(z) ** 2)
    )
    return quad + instance.table.value(z)


def remainder_field(w: FourierState, instance: NormalFormInstance) -> FourierState:
    """The vector field left beyond the normal-form terms, at w.

    Evaluates ``DGamma(w)^{-1} X_H(Gamma(w))`` by central finite
    differences of the backward flow and subtracts the quadratic,
    class-0, and class->=2 fields at w.
    """
    table = instance.table
    modes = list(table.modes)
    if not set(w.amp) <= set(modes):
        raise InvalidInput("state support must lie inside the truncation")
    gen, tol = instance.generator, instance.flow_tol

    z_state = transform(w, gen, +1, tol, instance.eta0)
    z = z_state.to_vector(modes)
    v = quadratic_field(modes, instance.omega, instance.potential, z) + table.field(z)
    vnorm = float(np.linalg.norm(v))
    w_vec = w.to_vector(modes)
    if vnorm == 0.0:
        pullback = np.zeros_like(w_vec)
    else:
        h = _FD_STEP * max(float(np.linalg.norm(w_vec)), 1.0)
        vhat = v / vnorm
        # The perturbed points live near Gamma(w) in B(2 eta0); the
        # backward flow gets the doubled ball.
        plus = transform(
            FourierState.from_vector(modes, z + h * vhat), gen, -1, tol, 2 * instance.eta0
        ).to_vector(modes)
        minus = transform(
            FourierState.from_vector(modes, z - h * vhat), gen, -1, tol, 2 * instance.eta0
        ).to_vector(modes)
        pullback = vnorm * (plus - minus) / (2.0 * h)

    kept = (
        quadratic_field(modes, instance.omega, instance.potential, w_vec)
        + table.select(0).field(w_vec)
        + table.select(2, 3, 4).field(w_vec)
    )
    return FourierState.from_vector(modes, pullback - kept)


# --- algebraic invariants ---------------------------------------------------


def check_cancellation(
    table: MonomialTable,
    generator: MonomialTable,
    omega,
    potential: PotentialSpec | None = None,
) -> float:
    """Max residual of {H^(2), F} + H^(4,1) over class-1 entries.

    Pure coefficient arithmetic; the divisor is recomputed independently
    through the resonance module's definition path.
    """
    gen_by_quad = {}
    for quad, g, _ in generator.entries():
        gen_by_quad[quad] = gen_by_quad.get(quad, 0j) + g
    worst = 0.0
    for quad, c, d in table.entries():
        if d != 1:
            continue
        g = gen_by_quad.get(quad)
        if g is None:
            return math.inf
        om = omega_values(Quadruple(*quad), omega, potential).total
        worst = max(worst, abs(-1j * float(om) * g + c))
    return worst


def check_generator_commutes(generator: MonomialTable) -> float:
    """Max residual of {M, F} and {P, F} at the coefficient level.

    Both brackets reduce to (weight sums over slots) * coefficient with
    signs + - + -, so mass uses weight 1 and momentum uses weight n.
    """
    worst = 0.0
    for (n1, n2, n3, n4), g, _ in generator.entries():
        mass = 1 - 1 + 1 - 1
        pj = n1[0] - n2[0] + n3[0] - n4[0]
        pk = n1[1] - n2[1] + n3[1] - n4[1]
        worst = max(worst, abs(g) * max(abs(mass), abs(pj), abs(pk)))
    return worst


# --- eta sweeps -------------------------------------------------------------


def _fit_loglog(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    slope, intercept = np.polyfit(np.log(x), np.log(y), 1)
    return float(slope), float(math.exp(intercept))


def default_etas(lo: float = 2.0**-6, hi: float = 2.0**-3, steps: int = 8) -> np.ndarray:
    if not (0 < lo < hi < 1):
        raise InvalidInput("eta range must satisfy 0 < lo < hi < 1")
    return np.geomspace(lo, hi, steps)


def eta_sweep(
    instance: NormalFormInstance, etas: Iterable[float] | None = None, seed: int = 0
) -> dict:
    """Deviation ||Gamma(w) - w||_l1 against eta, with a log-log fit."""
    etas = np.asarray(list(default_etas() if etas is None else etas), dtype=float)
    direction = seeded_direction(instance.support_modes(), seed)
    devs = []
    for eta in etas:
        w = direction.scaled(eta)
        devs.append(distance_l1(transform(w, instance.generator, +1, instance.flow_tol), w))
    slope, prefactor = _fit_loglog(etas, np.array(devs))
    return {
        "eta": etas.tolist(),
        "deviation": devs,
        "slope": slope,
        "prefactor": prefactor,
    }


def remainder_sweep(
    instance: NormalFormInstance,
    etas: Iterable[float] | None = None,
    seed: int = 0,
    floor_factor: float = 50.0,
) -> dict:
    """Remainder-field norm against eta, with a measured noise floor.

    The floor is the remainder norm at eta = 2^-12, where the true signal
    (of order eta^5) is far below finite-difference and flow noise.  The
    dominant noise sources scale linearly with eta (the FD direction is
    dominated by the linear field), so the floor is extrapolated linearly
    and only etas clearing floor_factor times the model enter the fit.
    """
    etas = np.asarray(list(default_etas() if etas is None else etas), dtype=float)
    direction = seeded_direction(instance.support_modes(), seed)
    eta_floor = 2.0**-12
    floor = remainder_field(direction.scaled(eta_floor), instance).l1()
    norms = np.array(
        [remainder_field(direction.scaled(eta), instance).l1() for eta in etas]
    )
    noise_model = max(floor, 1e-300) * etas / eta_floor
    used = norms >= floor_factor * noise_model
    if int(used.sum()) >= 2:
        slope, prefactor = _fit_loglog(etas[used], norms[used])
    else:
        slope, prefactor = math.nan, math.nan
    return {
        "eta": etas.tolist(),
        "norm": norms.tolist(),
        "noise_floor": floor,
        "noise_model": noise_model.tolist(),
        "used": used.tolist(),
        "slope": slope,
        "prefactor": prefactor,
    }
