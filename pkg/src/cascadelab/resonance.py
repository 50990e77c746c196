"""Resonance functionals, class-d bookkeeping, and the divisor extrema.

For a momentum quadruple the frequency combination splits as
Omega_omega = a + omega^2 * b with integer a = sum +-j_i^2 and
b = sum +-k_i^2, so rational and interval frequencies evaluate exactly.
On sets scaled by diag(p, q) the split refines to
Omega = p^2 (A + B) + (omega^2 q^2 - p^2) B with unscaled integers A, B:
families have A + B = 0, which is why they resonate exactly at
omega = p/q and stay near-resonant for certified approximations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .diophantine import ApproxFunction, ContinuedFraction
from .errors import EmptyClass, InvalidInput
from .lattice import Mode, PotentialSpec, potential_coeff
from .lambda_set import PlacedSet

OmegaLike = int | float | Fraction | ContinuedFraction


@dataclass(frozen=True)
class Quadruple:
    n1: Mode
    n2: Mode
    n3: Mode
    n4: Mode

    def __post_init__(self):
        if (
            self.n1[0] - self.n2[0] + self.n3[0] - self.n4[0] != 0
            or self.n1[1] - self.n2[1] + self.n3[1] - self.n4[1] != 0
        ):
            raise InvalidInput("quadruple violates the momentum relation")

    @classmethod
    def from_triple(cls, n1: Mode, n2: Mode, n3: Mode) -> "Quadruple":
        return cls(n1, n2, n3, (n1[0] - n2[0] + n3[0], n1[1] - n2[1] + n3[1]))

    def modes(self) -> tuple[Mode, Mode, Mode, Mode]:
        return (self.n1, self.n2, self.n3, self.n4)

    def decomposition(self) -> tuple[int, int]:
        """(a, b) with Omega_omega = a + omega^2 b, exact integers."""
        j1, k1 = self.n1
        j2, k2 = self.n2
        j3, k3 = self.n3
        j4, k4 = self.n4
        return (
            j1 * j1 - j2 * j2 + j3 * j3 - j4 * j4,
            k1 * k1 - k2 * k2 + k3 * k3 - k4 * k4,
        )

    def is_trivial(self) -> bool:
        return (self.n1 == self.n2 and self.n3 == self.n4) or (
            self.n1 == self.n4 and self.n2 == self.n3
        )


@dataclass(frozen=True)
class OmegaValues:
    """The three resonance combinations of one quadruple."""

    omega_part: Fraction | float
    potential_part: float
    total: Fraction | float


def _potential_part(quad: Quadruple, potential: PotentialSpec | None) -> float:
    if potential is None:
        return 0.0
    signs = (1.0, -1.0, 1.0, -1.0)
    return math.fsum(s * potential_coeff(potential, n) for s, n in zip(signs, quad.modes()))


def omega_values(
    quad: Quadruple, omega: int | float | Fraction, potential: PotentialSpec | None = None
) -> OmegaValues:
    """Omega_omega, Omega_V and their sum; exact when omega is rational."""
    a, b = quad.decomposition()
    if isinstance(omega, (int, Fraction)):
        om: Fraction | float = a + Fraction(omega) ** 2 * b
    else:
        om = math.fsum((a, (omega * omega) * b))
    vpart = _potential_part(quad, potential)
    total = om if vpart == 0.0 else float(om) + vpart
    return OmegaValues(omega_part=om, potential_part=vpart, total=total)


def omega_interval(
    quad: Quadruple,
    lo: Fraction,
    hi: Fraction,
    potential: PotentialSpec | None = None,
) -> tuple[Fraction, Fraction]:
    """Exact enclosure of Omega_{omega,V} for omega in [lo, hi], lo >= 0."""
    if lo < 0 or hi < lo:
        raise InvalidInput("need 0 <= lo <= hi")
    a, b = quad.decomposition()
    vpart = Fraction(_potential_part(quad, potential))
    ends = sorted((a + lo * lo * b + vpart, a + hi * hi * b + vpart))
    return (ends[0], ends[1])


def _abs_bounds(iv: tuple[Fraction, Fraction]) -> tuple[Fraction, Fraction]:
    lo, hi = iv
    if lo <= 0 <= hi:
        return (Fraction(0), max(-lo, hi))
    return (min(abs(lo), abs(hi)), max(abs(lo), abs(hi)))


def _omega_enclosure(omega: OmegaLike) -> tuple[Fraction, Fraction] | None:
    if isinstance(omega, ContinuedFraction):
        return omega.enclosure()
    if isinstance(omega, (int, Fraction)):
        f = Fraction(omega)
        return (f, f)
    return None


def classify(quad: Quadruple, lam: PlacedSet | frozenset[Mode] | set[Mode]) -> int:
    """Class index d: how many of the four modes lie outside the set."""
    members = lam.mode_set() if isinstance(lam, PlacedSet) else frozenset(lam)
    return sum(1 for n in quad.modes() if n not in members)


@dataclass(frozen=True)
class ExtremumReport:
    """Certified extremum of |Omega_{omega,V}| over one class."""

    value: float
    witness: Quadruple
    n_quadruples: int
    certified: bool
    box: float | None = None
    excluded_best: float | None = None

    def as_dict(self) -> dict:
        return {
            "value": self.value,
            "witness": [list(n) for n in self.witness.modes()],
            "n_quadruples": self.n_quadruples,
            "certified": self.certified,
            "box": self.box,
            "excluded_best": self.excluded_best,
        }


def estimate_L1(
    placed: PlacedSet,
    omega: OmegaLike,
    potential: PotentialSpec | None = None,
    box: float | None = None,
) -> ExtremumReport:
    """Minimum of |Omega_{omega,V}| over quadruples with exactly one mode off the set.

    The fourth mode of such a quadruple is forced by momentum from a
    triple in the set, so the class is finite and enumerated completely.
    Candidates are screened in the split form p^2 (A+B) + eps B on the
    unscaled coordinates (exact float64 integer parts, bounded rounding
    slack) and the shortlist is re-evaluated in exact rational
    arithmetic.  `box` only restricts the reported minimum to
    |n4| <= box; the out-of-box completions are screened too, and the
    report is certified when none of them undercuts the reported value.
    """
    un = placed.unscaled_positions()
    elements = sorted(un)
    umodes = [un[e] for e in elements]
    smodes = [placed.positions[e] for e in elements]
    m = len(umodes)
    if m > 220:
        raise InvalidInput("class-1 enumeration expects |set| <= ~200")
    enc = _omega_enclosure(omega)
    if enc is None and not isinstance(omega, float):
        raise InvalidInput(f"unsupported frequency type {type(omega)!r}")
    if box is None:
        box = 2.0 * max(math.hypot(*n) for n in smodes) + 1.0

    p, q = placed.p, placed.q
    p2 = p * p
    if enc is not None:
        eps_lo = enc[0] * enc[0] * q * q - p2
        eps_hi = enc[1] * enc[1] * q * q - p2
        eps_f = float((eps_lo + eps_hi) / 2)
        eps_hw = float((eps_hi - eps_lo) / 2)
    else:
        eps_f = float(omega) ** 2 * q * q - p2
        eps_hw = 0.0

    arr = np.array(umodes, dtype=np.int64)
    key_off = int(np.abs(arr).max()) * 3 + 2
    stride = 2 * key_off + 1

    def encode(a):
        return (a[..., 0] + key_off) * stride + (a[..., 1] + key_off)

    keys = encode(arr)
    order = np.argsort(keys, kind="stable")
    sorted_keys = keys[order]

    jj = arr[:, 0].astype(np.float64) ** 2
    kk = arr[:, 1].astype(np.float64) ** 2
    vcoef = np.zeros(m)
    if potential is not None:
        vcoef = np.array([potential_coeff(potential, n) for n in smodes])

    def v_of_scaled(ju, ku):
        if potential is None:
            return 0.0
        return np.array(
            [
                [potential_coeff(potential, (p * int(a), q * int(b))) for a, b in zip(ra, rb)]
                for ra, rb in zip(ju, ku)
            ]
        )

    # first pass: float screen; keep per-block minima and the error scale
    blocks: list[tuple[int, np.ndarray, np.ndarray, np.ndarray]] = []
    n_in = 0
    n_out = 0
    max_absAB = 1.0
    max_absB = 1.0
    for i2 in range(m):
        n2 = arr[i2]
        n4 = arr[:, None, :] + arr[None, :, :] - n2
        k4 = encode(n4)
        idx = np.clip(np.searchsorted(sorted_keys, k4), 0, m - 1)
        off_set = sorted_keys[idx] != k4
        if not off_set.any():
            continue
        j4 = n4[..., 0].astype(np.float64)
        k4u = n4[..., 1].astype(np.float64)
        A = jj[:, None] - jj[i2] + jj[None, :] - j4 * j4
        B = kk[:, None] - kk[i2] + kk[None, :] - k4u * k4u
        screen = np.abs(p2 * (A + B) + eps_f * B)
        if potential is not None:
            screen = np.abs(
                p2 * (A + B)
                + eps_f * B
                + (vcoef[:, None] - vcoef[i2] + vcoef[None, :] - v_of_scaled(j4, k4u))
            )
        r4 = np.hypot(p * j4, q * k4u)
        inside = off_set & (r4 <= box)
        outside = off_set & (r4 > box)
        n_in += int(inside.sum())
        n_out += int(outside.sum())
        if off_set.any():
            max_absAB = max(max_absAB, float(np.abs(A + B)[off_set].max()))
            max_absB = max(max_absB, float(np.abs(B)[off_set].max()))
        blocks.append((i2, inside, outside, screen))
    if n_in == 0:
        raise EmptyClass(f"no class-1 quadruple with |n4| <= {box}")

    slack = 2.0 ** -48 * (p2 * max_absAB + abs(eps_f) * max_absB) + eps_hw * max_absB + 1e-12

    def block_min(mask_key: int) -> float:
        out = math.inf
        for _, inside, outside, screen in blocks:
            mask = inside if mask_key == 0 else outside
            if mask.any():
                out = min(out, float(np.where(mask, screen, np.inf).min()))
        return out

    def exact_abs_lower(quad: Quadruple) -> Fraction:
        if enc is not None:
            return _abs_bounds(omega_interval(quad, enc[0], enc[1], potential))[0]
        return Fraction(abs(float(omega_values(quad, omega, potential).total)))

    def refine(mask_key: int):
        thresh = block_min(mask_key) + 2.0 * slack
        out_val, out_wit = None, None
        for i2, inside, outside, screen in blocks:
            mask = inside if mask_key == 0 else outside
            pick = mask & (screen <= thresh)
            for i1, i3 in zip(*np.nonzero(pick)):
                quad = Quadruple.from_triple(smodes[i1], smodes[i2], smodes[i3])
                v = exact_abs_lower(quad)
                if (
                    out_val is None
                    or v < out_val
                    or (v == out_val and quad.modes() < out_wit.modes())
                ):
                    out_val, out_wit = v, quad
        return out_val, out_wit

    val, wit = refine(0)
    excluded_best = None
    certified = True
    if n_out:
        out_val, _ = refine(1)
        excluded_best = float(out_val)
        certified = out_val >= val
    return ExtremumReport(
        value=float(val),
        witness=wit,
        n_quadruples=n_in,
        certified=certified,
        box=box,
        excluded_best=excluded_best,
    )


def compute_U0(
    placed: PlacedSet,
    omega: OmegaLike,
    potential: PotentialSpec | None = None,
) -> ExtremumReport:
    """Maximum of |Omega_{omega,V}| over the nuclear families.

    The trivial quadruples complete the class with exact zeros, so the
    reported maximum is over the families (canonical parent/child
    orientation); certified upper bounds are used on interval input.
    """
    enc = _omega_enclosure(omega)
    best_val: Fraction | None = None
    best_wit: Quadruple | None = None
    fams = placed.family_quadruples()
    for (p1, c1, p2, c2) in fams:
        q = Quadruple(p1, c1, p2, c2)
        if enc is not None:
            v = _abs_bounds(omega_interval(q, enc[0], enc[1], potential))[1]
        else:
            v = Fraction(abs(float(omega_values(q, omega, potential).total)))
        if best_val is None or v > best_val or (v == best_val and q.modes() < best_wit.modes()):
            best_val, best_wit = v, q
    if best_wit is None:
        raise EmptyClass("the set has no nuclear families")
    return ExtremumReport(
        value=float(best_val),
        witness=best_wit,
        n_quadruples=len(fams),
        certified=True,
    )


def theta(N: int, R: float, omega: float, q: int, psi: ApproxFunction, s0: float) -> float:
    """Smallness functional 3^(2N) R^2 omega^3 q psi(q) + 4 (qR)^(-s0)."""
    if R <= 0 or q < 1:
        raise InvalidInput("theta needs R > 0 and q >= 1")
    return 9.0 ** N * R * R * omega ** 3 * q * psi.psi(q) + 4.0 * (q * R) ** (-s0)


@dataclass(frozen=True)
class ResonanceReport:
    """Divisor extrema with the scaling targets they are checked against."""

    L1: ExtremumReport
    U0: ExtremumReport
    L: float
    theta: float
    omega: float
    p: int
    q: int

    def as_dict(self) -> dict:
        return {
            "L1": self.L1.as_dict(),
            "U0": self.U0.as_dict(),
            "L": self.L,
            "theta": self.theta,
            "omega": self.omega,
            "p": self.p,
            "q": self.q,
            "L1_over_L": self.L1.value / self.L if self.L else math.inf,
            "U0_over_theta": self.U0.value / self.theta if self.theta else math.inf,
        }


def build_report(
    placed: PlacedSet,
    cf: ContinuedFraction,
    psi: ApproxFunction,
    L: float,
    s0: float,
    potential: PotentialSpec | None = None,
    box: float | None = None,
) -> ResonanceReport:
    """Assemble L1/U0/theta for a scaled set against a certified frequency."""
    if placed.p == 1 and placed.q == 1 and not cf.exact:
        # trivial scaling is only meaningful when omega itself is p/q = 1/1
        raise InvalidInput("report expects a scaled set")
    from .lambda_set import stats  # local import to avoid cycle at module load

    omega = cf.to_float()
    R_emp = stats(placed, 1.0).R_empirical
    return ResonanceReport(
        L1=estimate_L1(placed, cf, potential, box),
        U0=compute_U0(placed, cf, potential),
        L=L,
        theta=theta(placed.genealogy.N, R_emp, omega, placed.q, psi, s0),
        omega=omega,
        p=placed.p,
        q=placed.q,
    )
