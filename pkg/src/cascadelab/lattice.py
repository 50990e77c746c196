"""Modes, weighted eigenvalues, convolution potentials, and sparse states.

A mode is a plain integer pair ``(j, k)``.  On the torus with aspect
frequency ``omega`` the Laplacian eigenvalue of the mode is
``j**2 + omega**2 * k**2``; passing ``omega`` as a ``Fraction`` keeps the
whole computation exact.  States are sparse complex amplitude maps.  All
reductions run over modes in lexicographic order and accumulate with
``math.fsum``, so every reported number is reproducible bit for bit.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Mapping

import numpy as np

from .errors import InvalidInput

Mode = tuple[int, int]


def eigenvalue(n: Mode, omega):
    """Weighted eigenvalue ``|n|_omega^2 = j^2 + omega^2 k^2``.

    The arithmetic follows the type of ``omega``: ``Fraction`` gives the
    exact rational value, ``float`` (or an mpmath number) the rounded one.
    """
    j, k = n
    return j * j + omega * omega * (k * k)


def mode_abs(n: Mode) -> float:
    """Euclidean length |n|."""
    return math.hypot(n[0], n[1])


def bracket(n: Mode) -> float:
    """Japanese bracket ``<n> = max(1, |n|)`` used by the Sobolev weights."""
    return max(1.0, mode_abs(n))


# --- convolution potential ------------------------------------------------

_MASK64 = (1 << 64) - 1


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def _zigzag(v: int) -> int:
    return 2 * v if v >= 0 else -2 * v - 1


def _sign_of(n: Mode, seed: int) -> int:
    # Signs are even under n -> -n so a decay potential stays real-valued.
    m = max(n, (-n[0], -n[1]))
    h = _splitmix64(seed & _MASK64)
    h = _splitmix64(h ^ _zigzag(m[0]))
    h = _splitmix64(h ^ _zigzag(m[1]))
    return 1 if h & 1 == 0 else -1


@dataclass(frozen=True)
class PotentialSpec:
    """Fourier data of the convolution potential.

    kind = "zero"
        Identically zero.
    kind = "table"
        Explicit finite real table; modes off the table carry 0.
    kind = "decay"
        ``amplitude * sign(n) * <n>**(-s0)`` with a deterministic
        seed-keyed sign in {-1, +1}.
    """

    kind: str = "zero"
    s0: float = 4.0
    amplitude: float = 0.0
    seed: int = 0
    table: Mapping[Mode, float] | None = None

    def __post_init__(self):
        if self.kind not in ("zero", "table", "decay"):
            raise InvalidInput(f"unknown potential kind {self.kind!r}")
        if self.kind == "decay" and self.s0 <= 0:
            raise InvalidInput("decay potential requires s0 > 0")
        if self.kind == "decay" and self.amplitude < 0:
            raise InvalidInput("decay amplitude must be >= 0")
        if self.kind == "table" and self.table is None:
            raise InvalidInput("table potential requires a table")

    def coeff(self, n: Mode) -> float:
        if self.kind == "zero":
            return 0.0
        if self.kind == "table":
            return float(self.table.get(tuple(n), 0.0))
        return self.amplitude * _sign_of(n, self.seed) * bracket(n) ** (-self.s0)

    def sup_abs(self) -> float:
        """Supremum of |V_n| over all modes."""
        if self.kind == "zero":
            return 0.0
        if self.kind == "table":
            return max((abs(v) for v in self.table.values()), default=0.0)
        return self.amplitude


def potential_coeff(spec: PotentialSpec, n: Mode) -> float:
    """Fourier coefficient V_n of the potential."""
    return spec.coeff(n)


# --- sparse states ----------------------------------------------------------


class FourierState:
    """Sparse map from modes to complex amplitudes.

    The class is a thin wrapper over a dict; it exists to pin down the
    deterministic iteration order and the serialization format.
    """

    __slots__ = ("amp",)

    def __init__(self, amp: Mapping[Mode, complex] | Iterable[tuple[Mode, complex]] | None = None):
        self.amp: dict[Mode, complex] = {}
        if amp:
            items = amp.items() if isinstance(amp, Mapping) else amp
            for n, z in items:
                self.amp[(int(n[0]), int(n[1]))] = complex(z)

    def __len__(self) -> int:
        return len(self.amp)

    def __contains__(self, n: Mode) -> bool:
        return tuple(n) in self.amp

    def __getitem__(self, n: Mode) -> complex:
        return self.amp.get(tuple(n), 0j)

    def __setitem__(self, n: Mode, z: complex) -> None:
        self.amp[tuple(n)] = complex(z)

    def __iter__(self) -> Iterator[Mode]:
        return iter(self.support())

    def __eq__(self, other) -> bool:
        return isinstance(other, FourierState) and self.amp == other.amp

    def __repr__(self) -> str:
        return f"FourierState({len(self.amp)} modes)"

    def support(self) -> list[Mode]:
        return sorted(self.amp)

    def items(self) -> list[tuple[Mode, complex]]:
        return [(n, self.amp[n]) for n in self.support()]

    def copy(self) -> "FourierState":
        return FourierState(self.amp)

    def scaled(self, c: complex) -> "FourierState":
        return FourierState({n: c * z for n, z in self.amp.items()})

    def add_scaled(self, c: complex, other: "FourierState") -> "FourierState":
        out = self.copy()
        for n, z in other.amp.items():
            out.amp[n] = out.amp.get(n, 0j) + c * z
        return out

    # reductions (fixed order, compensated summation)

    def l1(self) -> float:
        return math.fsum(abs(self.amp[n]) for n in self.support())

    def mass(self) -> float:
        return math.fsum(abs(self.amp[n]) ** 2 for n in self.support())

    def momentum(self) -> tuple[float, float]:
        sup = self.support()
        pj = math.fsum(n[0] * abs(self.amp[n]) ** 2 for n in sup)
        pk = math.fsum(n[1] * abs(self.amp[n]) ** 2 for n in sup)
        return (pj, pk)

    def sobolev_sq(self, s: float) -> float:
        return math.fsum(
            bracket(n) ** (2.0 * s) * abs(self.amp[n]) ** 2 for n in self.support()
        )

    # dense bridge for the integrators

    def to_vector(self, modes: list[Mode]) -> np.ndarray:
        return np.array([self.amp.get(n, 0j) for n in modes], dtype=complex)

    @staticmethod
    def from_vector(modes: list[Mode], vec: np.ndarray) -> "FourierState":
        return FourierState(dict(zip(modes, (complex(z) for z in vec))))

    # serialization: one JSON object per line, lexicographic mode order

    def to_json_lines(self) -> str:
        lines = []
        for (j, k), z in self.items():
            lines.append(
                json.dumps({"j": j, "k": k, "re": z.real, "im": z.imag}, separators=(",", ":"))
            )
        return "\n".join(lines) + ("\n" if lines else "")

    @staticmethod
    def from_json_lines(text: str) -> "FourierState":
        amp = {}
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            amp[(int(rec["j"]), int(rec["k"]))] = complex(rec["re"], rec["im"])
        return FourierState(amp)


@dataclass(frozen=True)
class NormReport:
    """The four conserved-or-monitored functionals of a state."""

    l1: float
    mass: float
    momentum: tuple[float, float]
    hs_sq: float


def norms(state: FourierState, s: float) -> NormReport:
    """ell^1, mass, momentum, and squared H^s norm of a state."""
    return NormReport(state.l1(), state.mass(), state.momentum(), state.sobolev_sq(s))


def distance_l1(a: FourierState, b: FourierState) -> float:
    """ell^1 distance, summed in lexicographic order over the joint support."""
    sup = sorted(set(a.amp) | set(b.amp))
    return math.fsum(abs(a[n] - b[n]) for n in sup)


def gauge(state: FourierState, t: float, direction: int = 1) -> FourierState:
    """Multiply by the mass-gauge phase ``exp(direction * 2i * mass * t)``.

    direction=+1 maps a solution of the gauged system to the ungauged one
    at time ``t``; direction=-1 inverts it.  Mass is computed from the
    state itself, so a gauge round trip is the identity up to rounding.
    """
    if direction not in (-1, 1):
        raise InvalidInput("gauge direction must be +1 or -1")
    phase = complex(np.exp(1j * (2.0 * direction * state.mass() * t)))
    return state.scaled(phase)


def seeded_direction(modes: list[Mode], seed: int) -> FourierState:
    """Deterministic pseudo-random state with unit ell^1 norm on ``modes``."""
    if not modes:
        raise InvalidInput("seeded_direction needs a nonempty mode list")
    rng = np.random.Generator(np.random.PCG64(seed))
    re = rng.standard_normal(len(modes))
    im = rng.standard_normal(len(modes))
    vec = re + 1j * im
    state = FourierState(dict(zip([tuple(m) for m in modes], vec)))
    return state.scaled(1.0 / state.l1())
