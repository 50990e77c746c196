"""Nearest-neighbor toy model: field, invariants, sliders, cascades.

The model couples N complex amplitudes through
db_i/dt = -i |b_i|^2 b_i + 2i conj(b_i) (b_{i-1}^2 + b_{i+1}^2)
with zero boundary conditions.  Mass sum |b_i|^2 and the energy
h = 1/2 sum |b_i|^4 - sum_i (conj(b_i)^2 b_{i+1}^2 + b_i^2 conj(b_{i+1})^2)
are conserved.  A cascade orbit starts concentrated on mode 3 and hands
mass down the chain to mode N-1; the finder below shoots for it by
bisecting the initial seed amplitudes one junction at a time, on a
single true trajectory.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import CascadeNotFound, InvalidInput
from .lattice import FourierState
from .lambda_set import PlacedSet
from .odes import Solution, solve_field

# Slider phase: with rho^3 = 1 the two-mode heteroclinic below is exact.
# Only the e^{-2pi i/3} branch matches the given profile signs.
SLIDER_RHO = cmath.exp(-2j * math.pi / 3)


def field(b: np.ndarray) -> np.ndarray:
    """Right-hand side of the toy model with zero boundary."""
    b = np.asarray(b, dtype=complex)
    pad = np.zeros(len(b) + 2, dtype=complex)
    pad[1:-1] = b
    neigh = pad[:-2] ** 2 + pad[2:] ** 2
    return -1j * np.abs(b) ** 2 * b + 2j * np.conj(b) * neigh


def mass(b: np.ndarray) -> float:
    return float(np.sum(np.abs(b) ** 2))


def hamiltonian(b: np.ndarray) -> float:
    b = np.asarray(b, dtype=complex)
    quart = 0.5 * np.sum(np.abs(b) ** 4)
    cross = np.sum(np.conj(b[:-1]) ** 2 * b[1:] ** 2)
    return float(quart - 2.0 * cross.real)


@dataclass
class Trajectory:
    """Dense toy-model trajectory with conservation diagnostics."""

    solution: Solution
    b0: np.ndarray
    tol: float

    @property
    def t_end(self) -> float:
        return self.solution.t1

    def state(self, t: float) -> np.ndarray:
        return self.solution.state(t)

    def sample(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        ts = np.linspace(self.solution.t0, self.solution.t1, n)
        return ts, self.solution.states(ts)

    def drift(self, n: int = 33) -> tuple[float, float]:
        """Worst relative drift of (mass, h) over n sample points."""
        _, states = self.sample(n)
        m0, h0 = mass(self.b0), hamiltonian(self.b0)
        dm = max(abs(mass(s) - m0) for s in states) / max(m0, 1e-300)
        dh = max(abs(hamiltonian(s) - h0) for s in states) / max(abs(h0), 1e-300)
        return dm, dh


def integrate(b0: np.ndarray, t_end: float, tol: float = 1e-10) -> Trajectory:
    sol = solve_field(lambda t, b: field(b), (0.0, t_end), np.asarray(b0, complex), tol)
    return Trajectory(solution=sol, b0=np.asarray(b0, complex), tol=tol)


def slider_orbit(t: float, N: int = 2, start: int = 1) -> np.ndarray:
    """Closed-form two-mode heteroclinic at modes (start, start+1).

    b_start = e^{-it} rho / sqrt(1 + e^{2 sqrt3 t}),
    b_start+1 = e^{-it} rho^2 / sqrt(1 + e^{-2 sqrt3 t}).
    """
    if not 1 <= start <= N - 1:
        raise InvalidInput("slider needs two adjacent modes inside the chain")
    r3 = 2.0 * math.sqrt(3.0) * t
    b = np.zeros(N, dtype=complex)
    rot = cmath.exp(-1j * t)
    b[start - 1] = rot * SLIDER_RHO / math.sqrt(1.0 + math.exp(min(r3, 700.0)))
    b[start] = rot * SLIDER_RHO ** 2 / math.sqrt(1.0 + math.exp(min(-r3, 700.0)))
    return b


def scale_state(b: np.ndarray, lam: float) -> np.ndarray:
    if lam < 1:
        raise InvalidInput("scaling expects lambda >= 1")
    return np.asarray(b, complex) / lam


@dataclass
class ScaledTrajectory:
    """View of a trajectory under b^lam(t) = lam^-1 b(lam^-2 t)."""

    base: Trajectory
    lam: float

    @property
    def t_end(self) -> float:
        return self.base.t_end * self.lam ** 2

    def state(self, t: float) -> np.ndarray:
        return self.base.state(t / self.lam ** 2) / self.lam


def scale_orbit(traj: Trajectory, lam: float) -> ScaledTrajectory:
    if lam < 1:
        raise InvalidInput("scaling expects lambda >= 1")
    return ScaledTrajectory(base=traj, lam=lam)


def embed(b: np.ndarray, placed: PlacedSet, lam: float) -> FourierState:
    """Fourier state with amplitude lam^-1 b_i on every generation-i mode."""
    b = np.asarray(b, complex)
    if len(b) != placed.N:
        raise InvalidInput(f"state has {len(b)} modes, set has {placed.N} generations")
    if lam < 1:
        raise InvalidInput("scaling expects lambda >= 1")
    st = FourierState()
    for i in range(1, placed.N + 1):
        amp = complex(b[i - 1]) / lam
        for n in placed.generation(i):
            st[n] = amp
    return st


@dataclass
class CascadeOrbit:
    """A single-trajectory energy cascade from mode 3 to mode N-1."""

    N: int
    delta: float
    b0: np.ndarray
    T0: float
    start_fraction: float
    end_fraction: float
    seeds: tuple[float, ...]
    tol: float
    trajectory: Trajectory
    stage_peaks: tuple[tuple[int, float, float], ...] = dc_field(default_factory=tuple)

    def as_dict(self) -> dict:
        return {
            "N": self.N,
            "delta": self.delta,
            "T0": self.T0,
            "start_fraction": self.start_fraction,
            "end_fraction": self.end_fraction,
            "seeds": list(self.seeds),
            "tol": self.tol,
            "stage_peaks": [list(p) for p in self.stage_peaks],
            "b0_re": [z.real for z in self.b0],
            "b0_im": [z.imag for z in self.b0],
        }


def _initial_state(N: int, amps: list[float]) -> np.ndarray:
    b = np.zeros(N, dtype=complex)
    for i, a in enumerate(amps, start=4):
        b[i - 1] = a * SLIDER_RHO ** i
    # renormalize so total mass is 1 with the bulk on mode 3
    b[2] = SLIDER_RHO ** 3 * math.sqrt(max(1.0 - sum(a * a for a in amps), 0.0))
    return b


def _fractions(traj: Trajectory, n: int) -> tuple[np.ndarray, np.ndarray]:
    ts, states = traj.sample(n)
    m = np.sum(np.abs(states) ** 2, axis=1)
    return ts, np.abs(states) ** 2 / m[:, None]


def _peak(ts: np.ndarray, f: np.ndarray) -> tuple[float, float]:
    i = int(np.argmax(f))
    return float(ts[i]), float(f[i])


def find_cascade(
    N: int,
    delta: float,
    eps: float = 1e-3,
    tol: float = 1e-10,
    bisection_budget: int = 48,
) -> CascadeOrbit:
    """Shoot for a cascade orbit with a geometric ladder of junction seeds.

    The state starts with mass ~1 on mode 3 and seed amplitudes
    eps * rho^i on modes 4, 5, ..., N-1.  Decreasing seeds make the
    junctions fire strictly in order: each stage hands its mass off
    before the next seed activates, and the handoff residue stays of the
    order of the seed mass.  rho starts at 1/2 and is halved (up to the
    budget) if a run misses the 1-delta concentration at either end.
    """
    if not 0 < delta < 1:
        raise InvalidInput("need 0 < delta < 1")
    if not 5 <= N <= 9:
        raise InvalidInput("cascades are searched for 5 <= N <= 9")
    target = N - 1

    def run(cur: list[float], t_end: float) -> tuple[Trajectory, np.ndarray, np.ndarray]:
        traj = integrate(_initial_state(N, cur), t_end, tol)
        ts, fr = _fractions(traj, 1600 + 400 * N)
        return traj, ts, fr

    def horizon(cur: list[float]) -> float:
        # each junction runs ~ log(1/seed)/sqrt(3) plus slosh margin
        t = 10.0
        for a in cur:
            t += 2.0 * (abs(math.log(max(a, 1e-16))) / math.sqrt(3.0) + 6.0)
        return t

    rho = 0.5
    attempts = max(1, min(bisection_budget, 6)) if N > 5 else 1
    start_frac = end_frac = 0.0
    for _ in range(attempts):
        amps = [eps * rho ** i for i in range(target - 3)]
        traj, ts, fr = run(amps, horizon(amps))
        T0, end_frac = _peak(ts, fr[:, target - 1])
        if end_frac < 1.0 - delta:
            # the last stage may clip at the horizon; extend once
            traj, ts, fr = run(amps, 1.5 * horizon(amps))
            T0, end_frac = _peak(ts, fr[:, target - 1])
        start_frac = float(fr[0, 2])
        if start_frac >= 1.0 - delta and end_frac >= 1.0 - delta:
            break
        rho /= 2.0
    else:
        raise CascadeNotFound(
            f"achieved fractions {start_frac:.4f} -> {end_frac:.4f} miss 1-delta"
        )

    peaks = []
    for i in range(4, target + 1):
        pt, pv = _peak(ts, fr[:, i - 1])
        peaks.append((i, pt, pv))
    return CascadeOrbit(
        N=N,
        delta=delta,
        b0=traj.b0,
        T0=T0,
        start_fraction=start_frac,
        end_fraction=end_frac,
        seeds=tuple(amps),
        tol=tol,
        trajectory=traj,
        stage_peaks=tuple(peaks),
    )
