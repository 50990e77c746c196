"""Thin wrapper around scipy's DOP853 for complex-valued fields.

States are flat complex vectors; the wrapper stacks them into real
vectors (robust across scipy versions), integrates with matched
rtol/atol, and exposes dense evaluation.  Failures surface as
StepSizeUnderflow instead of scipy's status codes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp

from .errors import InvalidInput, StepSizeUnderflow


def _to_real(z: np.ndarray) -> np.ndarray:
    return np.concatenate([z.real, z.imag])


def _to_complex(y: np.ndarray) -> np.ndarray:
    half = y.shape[0] // 2
    return y[:half] + 1j * y[half:]


@dataclass
class Solution:
    """Dense solution of a complex ODE on [t0, t1]."""

    t0: float
    t1: float
    _sol: Callable[[float], np.ndarray]
    n_steps: int

    def state(self, t: float) -> np.ndarray:
        if not (min(self.t0, self.t1) - 1e-9 <= t <= max(self.t0, self.t1) + 1e-9):
            raise InvalidInput(f"t={t} outside the integrated interval")
        return _to_complex(np.asarray(self._sol(t)))

    def states(self, ts: np.ndarray) -> np.ndarray:
        return np.stack([self.state(float(t)) for t in ts])


def solve_field(
    field: Callable[[float, np.ndarray], np.ndarray],
    t_span: tuple[float, float],
    z0: np.ndarray,
    tol: float,
    max_step: float = np.inf,
) -> Solution:
    """Integrate dz/dt = field(t, z) with DOP853 and dense output."""
    if not 1e-14 <= tol <= 1e-3:
        raise InvalidInput(f"tolerance {tol} outside the supported range")
    z0 = np.asarray(z0, dtype=complex)

    def rhs(t, y):
        dz = field(t, _to_complex(y))
        return _to_real(np.asarray(dz, dtype=complex))

    # scipy clamps rtol below 100*eps with a warning; do it silently here
    # so tol=1e-14 keeps meaning "absolute accuracy 1e-14".
    res = solve_ivp(
        rhs,
        t_span,
        _to_real(z0),
        method="DOP853",
        rtol=max(tol, 2.3e-14),
        atol=tol,
        dense_output=True,
        max_step=max_step,
    )
    if not res.success:
        raise StepSizeUnderflow(f"integrator failed: {res.message}")
    return Solution(t0=t_span[0], t1=t_span[1], _sol=res.sol, n_steps=len(res.t))
