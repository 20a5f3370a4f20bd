"""Deterministic Lindblad master equation, integrated with fixed-step RK4.

Lindblad operators carry their rate, so with the bare lowering operator time
is measured in units of the inverse decay rate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .nmr import CONSTANTS
from .quantum import as_operator, dagger, is_hermitian

TRACE_DRIFT_LIMIT = 1e-6


class OracleInstabilityError(FloatingPointError):
    """The integrator lost trace; the step is too large for the problem."""


def lindblad_rhs(rho, H, L, hbar: float = CONSTANTS.hbar) -> np.ndarray:
    """``d rho / dt`` for Hamiltonian ``H`` (joules) and one or more Lindblad operators.

    ``L`` may be a single ``(2, 2)`` operator or a sequence of them.
    """
    rho = np.asarray(rho, dtype=complex)
    H = np.asarray(H, dtype=complex)
    out = (-1j / hbar) * (H @ rho - rho @ H)
    Ls = np.asarray(L, dtype=complex)
    if Ls.ndim == 2:
        Ls = Ls[None]
    for op in Ls:
        op_dag = dagger(op)
        ltl = op_dag @ op
        out = out + op @ rho @ op_dag - 0.5 * (ltl @ rho + rho @ ltl)
    return out


@dataclass
class MasterEquationProblem:
    h: np.ndarray
    lindblads: Sequence[np.ndarray]
    rho0: np.ndarray
    duration: float
    steps: int
    hbar: float = field(default=CONSTANTS.hbar)

    def __post_init__(self):
        self.h = as_operator(self.h)
        self.lindblads = [as_operator(op) for op in self.lindblads]
        self.rho0 = as_operator(self.rho0)
        if not is_hermitian(self.rho0):
            raise ValueError("rho0 must be Hermitian")
        if abs(np.trace(self.rho0) - 1.0) > 1e-12:
            raise ValueError(f"rho0 must have unit trace, got {np.trace(self.rho0)}")
        if self.steps < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")
        if not self.duration > 0:
            raise ValueError(f"duration must be positive, got {self.duration}")

    @property
    def dt(self) -> float:
        return self.duration / self.steps

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.steps + 1) * self.dt


def integrate_master(problem: MasterEquationProblem) -> np.ndarray:
    """Return ``rho(t_k)`` for ``k = 0..steps`` as an array of shape ``(steps + 1, 2, 2)``.

    Raises
    ------
    OracleInstabilityError
        If the trace drifts from its initial value by more than ``1e-6``.
    """
    dt = problem.dt
    H = problem.h
    Ls = np.array(problem.lindblads, dtype=complex).reshape(-1, 2, 2)
    hbar = problem.hbar

    def f(r):
        return lindblad_rhs(r, H, Ls, hbar)

    out = np.empty((problem.steps + 1, 2, 2), dtype=complex)
    rho = problem.rho0.copy()
    tr0 = np.trace(rho).real
    out[0] = rho
    for k in range(1, problem.steps + 1):
        k1 = f(rho)
        k2 = f(rho + 0.5 * dt * k1)
        k3 = f(rho + 0.5 * dt * k2)
        k4 = f(rho + dt * k3)
        rho = rho + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        drift = abs(np.trace(rho) - tr0)
        if not np.isfinite(drift) or drift > TRACE_DRIFT_LIMIT:
            raise OracleInstabilityError(f"trace drifted by {drift:.3e} at step {k}; reduce dt")
        out[k] = rho
    return out
