"""Single spin-1/2 liquid-NMR qubit: Hamiltonians, gates, thermal state, magnetization.

Sign conventions
----------------
The free Hamiltonian is ``H0 = -hbar * omega0 * Iz`` so that ``|0>`` is the
lower level with energy ``-hbar*omega0/2``.  Free evolution under ``H0`` is
``exp(i omega0 Iz t)``, which is also the map from the rotating frame back to
the laboratory frame used by :func:`to_lab_frame`.

The ``Y`` gate is ``exp(-i (pi/4) sigma_y)``.  The matrix often printed for
it, ``[[1, -1], [-1, 1]] / sqrt(2)``, is singular and therefore not a gate.

Magnetization is reported as ``<I_axis> = tr(I_axis rho)`` with unit
proportionality constant.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .quantum import (
    ALGEBRA_TOL,
    IDENTITY,
    IX,
    IY,
    IZ,
    SIGMA_Z,
    dagger,
    is_unitary,
    matrix_exponential_su2,
    trace_expectation,
)

HIGH_TEMPERATURE_LIMIT = 1e-2


@dataclass(frozen=True)
class PhysicalConstants:
    """CODATA 2018 exact-by-definition constants in SI units."""

    hbar: float = 1.054571817e-34  # J s
    k_boltzmann: float = 1.380649e-23  # J / K

    def __post_init__(self):
        if self.hbar <= 0 or self.k_boltzmann <= 0:
            raise ValueError("physical constants must be positive")


CONSTANTS = PhysicalConstants()


class Frame(str, enum.Enum):
    LABORATORY = "laboratory"
    ROTATING = "rotating"


class Gate(str, enum.Enum):
    X = "X"
    Y = "Y"
    Z = "Z"
    NONE = "None"


@dataclass(frozen=True)
class NmrParameters:
    """Parameters of the spin and the rf drive.

    Parameters
    ----------
    omega0 : float
        Larmor angular frequency in rad/s.
    temperature : float
        Sample temperature in K.
    omega1 : float
        Rabi angular frequency of the rf field in rad/s.
    phi : float
        rf phase in rad.
    """

    omega0: float = 5e8
    temperature: float = 300.0
    omega1: float = 1e5
    phi: float = 0.0
    constants: PhysicalConstants = CONSTANTS

    def __post_init__(self):
        if not self.omega0 > 0:
            raise ValueError(f"omega0 must be positive, got {self.omega0}")
        if not self.temperature > 0:
            raise ValueError(f"temperature must be positive, got {self.temperature}")
        if self.polarization >= HIGH_TEMPERATURE_LIMIT:
            raise ValueError(
                f"hbar*omega0/(k_B*T) = {self.polarization:.3e} violates the "
                f"high-temperature condition (< {HIGH_TEMPERATURE_LIMIT:g})"
            )

    @property
    def polarization(self) -> float:
        """Dimensionless ratio ``hbar*omega0 / (k_B*T)``."""
        c = self.constants
        return c.hbar * self.omega0 / (c.k_boltzmann * self.temperature)

    @property
    def signal_amplitude(self) -> float:
        """``hbar*omega0 / (4 k_B T)``, the magnitude of ``<I_y>`` after an X gate."""
        return 0.25 * self.polarization


def free_hamiltonian(p: NmrParameters) -> np.ndarray:
    """``H0 = -hbar*omega0*Iz`` in joules."""
    return -p.constants.hbar * p.omega0 * IZ


def rotating_frame_hamiltonian(p: NmrParameters) -> np.ndarray:
    """Resonant rf Hamiltonian in the rotating frame, ``hbar*omega1*(cos(phi) Ix + sin(phi) Iy)``."""
    return p.constants.hbar * p.omega1 * (np.cos(p.phi) * IX + np.sin(p.phi) * IY)


def gate_from_pulse(omega1: float, tau: float, phi: float) -> np.ndarray:
    """Propagator of a rectangular resonant pulse of length ``tau``."""
    if not np.isfinite(omega1 * tau):
        raise ValueError("omega1 * tau must be finite")
    axis = np.cos(phi) * IX + np.sin(phi) * IY
    return matrix_exponential_su2(axis, omega1 * tau)


_S = 1 / np.sqrt(2)
_NAMED_GATES = {
    Gate.X: _S * np.array([[1, -1j], [-1j, 1]], dtype=complex),
    Gate.Y: _S * np.array([[1, -1], [1, 1]], dtype=complex),
    Gate.Z: _S * np.array([[1 - 1j, 0], [0, 1 + 1j]], dtype=complex),
    Gate.NONE: IDENTITY,
}


def named_gate(which) -> np.ndarray:
    """Return the pi/2 rotation ``exp(-i (pi/4) sigma)`` about x, y or z."""
    return _NAMED_GATES[Gate(which)].copy()


def thermal_state(p: NmrParameters, exact: bool = False) -> np.ndarray:
    """Equilibrium density matrix of the spin.

    By default this is the first-order high-temperature expansion
    ``(I + (hbar*omega0/k_B T) Iz) / 2``.  With ``exact=True`` the full Gibbs
    state ``exp(-H0/k_B T) / Z`` is returned instead.
    """
    eps = p.polarization
    if not exact:
        return 0.5 * (IDENTITY + eps * IZ)
    # H0 is diagonal: energies -/+ hbar*omega0/2
    weights = np.exp(np.array([0.5 * eps, -0.5 * eps]))
    return np.diag(weights / weights.sum()).astype(complex)


def apply_gate(u, rho) -> np.ndarray:
    """Conjugate ``rho`` by the unitary ``u``."""
    u = np.asarray(u, dtype=complex)
    if not is_unitary(u, tol=ALGEBRA_TOL):
        raise ValueError("gate is not unitary")
    return u @ np.asarray(rho, dtype=complex) @ dagger(u)


def lab_frame_propagator(t: float, p: NmrParameters) -> np.ndarray:
    """``exp(-i H0 t / hbar) = exp(i omega0 Iz t)``."""
    return matrix_exponential_su2(SIGMA_Z / 2, -p.omega0 * t)


def to_lab_frame(rho_rot, t: float, p: NmrParameters) -> np.ndarray:
    """Map a rotating-frame density matrix to the laboratory frame at time ``t``."""
    u = lab_frame_propagator(t, p)
    return u @ np.asarray(rho_rot, dtype=complex) @ dagger(u)


_SPIN_OPS = {"x": IX, "y": IY, "z": IZ}


def spin_operator(axis: str) -> np.ndarray:
    try:
        return _SPIN_OPS[axis.lower()]
    except KeyError:
        raise ValueError(f"axis must be one of x, y, z, got {axis!r}") from None


def magnetization(rho, axis: str):
    """Real part of ``tr(I_axis rho)``; broadcasts over stacked ``rho``.

    The imaginary part vanishes for Hermitian ``rho``.
    """
    return np.real(trace_expectation(spin_operator(axis), rho))


__all__ = [
    "CONSTANTS",
    "Frame",
    "Gate",
    "NmrParameters",
    "PhysicalConstants",
    "apply_gate",
    "free_hamiltonian",
    "gate_from_pulse",
    "lab_frame_propagator",
    "magnetization",
    "named_gate",
    "rotating_frame_hamiltonian",
    "spin_operator",
    "thermal_state",
    "to_lab_frame",
]
