"""Two-level complex linear algebra.

Operators are ``(2, 2)`` complex numpy arrays and pure states are length-2
complex vectors.  Basis index 0 is ``|0> = (1, 0)`` and index 1 is
``|1> = (0, 1)``.  Functions that act on states also accept stacked states of
shape ``(..., 2)`` so whole ensembles can be processed at once.
"""

from __future__ import annotations

import numpy as np

ALGEBRA_TOL = 1e-12
NORM_TOL = 1e-9

IDENTITY = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)

IX = 0.5 * SIGMA_X
IY = 0.5 * SIGMA_Y
IZ = 0.5 * SIGMA_Z

# spin lowering operator, |1> -> |0>
ANNIHILATOR = np.array([[0, 1], [0, 0]], dtype=complex)

KET_0 = np.array([1, 0], dtype=complex)
KET_1 = np.array([0, 1], dtype=complex)


def as_operator(a) -> np.ndarray:
    """Coerce ``a`` to a finite ``(2, 2)`` complex array."""
    arr = np.asarray(a, dtype=complex)
    if arr.shape != (2, 2):
        raise ValueError(f"expected a 2x2 operator, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("operator has non-finite entries")
    return arr


def as_state(psi) -> np.ndarray:
    arr = np.asarray(psi, dtype=complex)
    if arr.shape[-1:] != (2,):
        raise ValueError(f"expected state(s) with trailing dimension 2, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("state has non-finite amplitudes")
    return arr


def dagger(a) -> np.ndarray:
    """Conjugate transpose of an operator (or a stack of operators)."""
    return np.conj(np.swapaxes(np.asarray(a, dtype=complex), -1, -2))


def is_hermitian(a, tol: float = ALGEBRA_TOL) -> bool:
    a = np.asarray(a, dtype=complex)
    return bool(np.max(np.abs(a - dagger(a))) <= tol)


def is_unitary(u, tol: float = ALGEBRA_TOL) -> bool:
    u = np.asarray(u, dtype=complex)
    return bool(np.max(np.abs(u @ dagger(u) - IDENTITY)) <= tol)


def norm(psi) -> np.ndarray | float:
    """Euclidean norm over the last axis."""
    return np.sqrt(np.sum(np.abs(np.asarray(psi)) ** 2, axis=-1))


def check_normalized(psi, tol: float = NORM_TOL) -> None:
    dev = np.max(np.abs(norm(psi) - 1.0))
    if dev > tol:
        raise ValueError(f"state is not normalized (norm deviation {dev:.3e} > {tol:g})")


def expectation(a, psi) -> complex | np.ndarray:
    """Return ``<psi|A|psi>`` for a normalized state or a stack of states.

    Raises
    ------
    ValueError
        If any state's norm deviates from 1 by more than ``1e-9``.
    """
    a = as_operator(a)
    psi = as_state(psi)
    check_normalized(psi)
    return _raw_expectation(a, psi)


def _raw_expectation(a: np.ndarray, psi: np.ndarray):
    val = np.einsum("...i,ij,...j->...", np.conj(psi), a, psi)
    return val[()] if val.ndim == 0 else val


def trace_expectation(a, rho) -> complex:
    """``tr(A rho)``; broadcasts over leading axes of ``rho``."""
    val = np.einsum("ij,...ji->...", np.asarray(a, dtype=complex), np.asarray(rho, dtype=complex))
    return val[()] if val.ndim == 0 else val


def commutator(a, b) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    return a @ b - b @ a


def outer(psi, phi) -> np.ndarray:
    """``|psi><phi|``; broadcasts over matching leading axes."""
    psi = np.asarray(psi, dtype=complex)
    phi = np.asarray(phi, dtype=complex)
    return psi[..., :, None] * np.conj(phi)[..., None, :]


def matrix_exponential_su2(axis_op, angle: float) -> np.ndarray:
    """Evaluate ``exp(-i * angle * A)`` for a traceless Hermitian 2x2 ``A``.

    Any such ``A`` squares to ``|a|^2 I``, so the
    exponential has the exact closed form
    ``cos(angle |a|) I - i sin(angle |a|) A / |a|``, where
    ``|a|^2 = A[0, 0]^2 + |A[0, 1]|^2``.  For ``A = sigma/2`` this
    is the familiar ``cos(angle/2) I - i sin(angle/2) sigma``.
    """
    a = as_operator(axis_op)
    if not is_hermitian(a):
        raise ValueError("generator must be Hermitian")
    if abs(np.trace(a)) > ALGEBRA_TOL * max(1.0, np.max(np.abs(a))):
        raise ValueError("generator must be traceless")
    a = 0.5 * (a + dagger(a))
    a = a - 0.5 * np.trace(a) * IDENTITY
    mag = float(np.sqrt(a[0, 0].real ** 2 + abs(a[0, 1]) ** 2))
    theta = angle * mag
    if mag == 0.0:
        return IDENTITY.copy()
    return np.cos(theta) * IDENTITY - 1j * np.sin(theta) * (a / mag)
