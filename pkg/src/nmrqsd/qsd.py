"""Quantum state diffusion with weighted Hamiltonian and environment terms.

The state update is the explicit Euler-Maruyama step of the nonlinear QSD
equation with a single Lindblad operator ``L``::

    dpsi = -alpha (i/hbar) H psi dt
           + beta (<L^+> L - L^+L/2 - <L^+><L>/2) psi dt
           + beta (L - <L>) psi dxi

followed by renormalization of ``psi``.  ``alpha = 1, beta = 0`` is an
isolated spin, ``alpha = 0, beta = 1`` a fully open one.

Mixed initial states are handled as in the basis-pair scheme: the two basis
kets are evolved as trajectories and the density matrix is rebuilt from the
fixed initial coefficients at every step (see :func:`reconstruct_density`).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .nmr import CONSTANTS, magnetization
from .quantum import (
    KET_0,
    KET_1,
    as_operator,
    as_state,
    check_normalized,
    dagger,
    is_hermitian,
    norm,
    outer,
)

DEGENERATE_NORM = 1e-300


class DegenerateTrajectoryError(FloatingPointError):
    """Raised when a stochastic step drives the state norm to zero."""


class NoiseConvention(str, enum.Enum):
    """Normalization of the complex Wiener increment.

    ``APPENDIX_COMPLEX`` draws real and imaginary parts each with variance
    ``dt`` (so ``E|dxi|^2 = 2 dt``).  ``GISIN_PERCIVAL`` uses variance
    ``dt/2`` per part, giving ``E|dxi|^2 = dt`` and ``E[dxi^2] = 0``; only
    the latter reproduces the master equation on average.
    """

    APPENDIX_COMPLEX = "appendix-complex"
    GISIN_PERCIVAL = "gisin-percival"

    @property
    def part_std(self) -> float:
        """Per-quadrature standard deviation in units of ``sqrt(dt)``."""
        return 1.0 if self is NoiseConvention.APPENDIX_COMPLEX else np.sqrt(0.5)


class NoiseSharing(str, enum.Enum):
    SHARED = "shared"
    INDEPENDENT = "independent"


class ExpectationSource(str, enum.Enum):
    """Which state supplies ``<L>`` and ``<L^+>`` when stepping ``|-,t>``.

    ``PER_STATE`` uses each state's own expectations.  ``APPENDIX_COMPAT``
    reuses those of ``|+,t>`` for both kets.
    """

    PER_STATE = "per-state"
    APPENDIX_COMPAT = "appendix-compat"


@dataclass(frozen=True)
class QsdWeights:
    alpha: float = 1.0
    beta: float = 1.0

    def __post_init__(self):
        for name in ("alpha", "beta"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")


def trajectory_rng(seed: int, *key: int) -> np.random.Generator:
    """Private generator for the stream identified by ``(seed, *key)``.

    Streams are split with :class:`numpy.random.SeedSequence` spawn keys, so
    member ``k`` of an ensemble sees the same noise regardless of ensemble
    size or evaluation order.
    """
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


def wiener_increment(rng: np.random.Generator, dt: float, convention=NoiseConvention.GISIN_PERCIVAL, size=None):
    """Draw complex Wiener increment(s) over a step ``dt``."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    convention = NoiseConvention(convention)
    shape = () if size is None else tuple(np.atleast_1d(size))
    parts = rng.standard_normal(shape + (2,))
    dxi = (parts[..., 0] + 1j * parts[..., 1]) * (convention.part_std * np.sqrt(dt))
    return complex(dxi) if size is None else dxi


def _apply(op: np.ndarray, psi: np.ndarray) -> np.ndarray:
    return psi @ op.T


def _l_mean(L: np.ndarray, psi: np.ndarray) -> np.ndarray:
    return np.einsum("...i,ij,...j->...", np.conj(psi), L, psi)


def qsd_drift(H, L, psi, weights: QsdWeights, hbar: float = CONSTANTS.hbar, reference=None):
    """Deterministic part of ``dpsi / dt``.

    Parameters
    ----------
    H : array_like
        Hamiltonian in joules.
    L : array_like
        Lindblad operator; the rate is absorbed into ``L``.
    psi : array_like, shape (..., 2)
        Normalized state(s).
    weights : QsdWeights
    hbar : float
        Reduced Planck constant in the units of ``H`` times seconds.
    reference : array_like, optional
        State(s) used to evaluate ``<L>`` and ``<L^+>``.  Defaults to ``psi``.
    """
    H = as_operator(H)
    L = as_operator(L)
    psi = as_state(psi)
    check_normalized(psi)
    ref = psi if reference is None else as_state(reference)
    if reference is not None:
        check_normalized(ref)
    return _drift(H, L, psi, weights, hbar, _l_mean(L, ref))


def _drift(H, L, psi, weights, hbar, l_mean):
    l_mean = np.asarray(l_mean)[..., None]
    out = np.zeros_like(psi)
    if weights.alpha:
        out = out - weights.alpha * (1j / hbar) * _apply(H, psi)
    if weights.beta:
        ltl = dagger(L) @ L
        env = np.conj(l_mean) * _apply(L, psi) - 0.5 * _apply(ltl, psi) - 0.5 * np.abs(l_mean) ** 2 * psi
        out = out + weights.beta * env
    return out


def qsd_step(psi, dt: float, dxi, H, L, weights: QsdWeights, hbar: float = CONSTANTS.hbar, reference=None):
    """Advance normalized state(s) by one Euler-Maruyama step and renormalize.

    ``dxi`` is a complex increment, or an array of them matching the leading
    shape of ``psi``.

    Raises
    ------
    DegenerateTrajectoryError
        If the unnormalized update has norm below ``1e-300``.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    H = as_operator(H)
    L = as_operator(L)
    psi = as_state(psi)
    check_normalized(psi)
    ref = psi if reference is None else as_state(reference)
    if reference is not None:
        check_normalized(ref)
    l_mean = _l_mean(L, ref)
    new = psi + _drift(H, L, psi, weights, hbar, l_mean) * dt
    if weights.beta:
        dxi = np.asarray(dxi, dtype=complex)[..., None]
        new = new + weights.beta * (_apply(L, psi) - l_mean[..., None] * psi) * dxi
    n = norm(new)
    if np.any(n < DEGENERATE_NORM) or not np.all(np.isfinite(n)):
        raise DegenerateTrajectoryError(f"state norm collapsed to {np.min(n):.3e} during a QSD step")
    return new / np.asarray(n)[..., None]


def reconstruct_density(coeffs, minus, plus) -> np.ndarray:
    """Rebuild ``rho`` from fixed coefficients and evolved basis kets.

    ``rho = c00 |-><-| + c01 |-><+| + c10 |+><-| + c11 |+><+|``.  The kets
    are not orthogonal once they have diffused, so the trace is not pinned
    to one.  Broadcasts over leading axes of ``minus`` and ``plus``.
    """
    c = np.asarray(coeffs, dtype=complex)
    m = np.asarray(minus, dtype=complex)
    p = np.asarray(plus, dtype=complex)
    return (
        c[0, 0] * outer(m, m)
        + c[0, 1] * outer(m, p)
        + c[1, 0] * outer(p, m)
        + c[1, 1] * outer(p, p)
    )


@dataclass
class TrajectoryRecord:
    """Time series produced by :func:`evolve_basis_trajectories`.

    All arrays have ``steps + 1`` rows with ``times[k] = k * dt``.  For
    ensemble runs ``rho`` is the ensemble mean, the state arrays hold member 0
    and the norms are ensemble means.
    """

    times: np.ndarray
    state_minus: np.ndarray
    state_plus: np.ndarray
    rho: np.ndarray
    mx: np.ndarray
    my: np.ndarray
    trace_re: np.ndarray
    norm_minus: np.ndarray
    norm_plus: np.ndarray
    seed: int
    ensemble_size: int = 1


def _noise_for_members(seed, members, steps, dt, convention, sharing):
    """Noise arrays of shape ``(n_members, steps)`` for the minus and plus kets."""
    minus = np.empty((len(members), steps), dtype=complex)
    plus = np.empty_like(minus)
    for row, k in enumerate(members):
        minus[row] = wiener_increment(trajectory_rng(seed, k, 0), dt, convention, size=steps)
        if sharing is NoiseSharing.SHARED:
            plus[row] = minus[row]
        else:
            plus[row] = wiener_increment(trajectory_rng(seed, k, 1), dt, convention, size=steps)
    return minus, plus


def evolve_basis_trajectories(
    rho0,
    H,
    L,
    weights: QsdWeights,
    dt: float,
    steps: int,
    rng_seed: int,
    noise_sharing=NoiseSharing.SHARED,
    expectation_source=ExpectationSource.PER_STATE,
    convention=NoiseConvention.APPENDIX_COMPLEX,
    ensemble_size: int = 1,
    hbar: float = CONSTANTS.hbar,
) -> TrajectoryRecord:
    """Evolve ``|-,0> = |0>`` and ``|+,0> = |1>`` and rebuild ``rho(t)``.

    With ``ensemble_size > 1`` the pair is evolved once per member, each with
    a private noise stream keyed by ``(rng_seed, member)``, and the recorded
    density matrix is the member average taken in index order.
    """
    rho0 = as_operator(rho0)
    if not is_hermitian(rho0):
        raise ValueError("initial density matrix must be Hermitian")
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    if ensemble_size < 1:
        raise ValueError(f"ensemble_size must be >= 1, got {ensemble_size}")
    H = as_operator(H)
    L = as_operator(L)
    sharing = NoiseSharing(noise_sharing)
    source = ExpectationSource(expectation_source)
    convention = NoiseConvention(convention)

    n = ensemble_size
    noise_minus, noise_plus = _noise_for_members(rng_seed, range(n), steps, dt, convention, sharing)

    minus = np.tile(KET_0, (n, 1))
    plus = np.tile(KET_1, (n, 1))
    first_minus = np.empty((steps + 1, 2), dtype=complex)
    first_plus = np.empty_like(first_minus)
    rho = np.empty((steps + 1, 2, 2), dtype=complex)
    norm_minus = np.empty(steps + 1)
    norm_plus = np.empty(steps + 1)

    for k in range(steps + 1):
        first_minus[k] = minus[0]
        first_plus[k] = plus[0]
        rho[k] = reconstruct_density(rho0, minus, plus).mean(axis=0)
        norm_minus[k] = norm(minus).mean()
        norm_plus[k] = norm(plus).mean()
        if k == steps:
            break
        ref = plus if source is ExpectationSource.APPENDIX_COMPAT else None
        new_plus = qsd_step(plus, dt, noise_plus[:, k], H, L, weights, hbar)
        minus = qsd_step(minus, dt, noise_minus[:, k], H, L, weights, hbar, reference=ref)
        plus = new_plus

    return TrajectoryRecord(
        times=np.arange(steps + 1) * dt,
        state_minus=first_minus,
        state_plus=first_plus,
        rho=rho,
        mx=magnetization(rho, "x"),
        my=magnetization(rho, "y"),
        trace_re=np.real(np.trace(rho, axis1=-2, axis2=-1)),
        norm_minus=norm_minus,
        norm_plus=norm_plus,
        seed=rng_seed,
        ensemble_size=n,
    )


@dataclass
class PureEnsembleResult:
    """Ensemble statistics of ``|psi><psi|`` over independent trajectories.

    ``std_error`` is the entrywise standard error of the mean,
    ``sqrt(E|x - mean|^2 / K)``.
    """

    times: np.ndarray
    mean_rho: np.ndarray
    std_error: np.ndarray
    n_trajectories: int
    seed: int


def evolve_pure_ensemble(
    psi0,
    H,
    L,
    weights: QsdWeights,
    dt: float,
    steps: int,
    n_trajectories: int,
    rng_seed: int,
    convention=NoiseConvention.GISIN_PERCIVAL,
    hbar: float = CONSTANTS.hbar,
) -> PureEnsembleResult:
    """Evolve one pure initial state along ``n_trajectories`` independent noise paths."""
    psi0 = as_state(psi0)
    check_normalized(psi0)
    if steps < 1 or n_trajectories < 1:
        raise ValueError("steps and n_trajectories must be >= 1")
    convention = NoiseConvention(convention)
    K = n_trajectories
    noise = np.empty((K, steps), dtype=complex)
    for k in range(K):
        noise[k] = wiener_increment(trajectory_rng(rng_seed, k), dt, convention, size=steps)

    psi = np.tile(psi0, (K, 1))
    mean = np.empty((steps + 1, 2, 2), dtype=complex)
    sem = np.empty((steps + 1, 2, 2))
    for k in range(steps + 1):
        proj = outer(psi, psi)
        m = proj.mean(axis=0)
        mean[k] = m
        sem[k] = np.sqrt(np.mean(np.abs(proj - m) ** 2, axis=0) / K)
        if k < steps:
            psi = qsd_step(psi, dt, noise[:, k], H, L, weights, hbar)
    return PureEnsembleResult(
        times=np.arange(steps + 1) * dt, mean_rho=mean, std_error=sem, n_trajectories=K, seed=rng_seed
    )
