import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nmrqsd import nmr, qsd
from nmrqsd import quantum as q
from nmrqsd.qsd import ExpectationSource, NoiseConvention, NoiseSharing, QsdWeights

from conftest import normalized_states

L = q.ANNIHILATOR
ZERO = np.zeros((2, 2), dtype=complex)
P = nmr.NmrParameters()
RHO_X = nmr.apply_gate(nmr.named_gate("X"), nmr.thermal_state(P))


# --- noise -------------------------------------------------------------------------


@pytest.mark.parametrize("convention", list(NoiseConvention))
def test_wiener_mean_is_zero(convention):
    dt = 0.002
    dxi = qsd.wiener_increment(qsd.trajectory_rng(7), dt, convention, size=100_000)
    sigma = convention.part_std * np.sqrt(dt)
    assert abs(dxi.real.mean()) < 4 * sigma / np.sqrt(1e5)
    assert abs(dxi.imag.mean()) < 4 * sigma / np.sqrt(1e5)


def test_appendix_convention_variance():
    dt = 0.002
    dxi = qsd.wiener_increment(qsd.trajectory_rng(8), dt, NoiseConvention.APPENDIX_COMPLEX, size=100_000)
    assert np.var(dxi.real) == pytest.approx(dt, rel=0.05)
    assert np.var(dxi.imag) == pytest.approx(dt, rel=0.05)
    assert np.mean(np.abs(dxi) ** 2) == pytest.approx(2 * dt, rel=0.05)


def test_gisin_percival_moments():
    dt = 0.01
    n = 100_000
    dxi = qsd.wiener_increment(qsd.trajectory_rng(9), dt, NoiseConvention.GISIN_PERCIVAL, size=n)
    assert np.mean(np.abs(dxi) ** 2) == pytest.approx(dt, rel=0.05)
    # dxi^2 has real and imaginary parts with standard deviation dt/sqrt(2)
    m2 = np.mean(dxi**2)
    bound = 4 * (dt / np.sqrt(2)) / np.sqrt(n)
    assert abs(m2.real) < bound and abs(m2.imag) < bound


def test_wiener_is_deterministic_and_validates_dt():
    a = qsd.wiener_increment(qsd.trajectory_rng(3, 1), 1e-3, size=5)
    b = qsd.wiener_increment(qsd.trajectory_rng(3, 1), 1e-3, size=5)
    np.testing.assert_array_equal(a, b)
    assert isinstance(qsd.wiener_increment(qsd.trajectory_rng(3), 1e-3), complex)
    with pytest.raises(ValueError):
        qsd.wiener_increment(qsd.trajectory_rng(3), 0.0)


def test_weights_validated():
    with pytest.raises(ValueError):
        QsdWeights(1.2, 0.0)
    with pytest.raises(ValueError):
        QsdWeights(0.5, -0.1)


# --- drift and step ---------------------------------------------------------------------


def test_drift_examples():
    np.testing.assert_array_equal(qsd.qsd_drift(ZERO, L, [1, 0], QsdWeights(1, 0)), [0, 0])
    np.testing.assert_array_equal(qsd.qsd_drift(ZERO, L, [1, 0], QsdWeights(0, 1)), [0, 0])
    # <L> = <L^+> = 0 and L^+L (0,1) = (0,1)
    np.testing.assert_array_equal(qsd.qsd_drift(ZERO, L, [0, 1], QsdWeights(0, 1)), [0, -0.5])


def test_drift_hand_evaluated_superposition():
    psi = np.array([1, 1]) / np.sqrt(2)
    # <L> = 1/2; <L^+> L psi = (1/2)(1/sqrt2, 0); L^+L psi = (0, 1/sqrt2); |<L>|^2 psi / 2 = psi / 8
    s = 1 / np.sqrt(2)
    expected = np.array([0.5 * s - s / 8, -0.5 * s - s / 8])
    np.testing.assert_allclose(qsd.qsd_drift(ZERO, L, psi, QsdWeights(0, 1)), expected, atol=1e-15)


def test_drift_rejects_unnormalized():
    with pytest.raises(ValueError):
        qsd.qsd_drift(ZERO, L, [1, 1], QsdWeights())


def test_step_isolated_no_hamiltonian_is_identity():
    psi = np.array([0.6, 0.8j])
    np.testing.assert_array_equal(qsd.qsd_step(psi, 0.01, 0.3 + 0.1j, ZERO, L, QsdWeights(1, 0)), psi)


@settings(max_examples=50)
@given(normalized_states())
def test_step_matches_exact_propagator(psi):
    hbar = 1.0
    H = 0.7 * q.SIGMA_X - 0.2 * q.SIGMA_Y + 0.4 * q.SIGMA_Z
    hnorm = np.linalg.norm(H, 2)
    dt = 1e-3 / hnorm
    exact = q.matrix_exponential_su2(H, dt) @ psi
    step = qsd.qsd_step(psi, dt, 0.0, H, L, QsdWeights(1, 0), hbar=hbar)
    np.testing.assert_allclose(step, exact, atol=1e-5)


def _cumulative_error(x, theta=1.0):
    H = 0.5 * q.SIGMA_X + 0.3 * q.SIGMA_Z
    hnorm = np.linalg.norm(H, 2)
    dt = x / hnorm
    n = int(round(theta / x))
    psi = np.array([1, 0], dtype=complex)
    u = q.matrix_exponential_su2(H, dt)
    exact = psi.copy()
    worst = 0.0
    for _ in range(n):
        psi = qsd.qsd_step(psi, dt, 0.0, H, L, QsdWeights(1, 0), hbar=1.0)
        exact = u @ exact
        worst = max(worst, np.max(np.abs(psi - exact)))
    return worst, n * x


def test_isolated_global_error_bounded():
    e1, t1 = _cumulative_error(1e-3)
    e2, t2 = _cumulative_error(5e-4)
    c1 = e1 / (1e-3 * t1)
    c2 = e2 / (5e-4 * t2)
    # error / (x * t) is bounded by a constant that does not grow as x shrinks
    # (renormalized Euler has a third-order local phase error, so it actually halves)
    assert c1 <= 1.0
    assert c2 <= c1


def test_step_keeps_unit_norm(rng):
    psi = np.array([0.6, 0.8], dtype=complex)
    H = nmr.free_hamiltonian(P)
    for k in range(2000):
        dxi = qsd.wiener_increment(rng, 1e-3, NoiseConvention.APPENDIX_COMPLEX)
        w = QsdWeights(*rng.uniform(0, 1, size=2))
        psi = qsd.qsd_step(psi, 1e-3, dxi, H if k % 2 else ZERO, L, w)
        assert abs(q.norm(psi) - 1) <= 1e-12


@pytest.mark.parametrize("beta", [0.0, 0.3, 1.0])
def test_dark_state_is_fixed_point(beta, rng):
    psi = np.array([1, 0], dtype=complex)
    H = nmr.free_hamiltonian(P)
    dxi = qsd.wiener_increment(rng, 0.002, NoiseConvention.APPENDIX_COMPLEX, size=1000)
    for d in dxi:
        psi = qsd.qsd_step(psi, 0.002, d, H, L, QsdWeights(0.0, beta))
    np.testing.assert_array_equal(psi, [1, 0])


def test_step_batched_matches_individual(rng):
    psis = np.array([[1, 0], [0, 1], [0.6, 0.8j]], dtype=complex)
    dxi = np.array([0.01 + 0.02j, -0.03j, 0.05])
    batch = qsd.qsd_step(psis, 1e-3, dxi, ZERO, L, QsdWeights(0.4, 0.9))
    for row in range(3):
        single = qsd.qsd_step(psis[row], 1e-3, dxi[row], ZERO, L, QsdWeights(0.4, 0.9))
        np.testing.assert_allclose(batch[row], single, atol=1e-16)


def test_step_reference_state_supplies_expectations():
    plus = np.array([0.6, 0.8], dtype=complex)
    minus = np.array([1, 0], dtype=complex)
    dxi = 0.05 - 0.02j
    stepped = qsd.qsd_step(minus, 1e-2, dxi, ZERO, L, QsdWeights(0, 1), reference=plus)
    l = 0.6 * 0.8  # <L> for plus
    raw = minus * (1 - 0.5 * l**2 * 1e-2) - l * minus * dxi
    np.testing.assert_allclose(stepped, raw / np.linalg.norm(raw), atol=1e-15)


def test_degenerate_step_raises():
    H = -1j * q.IDENTITY  # non-Hermitian on purpose: psi - i H psi dt = 0 at dt = hbar = 1
    with pytest.raises(qsd.DegenerateTrajectoryError):
        qsd.qsd_step([1, 0], 1.0, 0.0, H, L, QsdWeights(1, 0), hbar=1.0)


# --- density reconstruction ------------------------------------------------------------------


def test_reconstruct_in_computational_basis():
    np.testing.assert_array_equal(qsd.reconstruct_density(RHO_X, q.KET_0, q.KET_1), RHO_X)


@given(normalized_states())
def test_reconstruct_mixed_with_orthonormal_pair(psi):
    perp = np.array([-np.conj(psi[1]), np.conj(psi[0])])
    rho = qsd.reconstruct_density(q.IDENTITY / 2, psi, perp)
    assert abs(np.trace(rho) - 1) <= 1e-12


def test_reconstruct_nonorthogonal_is_hermitian_with_drifting_trace():
    minus = np.array([1, 0], dtype=complex)
    plus = np.array([0.6, 0.8j])
    rho = qsd.reconstruct_density(RHO_X, minus, plus)
    assert q.is_hermitian(rho)
    # cross terms now contribute: trace = 1 + 2 Re(c01 <+|->)
    expected = 1 + 2 * np.real(RHO_X[0, 1] * np.vdot(plus, minus))
    assert np.trace(rho).real == pytest.approx(expected, abs=1e-15)


# --- basis-pair trajectories -------------------------------------------------------------------


def test_single_step_without_dynamics_returns_rho0():
    rec = qsd.evolve_basis_trajectories(RHO_X, ZERO, L, QsdWeights(1, 0), 0.01, 1, rng_seed=0)
    np.testing.assert_array_equal(rec.rho[1], RHO_X)
    assert rec.times.tolist() == [0.0, 0.01]


def test_isolated_rotating_frame_signal_is_constant():
    rec = qsd.evolve_basis_trajectories(RHO_X, ZERO, L, QsdWeights(1, 0), 0.002, 500, rng_seed=5)
    np.testing.assert_array_equal(rec.my, np.full(501, rec.my[0]))
    assert abs(rec.my[0]) == pytest.approx(P.signal_amplitude, rel=1e-12)


@pytest.mark.parametrize("sharing", list(NoiseSharing))
@pytest.mark.parametrize("source", list(ExpectationSource))
@pytest.mark.parametrize("frame_h", ["lab", "rot"])
def test_reconstructed_rho_hermitian_every_step(sharing, source, frame_h):
    H = nmr.free_hamiltonian(P) if frame_h == "lab" else ZERO
    rec = qsd.evolve_basis_trajectories(
        RHO_X, H, L, QsdWeights(0.3, 0.7), 0.002, 500, rng_seed=11,
        noise_sharing=sharing, expectation_source=source,
    )
    herm = np.max(np.abs(rec.rho - np.conj(np.swapaxes(rec.rho, -1, -2))), axis=(1, 2))
    assert np.all(herm <= 1e-12)
    assert np.all(np.abs(rec.norm_minus - 1) <= 1e-12)
    assert np.all(np.abs(rec.norm_plus - 1) <= 1e-12)
    for arr in (rec.state_minus, rec.state_plus, rec.rho, rec.mx, rec.my, rec.trace_re):
        assert len(arr) == 501


def test_trajectories_deterministic_per_seed():
    kwargs = dict(dt=0.002, steps=200, noise_sharing=NoiseSharing.INDEPENDENT)
    a = qsd.evolve_basis_trajectories(RHO_X, ZERO, L, QsdWeights(0, 1), rng_seed=42, **kwargs)
    b = qsd.evolve_basis_trajectories(RHO_X, ZERO, L, QsdWeights(0, 1), rng_seed=42, **kwargs)
    c = qsd.evolve_basis_trajectories(RHO_X, ZERO, L, QsdWeights(0, 1), rng_seed=43, **kwargs)
    np.testing.assert_array_equal(a.rho, b.rho)
    assert a.seed == 42
    assert not np.array_equal(a.rho, c.rho)


def test_shared_noise_drives_both_kets_alike():
    # with L = sigma_x both kets diffuse; shared noise makes them mirror images
    lx = q.SIGMA_X
    shared = qsd.evolve_basis_trajectories(RHO_X, ZERO, lx, QsdWeights(0, 1), 0.01, 50, rng_seed=1)
    indep = qsd.evolve_basis_trajectories(
        RHO_X, ZERO, lx, QsdWeights(0, 1), 0.01, 50, rng_seed=1, noise_sharing=NoiseSharing.INDEPENDENT
    )
    np.testing.assert_allclose(shared.state_plus, shared.state_minus[:, ::-1], atol=1e-14)
    assert not np.allclose(indep.state_plus, indep.state_minus[:, ::-1])


def test_appendix_compat_changes_minus_dynamics():
    kwargs = dict(rng_seed=2, noise_sharing=NoiseSharing.INDEPENDENT)
    a = qsd.evolve_basis_trajectories(RHO_X, ZERO, q.SIGMA_X, QsdWeights(0, 1), 0.01, 20, **kwargs)
    b = qsd.evolve_basis_trajectories(
        RHO_X, ZERO, q.SIGMA_X, QsdWeights(0, 1), 0.01, 20,
        expectation_source=ExpectationSource.APPENDIX_COMPAT, **kwargs,
    )
    np.testing.assert_array_equal(a.state_plus, b.state_plus)
    assert not np.allclose(a.state_minus, b.state_minus)


def test_ensemble_member_zero_matches_single_run():
    single = qsd.evolve_basis_trajectories(RHO_X, ZERO, L, QsdWeights(0, 1), 0.01, 30, rng_seed=4)
    ens = qsd.evolve_basis_trajectories(RHO_X, ZERO, L, QsdWeights(0, 1), 0.01, 30, rng_seed=4, ensemble_size=8)
    np.testing.assert_array_equal(ens.state_minus, single.state_minus)
    np.testing.assert_array_equal(ens.state_plus, single.state_plus)
    assert ens.ensemble_size == 8
    assert not np.array_equal(ens.rho, single.rho)


def test_evolve_validates_inputs():
    with pytest.raises(ValueError):
        qsd.evolve_basis_trajectories(RHO_X, ZERO, L, QsdWeights(), 0.01, 0, rng_seed=0)
    with pytest.raises(ValueError):
        qsd.evolve_basis_trajectories(np.array([[1, 1], [0, 0]]), ZERO, L, QsdWeights(), 0.01, 5, rng_seed=0)


def test_pure_ensemble_dark_state_is_exact():
    res = qsd.evolve_pure_ensemble(q.KET_0, ZERO, L, QsdWeights(1, 1), 0.01, 50, 100, rng_seed=0)
    np.testing.assert_array_equal(res.mean_rho, np.broadcast_to(np.diag([1, 0]).astype(complex), (51, 2, 2)))
    np.testing.assert_array_equal(res.std_error, 0)
