import numpy as np
import pytest
from scipy.linalg import expm

from rydsim.exact import (DenseHamiltonian, dense_lindblad, evolve_schrodinger,
                          evolve_trajectories)
from rydsim.krylov import expm_krylov
from rydsim.lattice import build_triangular, custom_lattice, pair_interactions
from rydsim.model import ImperfectionModel, IsingModel
from rydsim.observables import fit_damped_rabi
from rydsim.schedule import SweepSchedule


def _const(omega, delta, duration=1.0):
    return SweepSchedule([[0.0, omega, delta], [duration, omega, delta]])


def _single_atom(omega=1.0, delta=0.0, duration=1.0, gamma=0.0):
    lat = custom_lattice([[0.0, 0.0]])
    imp = ImperfectionModel.identity(1, gamma=gamma) if gamma else None
    return IsingModel(lat, pair_interactions(lat),
                      _const(omega, delta, duration), imp)


def _pair(dist, omega, delta=0.0, duration=1.0, gamma=0.0):
    lat = custom_lattice([[0.0, 0.0], [dist, 0.0]])
    imp = ImperfectionModel.identity(2, gamma=gamma) if gamma else None
    return IsingModel(lat, pair_interactions(lat),
                      _const(omega, delta, duration), imp)


def test_krylov_matches_scipy_expm():
    rng = np.random.default_rng(0)
    h = rng.normal(size=(40, 40)) + 1j * rng.normal(size=(40, 40))
    h = h + h.conj().T
    v = rng.normal(size=40) + 1j * rng.normal(size=40)
    ref = expm(-0.37j * h) @ v
    out = expm_krylov(lambda x: h @ x, v, -0.37j, tol=1e-12)
    assert np.abs(out - ref).max() < 1e-9


def test_rabi_pi_pulse():
    # Omega t = pi: nu = 1 MHz -> t = 0.5 us
    model = _single_atom(omega=1.0, duration=0.5)
    _, state = evolve_schrodinger(model, dt=0.001)
    assert state.probabilities()[1] == pytest.approx(1.0, abs=1e-6)


def test_blockade_oscillation():
    model = _pair(5.0, omega=1.0, duration=3.0)
    series, state = evolve_schrodinger(model, dt=0.002, n_records=400)
    # double excitation suppressed far below (Omega/U)^2 scale
    u = model.interactions.u_mhz[0]
    assert state.probabilities()[3] < (1.0 / u) ** 2
    # P(both ground) ~ 1 - P(01) - P(10) oscillates at sqrt(2) Omega
    p00 = 1.0 - series.site_density.sum(axis=1)
    fit = fit_damped_rabi(series.times, p00)
    assert fit.frequency_mhz == pytest.approx(np.sqrt(2.0), rel=0.01)


def test_diagonal_hamiltonian_freezes_occupations():
    model = _pair(10.0, omega=0.0, delta=-3.0, duration=2.0)
    series, state = evolve_schrodinger(model, dt=0.01)
    assert np.allclose(series.site_density, series.site_density[0], atol=1e-10)


def test_energy_conservation_static_h():
    model = _pair(10.0, omega=1.3, delta=1.0, duration=10.0)
    ham = DenseHamiltonian(model)
    h = ham.dense_matrix(0.0)
    _, state = evolve_schrodinger(model, dt=0.002)
    psi = state.amplitudes
    e_final = np.real(np.vdot(psi, h @ psi))
    psi0 = ham.ground_state()
    e_init = np.real(np.vdot(psi0, h @ psi0))
    scale = np.abs(np.linalg.eigvalsh(h)).max()
    assert abs(e_final - e_init) / scale < 1e-6


def test_permutation_covariance_three_atoms():
    # site relabelling permutes amplitudes accordingly
    pos = [[0.0, 0.0], [7.0, 0.0], [0.0, 9.0]]
    lat_a = custom_lattice(pos)
    sched = _const(1.1, 0.5, 0.8)
    m_a = IsingModel(lat_a, pair_interactions(lat_a), sched)
    _, st_a = evolve_schrodinger(m_a, dt=0.001)
    perm = [2, 0, 1]                      # new site p holds old site perm[p]
    lat_b = custom_lattice([pos[k] for k in perm])
    m_b = IsingModel(lat_b, pair_interactions(lat_b), sched)
    _, st_b = evolve_schrodinger(m_b, dt=0.001)
    amp_b = np.zeros(8, dtype=complex)
    for s in range(8):
        t = sum(((s >> k) & 1) << p for p, k in enumerate(perm))
        amp_b[t] = st_a.amplitudes[s]
    assert np.abs(amp_b - st_b.amplitudes).max() < 1e-8


def test_trajectories_equal_schrodinger_without_dissipation():
    model = _pair(8.0, omega=1.2, delta=-1.0, duration=1.0)
    series_s, state = evolve_schrodinger(model, dt=0.002, n_records=10)
    series_t, _ = evolve_trajectories(model, n_traj=3, dt=0.002, seed=9,
                                      n_records=10)
    assert np.allclose(series_t.site_density, series_s.site_density, atol=1e-8)


def test_trajectory_populations_constant_when_undriven():
    """Omega = 0 with the superposition start: the jump operators commute
    with H, so populations stay put while coherence decays (checked against
    the dense master-equation oracle below)."""
    gamma = 0.4
    model = _single_atom(omega=0.0, delta=0.0, duration=2.0, gamma=gamma)
    plus = np.array([1.0, 1.0], dtype=complex) / np.sqrt(2)
    series, _ = evolve_trajectories(model, n_traj=150, dt=0.01, seed=1234,
                                    n_records=8, initial_state=plus)
    assert np.all(np.abs(series.site_density - 0.5) < 3 * 0.5 / np.sqrt(150))


def test_dense_lindblad_matches_schrodinger_at_gamma_zero():
    model = _pair(8.0, omega=1.2, delta=-1.0, duration=1.0)
    series_l, states = dense_lindblad(model, dt=0.002, n_records=5)
    series_s, state = evolve_schrodinger(model, dt=0.001, n_records=5)
    rho = states[-1][1].rho
    proj = np.outer(state.amplitudes, state.amplitudes.conj())
    assert np.abs(rho - proj).max() < 1e-6


def test_dense_lindblad_coherence_decay_rate():
    """Undriven single site: rho_01(t) = rho_01(0) exp(-gamma t / 2)."""
    gamma = 0.3
    model = _single_atom(omega=0.0, duration=2.0, gamma=gamma)
    plus = np.array([1.0, 1.0], dtype=complex) / np.sqrt(2)
    _, states = dense_lindblad(model, dt=0.001, n_records=8,
                               initial_state=plus)
    for t, state in states:
        expected = 0.5 * np.exp(-0.5 * gamma * t)
        assert abs(state.rho[0, 1] - expected) < 1e-8
        assert state.rho[1, 1] == pytest.approx(0.5, abs=1e-8)


def test_trajectories_vs_dense_lindblad_three_atoms():
    """Cross-validation on the central triangle with a short sweep."""
    lat = build_triangular(0, 8.0)
    sched = SweepSchedule([[0, 0, -4], [0.3, 1.4, -4], [1.0, 1.4, 1.5],
                           [1.4, 0, 1.5]])
    imp = ImperfectionModel.identity(3, gamma=0.05)
    model = IsingModel(lat, pair_interactions(lat), sched, imp)
    series_d, _ = dense_lindblad(model, dt=0.001, n_records=6)
    series_t, _ = evolve_trajectories(model, n_traj=200, dt=0.004, seed=5,
                                      n_records=6)
    # interpolate dense onto trajectory record times
    for k, t in enumerate(series_t.times):
        kd = np.argmin(np.abs(series_d.times - t))
        assert np.abs(series_t.site_density[k]
                      - series_d.site_density[kd]).max() < 2e-2


def test_site_cap_enforced():
    lat = custom_lattice([[i * 9.0, j * 9.0] for i in range(5) for j in range(4)])
    model = IsingModel(lat, pair_interactions(lat), _const(1.0, 0.0))
    with pytest.raises(ValueError):
        evolve_schrodinger(model, dt=0.01)
    with pytest.raises(ValueError):
        dense_lindblad(model, dt=0.01)
