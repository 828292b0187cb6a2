import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rydsim.lattice import (build_square, custom_lattice, pair_interactions,
                            sample_positions)
from rydsim.model import (ImperfectionModel, IsingModel, blockade_radius,
                          classical_energy, gaussian_beam_profile)
from rydsim.schedule import SweepSchedule


def _flat_schedule(omega=0.0, delta=2.0):
    return SweepSchedule([[0.0, omega, delta], [1.0, omega, delta]])


def test_beam_profile_center():
    lat = custom_lattice([[0.0, 0.0]])
    imp = gaussian_beam_profile(lat, 250.0, 130.0, light_shift_mhz=0.5)
    assert imp.f[0] == pytest.approx(1.0)
    assert imp.d[0] == pytest.approx(0.0)


def test_beam_profile_at_one_waist():
    # site at rho = w1013 = 130 um from beam centre, w420 = 250 um
    lat = custom_lattice([[0.0, 0.0], [260.0, 0.0]])  # centroid at 130
    imp = gaussian_beam_profile(lat, 250.0, 130.0)
    expected = np.exp(-1.0 - (130.0 / 250.0) ** 2)    # = 0.28072
    assert imp.f[0] == pytest.approx(expected, rel=1e-12)
    assert imp.f[1] == pytest.approx(expected, rel=1e-12)
    assert expected == pytest.approx(0.279, abs=2e-3)


def test_beam_profile_flat_limit():
    lat = build_square(4, 10.0)
    imp = gaussian_beam_profile(lat, 1e9, 1e9)
    assert np.allclose(imp.f, 1.0)
    assert np.allclose(imp.d, 0.0)


def test_imperfection_validation():
    with pytest.raises(ValueError):
        ImperfectionModel(np.zeros(2), np.zeros(2))       # f must be > 0
    with pytest.raises(ValueError):
        ImperfectionModel(np.ones(2), np.zeros(2), epsilon=1.5)
    with pytest.raises(ValueError):
        ImperfectionModel(np.ones(2), np.zeros(2), gamma=-0.1)


def test_classical_energy_empty_occupation():
    lat = build_square(2, 10.0)
    m = IsingModel(lat, pair_interactions(lat), _flat_schedule())
    assert classical_energy(m, np.zeros(4, dtype=int), 2.0) == 0.0


def test_classical_energy_neel_2x2():
    lat = build_square(2, 10.0)
    m = IsingModel(lat, pair_interactions(lat, 1.947e6), _flat_schedule())
    bits = np.zeros(4, dtype=int)
    neel = np.nonzero(lat.sublattice == 0)[0]
    bits[neel] = 1                        # one diagonal pair occupied
    e = classical_energy(m, bits, 2.0)
    assert e == pytest.approx(1.947 / 8 - 2 * 2, rel=1e-9)   # -3.756625


def test_classical_energy_single_site():
    lat = custom_lattice([[0.0, 0.0]])
    m = IsingModel(lat, pair_interactions(lat), _flat_schedule())
    assert classical_energy(m, np.array([1]), 2.0) == pytest.approx(-2.0)


def test_classical_energy_length_mismatch():
    lat = build_square(2, 10.0)
    m = IsingModel(lat, pair_interactions(lat), _flat_schedule())
    with pytest.raises(ValueError):
        classical_energy(m, np.zeros(3, dtype=int), 2.0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**9 - 1), st.randoms(use_true_random=False))
def test_classical_energy_permutation_invariant(state, rnd):
    """Relabelling site order leaves the energy unchanged."""
    lat = build_square(4, 10.0, require_even=False)
    tab = pair_interactions(lat)
    m = IsingModel(lat, tab, _flat_schedule())
    bits = np.array([(state >> k) & 1 for k in range(9)] + [0] * 7)
    perm = list(range(16))
    rnd.shuffle(perm)
    perm = np.array(perm)
    # permuted lattice: relabel positions and recompute the table
    lat_p = custom_lattice(lat.positions[perm], a=10.0)
    m_p = IsingModel(lat_p, pair_interactions(lat_p), _flat_schedule())
    e1 = classical_energy(m, bits, 2.0)
    e2 = classical_energy(m_p, bits[perm], 2.0)
    assert e1 == pytest.approx(e2, rel=1e-12, abs=1e-12)


def test_particle_hole_symmetry_periodic():
    """nnb-only periodic square at delta = z U / 2: a global bit flip shifts
    every energy by the same constant (brute force on 2x2 and 3x3)."""
    for L in (2, 3):
        lat = build_square(L, 10.0, periodic=True, require_even=False)
        tab = pair_interactions(lat, 1.947e6, 1.1)   # nearest neighbours only
        u = tab.u_nnb
        n = lat.n_sites
        z = 2 * len(tab.pairs) / n        # 4 for L >= 3; 2 on the 2x2 torus
        delta = z * u / 2
        m = IsingModel(lat, tab, _flat_schedule(delta=delta))
        states = np.arange(1 << n)
        bits = ((states[:, None] >> np.arange(n)) & 1).astype(int)
        e = np.array([classical_energy(m, b, delta) for b in bits])
        flipped = np.array([classical_energy(m, 1 - b, delta) for b in bits])
        assert np.allclose(e, flipped - flipped.mean() + e.mean(), atol=1e-9)


def test_blockade_radius_value():
    assert blockade_radius(1.947e6, 2.0) == pytest.approx(9.955, abs=2e-3)


def test_blockade_radius_definition():
    lat = build_square(2, 10.0)
    tab = pair_interactions(lat, 1.947e6)
    # Omega matching U_nnb at spacing a gives R_b = a
    assert blockade_radius(1.947e6, tab.u_nnb) == pytest.approx(10.0)


def test_blockade_radius_power_law():
    r1 = blockade_radius(1.947e6, 1.0)
    r2 = blockade_radius(1.947e6, 2.0)
    assert r1 / r2 == pytest.approx(2.0 ** (1 / 6), rel=1e-12)


def test_fields_at_with_imperfections():
    lat = build_square(2, 10.0)
    imp = ImperfectionModel(np.array([1.0, 0.5]), np.array([0.0, 0.3]))
    m = IsingModel(lat, pair_interactions(lat),
                   SweepSchedule([[0, 1.0, -8], [1, 1.4, 2]]), None)
    with pytest.raises(ValueError):
        IsingModel(lat, pair_interactions(lat),
                   SweepSchedule([[0, 1, 0], [1, 1, 0]]),
                   ImperfectionModel(np.ones(3), np.zeros(3)))
    m = IsingModel(build_square(2, 10.0), pair_interactions(lat),
                   SweepSchedule([[0, 1.0, -8], [1, 1.0, -8]]),
                   ImperfectionModel(np.array([1.0, 0.5, 1.0, 1.0]),
                                     np.array([0.0, 0.3, 0.0, 0.0])))
    omega, delta = m.fields_at(0.5)
    assert omega[1] == pytest.approx(0.5)
    assert delta[1] == pytest.approx(-7.7)
