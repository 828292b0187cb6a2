import numpy as np
import pytest
from scipy.stats import skew

from rydsim.lattice import (build_square, build_triangular, custom_lattice,
                            pair_interactions, sample_positions)


def test_square_sizes():
    assert build_square(2, 10.0).n_sites == 4
    assert build_square(14, 10.0).n_sites == 196


def test_square_rejects_odd_and_nonpositive():
    with pytest.raises(ValueError):
        build_square(3, 10.0)
    with pytest.raises(ValueError):
        build_square(0, 10.0)
    with pytest.raises(ValueError):
        build_square(4, -1.0)


def test_square_checkerboard():
    lat = build_square(4, 10.0)
    for i, j in lat.nearest_neighbor_pairs():
        assert lat.sublattice[i] != lat.sublattice[j]


def test_square_2x2_pair_count():
    lat = build_square(2, 10.0)
    assert len(lat.nearest_neighbor_pairs()) == 4


@pytest.mark.parametrize("shells,n", [(0, 3), (4, 75), (5, 108), (6, 147)])
def test_triangular_sizes(shells, n):
    assert build_triangular(shells, 10.0).n_sites == n


def test_triangular_size_formula_up_to_8():
    for s in range(9):
        assert build_triangular(s, 10.0).n_sites == 3 * (s + 1) ** 2


def test_triangular_three_coloring():
    for s in (1, 3, 5):
        lat = build_triangular(s, 10.0)
        for i, j in lat.nearest_neighbor_pairs():
            assert lat.sublattice[i] != lat.sublattice[j]


def test_min_distance_invariant():
    for lat in (build_square(4, 10.0), build_triangular(2, 10.0)):
        diff = lat.positions[:, None] - lat.positions[None, :]
        d = np.linalg.norm(diff, axis=-1)
        iu = np.triu_indices(lat.n_sites, 1)
        assert d[iu].min() >= lat.spacing * (1 - 1e-9)


def test_interaction_scale():
    lat = build_square(2, 10.0)
    tab = pair_interactions(lat, 1.947e6, 5.2)
    assert tab.u_nnb == pytest.approx(1.947, rel=1e-12)


def test_diagonal_pair_is_nnb_over_8():
    lat = build_square(2, 10.0)
    tab = pair_interactions(lat, 1.947e6, 5.2)
    u = tab.coupling_matrix()
    assert u[0, 3] == pytest.approx(tab.u_nnb / 8, rel=1e-9)


def test_tight_cutoff_keeps_only_nearest_neighbors():
    lat = build_square(4, 10.0)
    tab = pair_interactions(lat, 1.947e6, 1.1)
    nn = {tuple(p) for p in lat.nearest_neighbor_pairs()}
    assert {tuple(p) for p in tab.pairs} == nn


def test_interior_neighbor_count_matches_brute_force():
    lat = build_square(12, 10.0)
    tab = pair_interactions(lat, 1.947e6, 5.2)
    center = 5 * 12 + 5                   # interior site (5, 5)
    table_count = int(np.sum((tab.pairs == center).any(axis=1)))
    d = np.linalg.norm(lat.positions - lat.positions[center], axis=1)
    brute = int(np.sum((d > 0) & (d <= 5.2 * 10.0)))
    assert table_count == brute


def test_positions_deterministic_and_zero_disorder():
    lat = build_square(4, 10.0)
    a = sample_positions(lat, 0.1, 0.17, 1.0, seed=42)
    b = sample_positions(lat, 0.1, 0.17, 1.0, seed=42)
    assert np.array_equal(a.positions, b.positions)
    ideal = sample_positions(lat, 0.0, 0.0, 0.0, seed=1)
    assert np.allclose(ideal.positions[:, :2], lat.positions)
    assert np.allclose(ideal.positions[:, 2], 0.0)


def test_position_statistics_match_inputs():
    lat = build_square(10, 10.0)
    draws = [sample_positions(lat, 0.1, 0.17, 1.0, seed=k) for k in range(100)]
    offsets = np.concatenate([d.positions - np.concatenate(
        [lat.positions, np.zeros((lat.n_sites, 1))], axis=1) for d in draws])
    n = len(offsets)
    s_plane = np.hypot(0.1, 0.17)
    for axis, target in ((0, s_plane), (1, s_plane), (2, 1.0)):
        sigma = offsets[:, axis].std()
        # sample std of n gaussians has std ~ target/sqrt(2n)
        assert abs(sigma - target) < 3 * target / np.sqrt(2 * n)


def test_disordered_couplings_heavy_tailed():
    lat = build_square(4, 10.0)
    nn = lat.nearest_neighbor_pairs()
    couplings = []
    for k in range(200):
        tab = pair_interactions(lat, 1.947e6, 5.2,
                                positions=sample_positions(lat, 0.1, 0.17, 1.0, k))
        u = tab.coupling_matrix()
        couplings.append(u[nn[:, 0], nn[:, 1]])
    couplings = np.concatenate(couplings)
    assert skew(couplings) > 0            # long tail toward large U
    # disorder-averaged nearest-neighbour coupling ~ 1.86 MHz
    assert abs(couplings.mean() - 1.86) < 0.02


def test_coincident_positions_rejected():
    lat = custom_lattice([[0.0, 0.0], [5.0, 0.0]])
    ps = sample_positions(lat, 0.0, 0.0, 0.0, seed=0)
    bad = ps.positions.copy()
    bad[1] = bad[0]
    from dataclasses import replace
    with pytest.raises(ValueError):
        pair_interactions(lat, 1.947e6, 5.2, positions=replace(ps, positions=bad))


def test_negative_sigma_rejected():
    lat = build_square(2, 10.0)
    with pytest.raises(ValueError):
        sample_positions(lat, -0.1, 0.0, 0.0, seed=0)


def test_periodic_minimum_image():
    lat = build_square(4, 10.0, periodic=True)
    tab = pair_interactions(lat, 1.947e6, 1.1)
    # wrap-around bonds make every site 4-coordinated
    counts = np.zeros(lat.n_sites, int)
    for i, j in tab.pairs:
        counts[i] += 1
        counts[j] += 1
    assert np.all(counts == 4)


def test_triangular_boundary_sites():
    lat = build_triangular(5, 10.0)       # 108 sites
    edge = lat.boundary_sites()
    assert len(edge) == 33                # outermost shell of the s=5 cluster
