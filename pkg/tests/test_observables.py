import numpy as np
import pytest

from rydsim.lattice import build_square, build_triangular
from rydsim.observables import (FitError, cluster_report, cluster_sizes,
                                complex_order_parameter, connected_correlations,
                                fit_correlation_length, fit_damped_rabi,
                                rydberg_density, staggered_magnetization_square,
                                staggered_magnetization_triangular,
                                sublattice_histogram)
from rydsim.sampler import SnapshotSet


def _neel_shots(lat, n_each=10):
    a = (lat.sublattice == 0).astype(np.uint8)
    b = (lat.sublattice == 1).astype(np.uint8)
    bits = np.array([a] * n_each + [b] * n_each)
    return SnapshotSet(bits, lat.label)


def _third_shots(lat, n_each=10):
    rows = [(lat.sublattice == k).astype(np.uint8) for k in range(3)]
    bits = np.concatenate([[r] * n_each for r in rows])
    return SnapshotSet(bits, lat.label)


def test_density():
    lat = build_square(4, 10.0)
    assert rydberg_density(_neel_shots(lat)) == pytest.approx(0.5)
    zeros = SnapshotSet(np.zeros((5, 16), dtype=np.uint8), lat.label)
    assert rydberg_density(zeros) == 0.0
    tri = build_triangular(2, 10.0)
    assert rydberg_density(_third_shots(tri)) == pytest.approx(1 / 3, abs=1e-12)


def test_mstag_square():
    lat = build_square(4, 10.0)
    assert staggered_magnetization_square(_neel_shots(lat), lat) == 1.0
    zeros = SnapshotSet(np.zeros((5, 16), dtype=np.uint8), lat.label)
    assert staggered_magnetization_square(zeros, lat) == 0.0
    bits = np.zeros((1, 16), dtype=np.uint8)
    bits[0, np.nonzero(lat.sublattice == 0)[0][:3]] = 1
    bits[0, np.nonzero(lat.sublattice == 1)[0][:1]] = 1
    single = SnapshotSet(bits, lat.label)
    assert staggered_magnetization_square(single, lat) == pytest.approx(0.25)


def test_mstag_square_rejects_triangular():
    tri = build_triangular(1, 10.0)
    with pytest.raises(ValueError):
        staggered_magnetization_square(_third_shots(tri), tri)


def test_mstag_triangular():
    tri = build_triangular(3, 10.0)
    assert staggered_magnetization_triangular(_third_shots(tri), tri) \
        == pytest.approx(1.0, abs=1e-12)
    zeros = SnapshotSet(np.zeros((4, tri.n_sites), dtype=np.uint8), tri.label)
    assert staggered_magnetization_triangular(zeros, tri) == 0.0
    # perfect 2/3 state: two sublattices excited
    bits = ((tri.sublattice == 0) | (tri.sublattice == 1)).astype(np.uint8)
    two_thirds = SnapshotSet(np.array([bits] * 4), tri.label)
    assert staggered_magnetization_triangular(two_thirds, tri) \
        == pytest.approx(1.0, abs=1e-12)


def test_connected_correlations_neel_mixture():
    lat = build_square(4, 10.0)
    cmap = connected_correlations(_neel_shots(lat), lat)
    assert cmap.value(1, 0) == pytest.approx(-0.25, abs=1e-12)
    assert cmap.value(0, 1) == pytest.approx(-0.25, abs=1e-12)
    assert cmap.value(1, 1) == pytest.approx(0.25, abs=1e-12)
    assert cmap.value(-1, -1) == pytest.approx(cmap.value(1, 1), abs=1e-15)


def test_connected_correlations_triangular_thirds():
    tri = build_triangular(3, 10.0)
    cmap = connected_correlations(_third_shots(tri), tri)
    # same-sublattice displacement: e1 - e2 maps sublattice k to k
    assert cmap.value(1, 1) == pytest.approx(2 / 9, abs=1e-12)
    assert cmap.value(1, 0) == pytest.approx(-1 / 9, abs=1e-12)


def test_connected_correlations_iid_noise():
    lat = build_square(4, 10.0)
    rng = np.random.default_rng(0)
    bits = rng.integers(0, 2, size=(10_000, 16)).astype(np.uint8)
    cmap = connected_correlations(SnapshotSet(bits, lat.label), lat)
    off = cmap.distances() > 1e-9
    se = 0.25 / np.sqrt(10_000)
    assert np.abs(cmap.values[off]).max() < 5 * se


def test_correlations_need_two_shots():
    lat = build_square(2, 10.0)
    with pytest.raises(ValueError):
        connected_correlations(
            SnapshotSet(np.zeros((1, 4), dtype=np.uint8), lat.label), lat)


def test_cluster_sizes_extremes():
    lat = build_square(4, 10.0)
    neel = (lat.sublattice == 0).astype(np.uint8)
    _, s_max = cluster_sizes(neel, lat)
    assert s_max == 16
    _, s_max = cluster_sizes(np.zeros(16, dtype=np.uint8), lat)
    assert s_max == 1


def test_cluster_sizes_one_flip():
    lat = build_square(4, 10.0)
    neel = (lat.sublattice == 0).astype(np.uint8)
    flipped = neel.copy()
    flipped[5] = 1 - flipped[5]           # interior site
    _, s_max = cluster_sizes(flipped, lat)
    assert s_max == 15


def _flood_fill_oracle(bits, lat):
    """Independent component search over satisfied AF bonds."""
    pairs = lat.nearest_neighbor_pairs()
    n = lat.n_sites
    adj = {k: [] for k in range(n)}
    for i, j in pairs:
        if bits[i] != bits[j]:
            adj[i].append(j)
            adj[j].append(i)
    seen = set()
    sizes = []
    for start in range(n):
        if start in seen:
            continue
        stack, comp = [start], set()
        while stack:
            v = stack.pop()
            if v in comp:
                continue
            comp.add(v)
            stack.extend(adj[v])
        seen |= comp
        sizes.append(len(comp))
    return sorted(sizes)


def test_cluster_partition_matches_flood_fill():
    lat = build_square(6, 10.0)
    rng = np.random.default_rng(2)
    for _ in range(20):
        bits = rng.integers(0, 2, size=36).astype(np.uint8)
        sizes, s_max = cluster_sizes(bits, lat)
        oracle = _flood_fill_oracle(bits, lat)
        assert sorted(sizes.tolist()) == oracle
        assert sum(sizes) == 36           # components partition all sites
        assert s_max == max(oracle)


def test_cluster_report_distribution():
    lat = build_square(4, 10.0)
    rep = cluster_report(_neel_shots(lat, 5), lat)
    dist = rep.distribution()
    assert dist[16] == 1.0
    assert dist.sum() == pytest.approx(1.0)


def test_fit_correlation_length_recovers_generator():
    lat = build_square(12, 10.0)
    shots = _neel_shots(lat, 4)
    cmap = connected_correlations(shots, lat)
    d = cmap.distances()
    synthetic = 0.25 * (-1.0) ** np.abs(cmap.displacements).sum(axis=1) \
        * np.exp(-d / 3.0)
    from dataclasses import replace
    cmap2 = replace(cmap, values=synthetic)
    fit = fit_correlation_length(cmap2)
    assert fit.xi == pytest.approx(3.0, abs=0.01)


def test_fit_correlation_length_no_decay():
    lat = build_square(8, 10.0)
    cmap = connected_correlations(_neel_shots(lat), lat)
    fit = fit_correlation_length(cmap)
    assert np.isinf(fit.xi)               # Neel mixture: |C| constant


def test_fit_correlation_length_all_zero():
    lat = build_square(4, 10.0)
    shots = SnapshotSet(np.zeros((10, 16), dtype=np.uint8), lat.label)
    cmap = connected_correlations(shots, lat)
    with pytest.raises(FitError):
        fit_correlation_length(cmap)


def test_damped_rabi_recovery():
    rng = np.random.default_rng(4)
    t = np.linspace(0, 6, 200)
    a, gamma, omega, b = 0.975, 0.04, 2 * np.pi * 1.32, 0.507
    y = a * np.exp(-gamma * t) * np.cos(omega * t) + b
    y = y + rng.normal(0, 0.01, len(t))
    fit = fit_damped_rabi(t, y)
    assert fit.amplitude == pytest.approx(a, rel=0.05)
    assert fit.decay == pytest.approx(gamma, rel=0.05)
    assert fit.frequency_mhz == pytest.approx(1.32, rel=0.05)
    assert fit.offset == pytest.approx(b, rel=0.05)


def test_damped_rabi_zero_decay():
    t = np.linspace(0, 4, 150)
    y = 0.5 * np.cos(2 * np.pi * 1.1 * t) + 0.5
    fit = fit_damped_rabi(t, y)
    assert abs(fit.decay) < 1e-3


def test_damped_rabi_degenerate():
    t = np.linspace(0, 4, 60)
    with pytest.raises(FitError):
        fit_damped_rabi(t, np.full(60, 0.3))


def test_sublattice_histogram_square():
    lat = build_square(4, 10.0)
    hist = sublattice_histogram(_neel_shots(lat, 3), lat)
    assert hist.counts[8, 0] == 3
    assert hist.counts[0, 8] == 3
    assert hist.counts.sum() == 6
    zeros = SnapshotSet(np.zeros((2, 16), dtype=np.uint8), lat.label)
    assert sublattice_histogram(zeros, lat).counts[0, 0] == 2


def test_sublattice_histogram_triangular():
    tri = build_triangular(2, 10.0)
    hist = sublattice_histogram(_third_shots(tri, 2), tri)
    assert np.allclose(np.abs(hist.z_samples), 1.0)
    phases = np.angle(hist.z_samples)
    assert len(np.unique(np.round(phases, 6))) == 3


def test_mstag_invariant_under_shot_relabeling():
    lat = build_square(4, 10.0)
    shots = _neel_shots(lat, 7)
    perm = np.random.default_rng(1).permutation(len(shots))
    shuffled = SnapshotSet(shots.bits[perm], lat.label)
    assert staggered_magnetization_square(shots, lat) == \
        staggered_magnetization_square(shuffled, lat)
