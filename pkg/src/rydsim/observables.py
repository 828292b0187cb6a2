"""Snapshot analyses: order parameters, correlations, clusters and fits."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import curve_fit
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .lattice import Lattice
from .sampler import SnapshotSet


class FitError(RuntimeError):
    pass


def _require_geometry(lattice: Lattice, geometry: str, what: str):
    if lattice.geometry != geometry:
        raise ValueError(f"{what} requires a {geometry} lattice, "
                         f"got {lattice.geometry}")


def rydberg_density(snapshots: SnapshotSet) -> float:
    """Mean occupation over sites and shots."""
    if len(snapshots) == 0:
        raise ValueError("empty snapshot set")
    return float(snapshots.bits.mean())


def staggered_magnetization_square(snapshots: SnapshotSet,
                                   lattice: Lattice) -> float:
    """<|n_A - n_B|> / (N/2) over the checkerboard sublattices."""
    _require_geometry(lattice, "square", "square staggered magnetisation")
    occ = snapshots.bits.astype(float)
    n_a = occ[:, lattice.sublattice == 0].sum(axis=1)
    n_b = occ[:, lattice.sublattice == 1].sum(axis=1)
    return float(np.mean(np.abs(n_a - n_b)) / (lattice.n_sites / 2.0))


def staggered_magnetization_triangular(snapshots: SnapshotSet,
                                       lattice: Lattice) -> float:
    """<|n_A + w n_B + w* n_C|> / (N/3), w = exp(2i pi/3)."""
    _require_geometry(lattice, "triangular", "triangular staggered magnetisation")
    z = complex_order_parameter(snapshots, lattice)
    return float(np.mean(np.abs(z)))


def complex_order_parameter(snapshots: SnapshotSet,
                            lattice: Lattice) -> np.ndarray:
    """Per-shot z = (n_A + w n_B + w* n_C) / (N/3) on the three sublattices."""
    _require_geometry(lattice, "triangular", "complex order parameter")
    occ = snapshots.bits.astype(float)
    w = np.exp(2j * np.pi / 3)
    counts = [occ[:, lattice.sublattice == k].sum(axis=1) for k in range(3)]
    z = counts[0] + w * counts[1] + np.conj(w) * counts[2]
    return z / (lattice.n_sites / 3.0)


@dataclass(frozen=True)
class CorrelationMap:
    """Connected correlations averaged per integer displacement (k, l)."""

    displacements: np.ndarray     # (D, 2) int
    values: np.ndarray            # (D,)
    counts: np.ndarray            # (D,) number of contributing pairs
    e1: np.ndarray
    e2: np.ndarray
    spacing: float

    def value(self, k: int, l: int) -> float:
        hit = np.nonzero((self.displacements[:, 0] == k)
                         & (self.displacements[:, 1] == l))[0]
        if len(hit) == 0:
            raise KeyError(f"displacement ({k}, {l}) absent")
        return float(self.values[hit[0]])

    def distances(self) -> np.ndarray:
        """Euclidean displacement lengths in units of the lattice spacing."""
        vec = (self.displacements[:, :1] * self.e1
               + self.displacements[:, 1:] * self.e2)
        return np.linalg.norm(vec, axis=1) / self.spacing


def connected_correlations(snapshots: SnapshotSet,
                           lattice: Lattice) -> CorrelationMap:
    """C_{k,l} = (1/N_{k,l}) sum_{pairs at k e1 + l e2} <n_i n_j> - <n_i><n_j>.

    <.> is the empirical shot mean; at least two shots are required for the
    connected part to be meaningful.
    """
    if len(snapshots) < 2:
        raise ValueError("connected correlations need at least 2 shots")
    occ = snapshots.bits.astype(float)
    mean = occ.mean(axis=0)
    pair = occ.T @ occ / len(snapshots)
    conn = pair - np.outer(mean, mean)
    coords = lattice.coords
    disp = coords[None, :, :] - coords[:, None, :]    # disp[i, j] = c_j - c_i
    keys = disp[..., 0].astype(np.int64) * 100000 + disp[..., 1]
    flat_keys = keys.ravel()
    uniq, inverse = np.unique(flat_keys, return_inverse=True)
    sums = np.bincount(inverse, weights=conn.ravel())
    counts = np.bincount(inverse)
    displacements = np.stack([(uniq + 50000) // 100000,
                              (uniq + 50000) % 100000 - 50000], axis=1)
    return CorrelationMap(displacements.astype(int), sums / counts, counts,
                          lattice.e1, lattice.e2, lattice.spacing)


@dataclass(frozen=True)
class SublatticeHistogram:
    """Shot-resolved sublattice populations.

    Square: ``counts[n_A, n_B]`` occurrence matrix.  Triangular: complex
    order-parameter samples z/(N/3) per shot.
    """

    geometry: str
    counts: np.ndarray | None = None
    z_samples: np.ndarray | None = None


def sublattice_histogram(snapshots: SnapshotSet,
                         lattice: Lattice) -> SublatticeHistogram:
    occ = snapshots.bits.astype(int)
    if lattice.geometry == "square":
        n_a = occ[:, lattice.sublattice == 0].sum(axis=1)
        n_b = occ[:, lattice.sublattice == 1].sum(axis=1)
        size_a = int(np.sum(lattice.sublattice == 0))
        size_b = int(np.sum(lattice.sublattice == 1))
        counts = np.zeros((size_a + 1, size_b + 1), dtype=np.int64)
        np.add.at(counts, (n_a, n_b), 1)
        return SublatticeHistogram("square", counts=counts)
    if lattice.geometry == "triangular":
        return SublatticeHistogram(
            "triangular", z_samples=complex_order_parameter(snapshots, lattice))
    raise ValueError(f"no sublattice histogram for {lattice.geometry} lattices")


def cluster_sizes(bits: np.ndarray, lattice: Lattice,
                  _nn_cache={}) -> tuple[np.ndarray, int]:
    """AF cluster decomposition of one snapshot.

    Clusters are connected components of the graph whose edges are
    nearest-neighbour bonds with n_i != n_j (satisfied AF bonds); sites with
    no satisfied bond count as size-1 clusters.  Returns (sizes, s_max).
    """
    _require_geometry(lattice, "square", "AF cluster decomposition")
    key = lattice.label
    if key not in _nn_cache:
        _nn_cache[key] = lattice.nearest_neighbor_pairs()
    pairs = _nn_cache[key]
    bits = np.asarray(bits)
    sat = bits[pairs[:, 0]] != bits[pairs[:, 1]]
    n = lattice.n_sites
    i, j = pairs[sat, 0], pairs[sat, 1]
    adj = coo_matrix((np.ones(len(i)), (i, j)), shape=(n, n))
    n_comp, labels = connected_components(adj, directed=False)
    sizes = np.bincount(labels, minlength=n_comp)
    # components of isolated sites have size 1 already
    s_max = int(sizes.max()) if len(sizes) else 1
    return sizes, s_max


@dataclass(frozen=True)
class ClusterReport:
    """Largest-AF-cluster sizes per shot and their distribution."""

    s_max: np.ndarray             # (n_shots,)
    n_sites: int

    def distribution(self) -> np.ndarray:
        """P(s_max = k) for k = 0..N (index 0 unused)."""
        p = np.bincount(self.s_max, minlength=self.n_sites + 1).astype(float)
        return p / p.sum()


def cluster_report(snapshots: SnapshotSet, lattice: Lattice) -> ClusterReport:
    s_max = np.array([cluster_sizes(row, lattice)[1]
                      for row in snapshots.bits], dtype=int)
    return ClusterReport(s_max, lattice.n_sites)


@dataclass(frozen=True)
class CorrelationLengthFit:
    xi: float                     # units of the lattice spacing; inf = no decay
    amplitude: float
    residual: float
    n_points: int


def fit_correlation_length(cmap: CorrelationMap,
                           min_abs: float = 1e-12) -> CorrelationLengthFit:
    """Least squares of ln|C| against Euclidean displacement distance.

    The staggered sign is removed by the modulus; d = 0 is excluded.  A
    non-negative slope reports xi = inf (no decay); all-vanishing
    correlations are a distinct failure.
    """
    d = cmap.distances()
    absc = np.abs(cmap.values)
    use = (d > 1e-12) & (absc > min_abs)
    if np.unique(np.round(d[use], 9)).size < 4:
        if not np.any(absc[d > 1e-12] > min_abs):
            raise FitError("correlations vanish everywhere; no decay to fit")
        raise FitError("need at least 4 distinct nonzero displacements")
    x, y = d[use], np.log(absc[use])
    slope, intercept = np.polyfit(x, y, 1)
    residual = float(np.sqrt(np.mean((slope * x + intercept - y) ** 2)))
    xi = np.inf if slope >= -1e-12 else -1.0 / slope
    return CorrelationLengthFit(float(xi), float(np.exp(intercept)),
                                residual, int(use.sum()))


@dataclass(frozen=True)
class DampedRabiFit:
    amplitude: float              # A
    decay: float                  # Gamma, 1/us
    frequency_mhz: float          # Omega / 2 pi
    offset: float                 # B
    residual: float


def fit_damped_rabi(times: np.ndarray, values: np.ndarray) -> DampedRabiFit:
    """Fit A exp(-Gamma t) cos(Omega t) + B.

    Initialisation: Omega from the FFT peak of the detrended series, B from
    the series mean, A from the first sample.  Raises FitError when the
    series shows no oscillation (degenerate frequency) or the optimiser
    fails to converge.
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)
    if len(t) < 20:
        raise FitError("need at least 20 samples")
    detrended = y - y.mean()
    if np.allclose(detrended, 0.0, atol=1e-12):
        raise FitError("constant series: oscillation frequency degenerate")
    spectrum = np.abs(np.fft.rfft(detrended))
    freqs = np.fft.rfftfreq(len(t), d=t[1] - t[0])
    peak = int(np.argmax(spectrum[1:]) + 1)
    if spectrum[peak] < 3.0 * np.median(spectrum[1:]):
        raise FitError("no dominant oscillation frequency")
    omega0 = 2 * np.pi * freqs[peak]
    if omega0 * (t[-1] - t[0]) < 4 * np.pi:
        raise FitError("series spans fewer than 2 oscillation periods")
    b0 = float(y.mean())
    a0 = float(y[0] - b0)

    def model(tt, a, gamma, omega, b):
        return a * np.exp(-gamma * tt) * np.cos(omega * tt) + b

    try:
        popt, _ = curve_fit(model, t, y, p0=[a0, 0.01, omega0, b0],
                            maxfev=20000)
    except RuntimeError as exc:
        raise FitError(f"damped-sine fit did not converge: {exc}") from exc
    a, gamma, omega, b = popt
    if omega < 0:                                     # cos parity
        omega = -omega
    residual = float(np.sqrt(np.mean((model(t, *popt) - y) ** 2)))
    return DampedRabiFit(float(a), float(gamma), float(omega / (2 * np.pi)),
                         float(b), residual)
