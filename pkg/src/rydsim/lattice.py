"""Atom-array geometries, position disorder and van der Waals couplings."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .seeding import rng
from .units import DEFAULT_C6_MHZ_UM6, DEFAULT_CUTOFF_A

SQRT3 = np.sqrt(3.0)

# Nearest-neighbour displacements of the triangular Bravais lattice in
# integer (m, n) coordinates.
_TRI_NEIGHBORS = ((1, 0), (-1, 0), (0, 1), (0, -1), (1, -1), (-1, 1))


@dataclass(frozen=True)
class Lattice:
    """Immutable atom array: integer coordinates, positions and sublattices.

    Positions are ``coords @ [e1, e2]`` in micrometres.  ``sublattice`` holds
    the checkerboard label (m+n) mod 2 on the square lattice and the
    three-colouring (m-n) mod 3 on the triangular lattice.
    """

    geometry: str                 # "square" | "triangular" | "custom"
    spacing: float                # a, in um
    coords: np.ndarray            # (N, 2) int, (m, n) per site
    positions: np.ndarray         # (N, 2) float, um
    sublattice: np.ndarray        # (N,) int
    e1: np.ndarray                # (2,) float, um
    e2: np.ndarray                # (2,) float, um
    L: int | None = None          # linear size (square)
    shells: int | None = None     # shell count (triangular)
    periodic: bool = False

    def __post_init__(self):
        if self.n_sites > 1:
            d = self._pair_distances_ideal()
            if d.min() < self.spacing * (1.0 - 1e-9):
                raise ValueError("sites closer than the lattice spacing")

    @property
    def n_sites(self) -> int:
        return len(self.coords)

    @property
    def n_sublattices(self) -> int:
        return int(self.sublattice.max()) + 1 if self.n_sites else 0

    @property
    def label(self) -> str:
        if self.geometry == "square":
            tag = f"square-L{self.L}-a{self.spacing:g}"
        elif self.geometry == "triangular":
            tag = f"triangular-s{self.shells}-a{self.spacing:g}"
        else:
            tag = f"custom-N{self.n_sites}-a{self.spacing:g}"
        return tag + ("-pbc" if self.periodic else "")

    def _pair_distances_ideal(self) -> np.ndarray:
        diff = self.positions[:, None, :] - self.positions[None, :, :]
        if self.periodic:
            diff = _min_image(diff, self.cell())
        d = np.linalg.norm(diff, axis=-1)
        iu = np.triu_indices(self.n_sites, k=1)
        return d[iu]

    def cell(self) -> np.ndarray | None:
        """Periodic cell vectors (2, 2) or None for open boundaries."""
        if not self.periodic:
            return None
        return np.stack([self.e1 * self.L, self.e2 * self.L])

    def nearest_neighbor_pairs(self) -> np.ndarray:
        """(P, 2) index pairs at the nearest-neighbour distance."""
        diff = self.positions[:, None, :] - self.positions[None, :, :]
        if self.periodic:
            diff = _min_image(diff, self.cell())
        d = np.linalg.norm(diff, axis=-1)
        i, j = np.nonzero(np.abs(d - self.spacing) < 1e-6 * self.spacing)
        keep = i < j
        return np.stack([i[keep], j[keep]], axis=1)

    def boundary_sites(self) -> np.ndarray:
        """Sites with fewer nearest neighbours than the bulk coordination."""
        pairs = self.nearest_neighbor_pairs()
        count = np.zeros(self.n_sites, dtype=int)
        for a, b in pairs:
            count[a] += 1
            count[b] += 1
        return np.nonzero(count < count.max())[0]


def _min_image(diff: np.ndarray, cell: np.ndarray) -> np.ndarray:
    """Minimum-image displacement for an orthogonal-in-plane cell."""
    out = diff.copy()
    for k in range(2):
        span = np.linalg.norm(cell[k])
        axis = cell[k] / span
        proj = out[..., 0] * axis[0] + out[..., 1] * axis[1]
        shift = np.round(proj / span)
        out[..., 0] -= shift * cell[k][0]
        out[..., 1] -= shift * cell[k][1]
    return out


def build_square(L: int, a: float, periodic: bool = False,
                 require_even: bool = True) -> Lattice:
    """L x L square array at spacing ``a``.

    Even L is required so the two Neel patterns are degenerate; oracle code
    may pass ``require_even=False`` to build small odd clusters.
    """
    if L < 1 or (require_even and (L < 2 or L % 2)):
        raise ValueError(f"square lattice requires positive even L, got {L}")
    if a <= 0:
        raise ValueError("spacing must be positive")
    m, n = np.meshgrid(np.arange(L), np.arange(L), indexing="xy")
    coords = np.stack([m.ravel(), n.ravel()], axis=1)
    e1 = np.array([a, 0.0])
    e2 = np.array([0.0, a])
    positions = coords @ np.stack([e1, e2])
    sub = (coords[:, 0] + coords[:, 1]) % 2
    return Lattice("square", a, coords, positions, sub, e1, e2,
                   L=L, periodic=periodic)


def build_triangular(shells: int, a: float) -> Lattice:
    """Hexagonal cluster: graph-distance ball of radius ``shells`` around the
    central up-triangle (0,0), (1,0), (0,1).  N = 3 (shells+1)^2."""
    if shells < 0:
        raise ValueError("shell count must be >= 0")
    if a <= 0:
        raise ValueError("spacing must be positive")
    frontier = {(0, 0), (1, 0), (0, 1)}
    seen = set(frontier)
    for _ in range(shells):
        nxt = set()
        for (m, n) in frontier:
            for dm, dn in _TRI_NEIGHBORS:
                c = (m + dm, n + dn)
                if c not in seen:
                    nxt.add(c)
        seen |= nxt
        frontier = nxt
    coords = np.array(sorted(seen), dtype=int)
    n_expected = 3 * (shells + 1) ** 2
    if len(coords) != n_expected:
        raise AssertionError(
            f"triangular cluster size {len(coords)} != 3(s+1)^2 = {n_expected}")
    e1 = np.array([a, 0.0])
    e2 = np.array([0.5 * a, 0.5 * SQRT3 * a])
    positions = coords @ np.stack([e1, e2])
    sub = (coords[:, 0] - coords[:, 1]) % 3
    return Lattice("triangular", a, coords, positions, sub, e1, e2,
                   shells=shells)


def custom_lattice(positions_um, a: float | None = None) -> Lattice:
    """Ad-hoc site list for benchmarks and oracles (single atoms, pairs,
    rectangles).  Sublattices default to the checkerboard of the rounded
    integer coordinates; order parameters requiring a proper geometry reject
    custom lattices."""
    positions = np.asarray(positions_um, dtype=float).reshape(-1, 2)
    if a is None:
        if len(positions) > 1:
            diff = positions[:, None, :] - positions[None, :, :]
            d = np.linalg.norm(diff, axis=-1)
            a = float(d[np.triu_indices(len(positions), k=1)].min())
        else:
            a = 1.0
    coords = np.round(positions / a).astype(int)
    sub = (coords[:, 0] + coords[:, 1]) % 2
    e1 = np.array([a, 0.0])
    e2 = np.array([0.0, a])
    return Lattice("custom", a, coords, positions, sub, e1, e2)


@dataclass(frozen=True)
class PositionSample:
    """One disorder realisation of 3D atom positions (um)."""

    positions: np.ndarray         # (N, 3) float
    sigma_static: float
    sigma_r: float
    sigma_z: float
    seed: int


def sample_positions(lattice: Lattice, sigma_static: float, sigma_r: float,
                     sigma_z: float, seed: int) -> PositionSample:
    """Displace every site by independent Gaussian offsets.

    In-plane axes get std sqrt(sigma_static^2 + sigma_r^2) each (static trap
    disorder plus shot-to-shot thermal motion), the transverse axis gets
    sigma_z.
    """
    if min(sigma_static, sigma_r, sigma_z) < 0:
        raise ValueError("disorder sigmas must be >= 0")
    g = rng(seed)
    n = lattice.n_sites
    s_plane = np.hypot(sigma_static, sigma_r)
    offsets = np.zeros((n, 3))
    offsets[:, :2] = g.normal(0.0, s_plane, size=(n, 2)) if s_plane else 0.0
    offsets[:, 2] = g.normal(0.0, sigma_z, size=n) if sigma_z else 0.0
    pos3 = np.concatenate([lattice.positions, np.zeros((n, 1))], axis=1)
    return PositionSample(pos3 + offsets, sigma_static, sigma_r, sigma_z, seed)


@dataclass(frozen=True)
class InteractionTable:
    """Pairwise van der Waals couplings U_ij = C6 / r_ij^6 within a cutoff.

    ``u_mhz`` are ordinary frequencies (U/h in MHz); each unordered pair is
    stored once with i < j.  ``u_nnb`` is the mean coupling over the ideal
    nearest-neighbour index pairs.
    """

    pairs: np.ndarray             # (P, 2) int, i < j
    u_mhz: np.ndarray             # (P,) float
    c6_mhz_um6: float
    cutoff_a: float
    u_nnb: float
    n_sites: int
    _adjacency: tuple = field(default=None, repr=False, compare=False)

    def neighbor_lists(self):
        """CSR-style (indptr, indices, couplings) over both pair directions."""
        if self._adjacency is None:
            n = self.n_sites
            count = np.zeros(n, dtype=np.int64)
            for a, b in self.pairs:
                count[a] += 1
                count[b] += 1
            indptr = np.zeros(n + 1, dtype=np.int64)
            np.cumsum(count, out=indptr[1:])
            indices = np.zeros(indptr[-1], dtype=np.int64)
            coup = np.zeros(indptr[-1], dtype=np.float64)
            cursor = indptr[:-1].copy()
            for (a, b), u in zip(self.pairs, self.u_mhz):
                indices[cursor[a]] = b
                coup[cursor[a]] = u
                cursor[a] += 1
                indices[cursor[b]] = a
                coup[cursor[b]] = u
                cursor[b] += 1
            object.__setattr__(self, "_adjacency", (indptr, indices, coup))
        return self._adjacency

    def coupling_matrix(self) -> np.ndarray:
        """Dense symmetric (N, N) coupling matrix in MHz."""
        u = np.zeros((self.n_sites, self.n_sites))
        u[self.pairs[:, 0], self.pairs[:, 1]] = self.u_mhz
        u[self.pairs[:, 1], self.pairs[:, 0]] = self.u_mhz
        return u


def pair_interactions(lattice: Lattice,
                      c6_mhz_um6: float = DEFAULT_C6_MHZ_UM6,
                      cutoff_a: float = DEFAULT_CUTOFF_A,
                      positions: PositionSample | None = None) -> InteractionTable:
    """Tabulate U_ij = C6/r_ij^6 for all pairs with r_ij <= cutoff_a * a.

    Ideal lattices use 2D distances; a PositionSample switches to full 3D
    distances.  Periodic lattices use the in-plane minimum image (pairs beyond
    half the box still enter through their closest image only).
    """
    if c6_mhz_um6 <= 0:
        raise ValueError("C6 must be positive")
    if cutoff_a <= 1:
        raise ValueError("cutoff must exceed one lattice spacing")
    if positions is not None:
        pos = positions.positions
        if len(pos) != lattice.n_sites:
            raise ValueError("position sample does not match lattice")
    else:
        pos = lattice.positions
    diff = pos[:, None, :] - pos[None, :, :]
    cell = lattice.cell()
    if cell is not None:
        diff[..., :2] = _min_image(diff[..., :2], cell)
    dist = np.linalg.norm(diff, axis=-1)
    n = lattice.n_sites
    iu, ju = np.triu_indices(n, k=1)
    d = dist[iu, ju]
    if n > 1 and d.min() < 1e-9 * lattice.spacing:
        raise ValueError("coincident atom positions")
    keep = d <= cutoff_a * lattice.spacing
    pairs = np.stack([iu[keep], ju[keep]], axis=1)
    u = c6_mhz_um6 / d[keep] ** 6

    nn = lattice.nearest_neighbor_pairs()
    if len(nn):
        u_nn = c6_mhz_um6 / dist[nn[:, 0], nn[:, 1]] ** 6
        u_nnb = float(u_nn.mean())
    else:
        u_nnb = 0.0
    return InteractionTable(pairs, u, c6_mhz_um6, cutoff_a, u_nnb, n)
