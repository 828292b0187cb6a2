"""Reference quantum engines on the dense Fock space.

Basis convention: computational index s encodes site i in bit i (site 0 is
the least-significant bit); bit 1 = Rydberg.  All engines start from the
all-ground product state and freeze H(t) at the midpoint of every step.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._kernels import h_matvec
from .krylov import expm_krylov
from .model import IsingModel
from .seeding import rng_from
from .units import angular

EXACT_CAP = 16
DENSE_LINDBLAD_CAP = 8
SAMPLE_DENSE_CAP = 20


@dataclass
class DenseBasis:
    """Precomputed per-basis-state tables for a lattice."""

    n_sites: int
    bits: np.ndarray              # (2^N, N) uint8
    pop: np.ndarray               # (2^N,) float
    mstag: np.ndarray | None      # per-basis order parameter, or None

    @classmethod
    def build(cls, lattice) -> "DenseBasis":
        n = lattice.n_sites
        if n > SAMPLE_DENSE_CAP:
            raise ValueError(f"dense basis limited to {SAMPLE_DENSE_CAP} sites")
        states = np.arange(1 << n, dtype=np.uint32)
        bits = ((states[:, None] >> np.arange(n, dtype=np.uint32)) & 1).astype(np.uint8)
        pop = bits.sum(axis=1).astype(float)
        mstag = basis_order_parameter(bits, lattice)
        return cls(n, bits, pop, mstag)


def basis_order_parameter(bits: np.ndarray, lattice) -> np.ndarray | None:
    """Per-configuration staggered magnetisation (unnormalised by shots)."""
    sub = lattice.sublattice
    occ = bits.astype(float)
    if lattice.geometry == "square":
        n_a = occ[..., sub == 0].sum(axis=-1)
        n_b = occ[..., sub == 1].sum(axis=-1)
        return np.abs(n_a - n_b) / (lattice.n_sites / 2.0)
    if lattice.geometry == "triangular":
        n_abc = [occ[..., sub == k].sum(axis=-1) for k in range(3)]
        z = n_abc[0] + np.exp(2j * np.pi / 3) * n_abc[1] \
            + np.exp(-2j * np.pi / 3) * n_abc[2]
        return np.abs(z) / (lattice.n_sites / 3.0)
    return None


@dataclass
class QuantumState:
    """Dense state vector over the occupation basis."""

    amplitudes: np.ndarray
    lattice: object

    def __post_init__(self):
        norm = np.linalg.norm(self.amplitudes)
        if abs(norm - 1.0) > 1e-8:
            raise ValueError(f"state norm {norm} deviates from 1")

    @property
    def n_sites(self) -> int:
        return self.lattice.n_sites

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


@dataclass
class DensityState:
    """Dense density matrix (oracle use only, N <= 8)."""

    rho: np.ndarray
    lattice: object

    def __post_init__(self):
        r = self.rho
        if np.abs(np.trace(r) - 1.0) > 1e-6:
            raise ValueError("trace of rho deviates from 1")
        if np.abs(r - r.conj().T).max() > 1e-6:
            raise ValueError("rho is not Hermitian")

    def populations(self) -> np.ndarray:
        return np.real(np.diag(self.rho))


@dataclass
class TimeSeries:
    """Observable traces emitted by the engines."""

    times: np.ndarray             # (T,)
    site_density: np.ndarray      # (T, N)
    density: np.ndarray           # (T,)
    m_stag: np.ndarray            # (T,) NaN when undefined for the geometry
    meta: dict = field(default_factory=dict)


class DenseHamiltonian:
    """H(t) split into static diagonals plus the transverse-drive matvec."""

    def __init__(self, model: IsingModel, cap: int = EXACT_CAP):
        n = model.n_sites
        if n > cap:
            raise ValueError(f"{n} sites exceeds the dense-engine cap of {cap}")
        self.model = model
        self.n = n
        self.dim = 1 << n
        self.basis = DenseBasis.build(model.lattice)
        bits = self.basis.bits.astype(float)
        tab = model.interactions
        u_diag = np.zeros(self.dim)
        for (i, j), u in zip(tab.pairs, tab.u_mhz):
            u_diag += angular(u) * bits[:, i] * bits[:, j]
        self.u_diag = u_diag
        self.offset_diag = bits @ (angular(1.0) * model.detuning_offset())
        self.f = model.rabi_scale()

    def diagonal(self, delta_mhz: float) -> np.ndarray:
        """Interaction + detuning diagonal in rad/us at global detuning."""
        return self.u_diag - angular(delta_mhz) * self.basis.pop - self.offset_diag

    def apply_sigma_x(self, psi: np.ndarray) -> np.ndarray:
        """sum_i f_i sigma_x^i |psi> via bit flips."""
        out = np.empty_like(psi)
        h_matvec(np.ascontiguousarray(psi, dtype=complex),
                 np.zeros(self.dim), 1.0, self.f, out)
        return out

    def matvec(self, psi: np.ndarray, omega_mhz: float,
               diag: np.ndarray) -> np.ndarray:
        out = np.empty_like(psi)
        h_matvec(np.ascontiguousarray(psi, dtype=complex), diag,
                 0.5 * angular(omega_mhz), self.f, out)
        return out

    def dense_matrix(self, t: float) -> np.ndarray:
        """Full H(t) in rad/us (small N only)."""
        omega, delta = self.model.schedule.evaluate(t)
        h = np.diag(self.diagonal(delta)).astype(complex)
        half = 0.5 * angular(omega)
        for i in range(self.n):
            for s in range(self.dim):
                h[s ^ (1 << i), s] += half * self.f[i]
        return h

    def ground_state(self) -> np.ndarray:
        psi = np.zeros(self.dim, dtype=complex)
        psi[0] = 1.0
        return psi


def _sample_grid(end: float, dt: float, n_records: int) -> np.ndarray:
    """Step indices at which observables are recorded."""
    n_steps = max(1, int(np.ceil(end / dt - 1e-9)))
    stride = max(1, n_steps // max(1, n_records))
    idx = np.arange(0, n_steps + 1, stride)
    if idx[-1] != n_steps:
        idx = np.append(idx, n_steps)
    return idx


def _record(series: list, t: float, probs: np.ndarray, basis: DenseBasis):
    site_density = probs @ basis.bits
    mstag = float(probs @ basis.mstag) if basis.mstag is not None else np.nan
    series.append((t, site_density, float(site_density.mean()), mstag))


def _pack_series(rows: list, meta: dict) -> TimeSeries:
    times = np.array([r[0] for r in rows])
    site_density = np.array([r[1] for r in rows])
    density = np.array([r[2] for r in rows])
    m_stag = np.array([r[3] for r in rows])
    return TimeSeries(times, site_density, density, m_stag, meta)


def evolve_schrodinger(model: IsingModel, dt: float = 0.001,
                       n_records: int = 60, krylov_tol: float = 1e-10,
                       cap: int = EXACT_CAP,
                       initial_state: np.ndarray | None = None
                       ) -> tuple[TimeSeries, QuantumState]:
    """Closed-system sweep evolution from the all-ground state.

    Krylov local exponentials of H frozen at each step midpoint; evolution
    stops at the schedule's end time (after truncation H is diagonal, so
    occupation statistics no longer change).  ``initial_state`` overrides the
    all-ground start (oracle use).
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    ham = DenseHamiltonian(model, cap=cap)
    end = model.schedule.end_time
    n_steps = max(1, int(np.ceil(end / dt - 1e-9)))
    record_at = set(_sample_grid(end, dt, n_records).tolist())
    psi = ham.ground_state() if initial_state is None \
        else np.asarray(initial_state, dtype=complex).copy()
    rows: list = []
    _record(rows, 0.0, np.abs(psi) ** 2, ham.basis)
    t = 0.0
    for step in range(n_steps):
        h = min(dt, end - t)
        omega, delta = model.schedule.evaluate(t + 0.5 * h)
        diag = ham.diagonal(delta)
        psi = expm_krylov(lambda v: ham.matvec(v, omega, diag), psi,
                          -1j * h, tol=krylov_tol)
        t += h
        if step + 1 in record_at:
            _record(rows, t, np.abs(psi) ** 2, ham.basis)
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > 1e-8:
        raise RuntimeError(f"norm drifted to {norm}")
    series = _pack_series(rows, {"engine": "exact", "dt": dt})
    return series, QuantumState(psi / norm, model.lattice)


def evolve_trajectories(model: IsingModel, n_traj: int, dt: float = 0.001,
                        seed: int = 0, n_records: int = 60,
                        samples_per_traj: int = 0, krylov_tol: float = 1e-10,
                        cap: int = EXACT_CAP,
                        initial_state: np.ndarray | None = None):
    """Quantum-trajectory unravelling of the Lindblad evolution.

    Drift H - i (gamma/2) sum_i n_i, integrated per step as a symmetric
    split (exact diagonal decay half-steps around the coherent Krylov step);
    jumps sqrt(gamma) n_i fire when the squared norm crosses a pre-drawn
    uniform threshold, picking the site with probability ~ gamma <n_i>.

    Returns (ensemble-averaged TimeSeries, bits) where bits holds
    ``samples_per_traj`` occupation snapshots per trajectory measured from
    the final states (empty array when samples_per_traj == 0).
    """
    if n_traj < 1:
        raise ValueError("need at least one trajectory")
    gamma = model.gamma
    ham = DenseHamiltonian(model, cap=cap)
    end = model.schedule.end_time
    n_steps = max(1, int(np.ceil(end / dt - 1e-9)))
    rec_idx = _sample_grid(end, dt, n_records)
    rec_set = set(rec_idx.tolist())
    acc: dict[int, np.ndarray] = {i: np.zeros(ham.dim) for i in rec_set | {0}}
    times = {0: 0.0}
    all_bits = []
    for k in range(n_traj):
        g = rng_from(seed, k)
        psi = ham.ground_state() if initial_state is None \
            else np.asarray(initial_state, dtype=complex).copy()
        threshold = g.random()
        acc[0] += np.abs(psi) ** 2 / n_traj
        t = 0.0
        for step in range(n_steps):
            h = min(dt, end - t)
            omega, delta = model.schedule.evaluate(t + 0.5 * h)
            diag = ham.diagonal(delta)
            if gamma > 0:
                decay = np.exp(-0.25 * gamma * h * ham.basis.pop)
                psi = decay * psi
            psi = expm_krylov(lambda v: ham.matvec(v, omega, diag), psi,
                              -1j * h, tol=krylov_tol)
            if gamma > 0:
                psi = decay * psi
                norm2 = float(np.real(np.vdot(psi, psi)))
                if norm2 < threshold:
                    probs = np.abs(psi) ** 2
                    weights = probs @ ham.basis.bits
                    total = weights.sum()
                    if total > 0:
                        site = int(g.choice(ham.n, p=weights / total))
                        psi = np.where(ham.basis.bits[:, site] == 1, psi, 0.0)
                        psi = psi / np.linalg.norm(psi)
                    threshold = g.random()
            t += h
            if step + 1 in rec_set:
                norm2 = float(np.real(np.vdot(psi, psi)))
                acc[step + 1] += np.abs(psi) ** 2 / norm2 / n_traj
                times[step + 1] = t
        if samples_per_traj:
            probs = np.abs(psi) ** 2
            probs = probs / probs.sum()
            draws = g.choice(ham.dim, size=samples_per_traj, p=probs)
            all_bits.append(ham.basis.bits[draws])
    rows = []
    for idx in sorted(times):
        probs = acc[idx]
        _record(rows, times[idx], probs, ham.basis)
    series = _pack_series(rows, {"engine": "trajectories", "dt": dt,
                                 "n_traj": n_traj, "gamma": gamma})
    bits = np.concatenate(all_bits) if all_bits else np.zeros((0, ham.n), np.uint8)
    return series, bits


def dense_lindblad(model: IsingModel, dt: float = 0.001, n_records: int = 60,
                   cap: int = DENSE_LINDBLAD_CAP,
                   initial_state: np.ndarray | None = None):
    """RK4 master-equation oracle for N <= 8.

    The on-site dephasing dissipator acts elementwise:
    L[rho]_{rc} = gamma (pop(r & c) - (pop(r) + pop(c))/2) rho_{rc}.
    """
    n = model.n_sites
    if n > cap:
        raise ValueError(f"{n} sites exceeds the dense-Lindblad cap of {cap}")
    gamma = model.gamma
    ham = DenseHamiltonian(model, cap=cap)
    states = np.arange(ham.dim, dtype=np.uint32)
    pop_and = np.array([[bin(int(r & c)).count("1") for c in states]
                        for r in states], dtype=float)
    kernel = gamma * (pop_and - 0.5 * (ham.basis.pop[:, None]
                                       + ham.basis.pop[None, :]))
    half = 0.5
    xf = np.zeros((ham.dim, ham.dim))
    for i in range(n):
        for s in range(ham.dim):
            xf[s ^ (1 << i), s] += ham.f[i]

    def h_at(t: float) -> np.ndarray:
        omega, delta = model.schedule.evaluate(t)
        return np.diag(ham.diagonal(delta)) + (half * angular(omega)) * xf

    def rhs(t: float, rho: np.ndarray) -> np.ndarray:
        h = h_at(t)
        out = -1j * (h @ rho - rho @ h)
        if gamma > 0:
            out += kernel * rho
        return out

    end = model.schedule.end_time
    n_steps = max(1, int(np.ceil(end / dt - 1e-9)))
    rec_set = set(_sample_grid(end, dt, n_records).tolist())
    if initial_state is None:
        rho = np.zeros((ham.dim, ham.dim), dtype=complex)
        rho[0, 0] = 1.0
    else:
        psi0 = np.asarray(initial_state, dtype=complex)
        rho = np.outer(psi0, psi0.conj())
    rows = []
    _record(rows, 0.0, np.real(np.diag(rho)), ham.basis)
    out_states = [(0.0, DensityState(rho.copy(), model.lattice))]
    t = 0.0
    for step in range(n_steps):
        h = min(dt, end - t)
        k1 = rhs(t, rho)
        k2 = rhs(t + 0.5 * h, rho + 0.5 * h * k1)
        k3 = rhs(t + 0.5 * h, rho + 0.5 * h * k2)
        k4 = rhs(t + h, rho + h * k3)
        rho = rho + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        t += h
        if step + 1 in rec_set:
            _record(rows, t, np.real(np.diag(rho)), ham.basis)
            out_states.append((t, DensityState(rho.copy(), model.lattice)))
    series = _pack_series(rows, {"engine": "lindblad", "dt": dt,
                                 "gamma": gamma})
    return series, out_states
