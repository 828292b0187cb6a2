"""Executable Ising Hamiltonian: couplings, per-site drive fields and the
classical-limit energy.

Site i carries the occupation n_i = (1 + sigma_z)/2 with bit 1 = Rydberg,
driven by Omega_i(t) = f_i Omega(t) and detuned by delta_i(t) = delta(t) + d_i.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import InteractionTable, Lattice
from .schedule import SweepSchedule


@dataclass(frozen=True)
class ImperfectionModel:
    """Per-site drive inhomogeneity, detection errors and decoherence."""

    f: np.ndarray                 # (N,) Rabi scale factors, 0 < f_i <= 1
    d: np.ndarray                 # (N,) detuning offsets, MHz
    epsilon: float = 0.0          # false-positive detection rate
    epsilon_prime: float = 0.0    # false-negative detection rate
    gamma: float = 0.0            # single-site decoherence rate, 1/us
    w420: float | None = None     # beam waists, um (metadata)
    w1013: float | None = None

    def __post_init__(self):
        f = np.asarray(self.f, dtype=float)
        d = np.asarray(self.d, dtype=float)
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "d", d)
        if np.any(f <= 0) or np.any(f > 1 + 1e-12):
            raise ValueError("Rabi scale factors must satisfy 0 < f_i <= 1")
        if not (0 <= self.epsilon <= 1 and 0 <= self.epsilon_prime <= 1):
            raise ValueError("detection error rates must lie in [0, 1]")
        if self.gamma < 0:
            raise ValueError("gamma must be >= 0")

    @classmethod
    def identity(cls, n_sites: int, epsilon: float = 0.0,
                 epsilon_prime: float = 0.0, gamma: float = 0.0):
        return cls(np.ones(n_sites), np.zeros(n_sites),
                   epsilon, epsilon_prime, gamma)


def gaussian_beam_profile(lattice: Lattice, w420: float, w1013: float,
                          light_shift_mhz: float = 0.0,
                          center=(0.0, 0.0), epsilon: float = 0.0,
                          epsilon_prime: float = 0.0,
                          gamma: float = 0.0) -> ImperfectionModel:
    """Drive inhomogeneity from the finite excitation-beam waists.

    The two-photon Rabi frequency is proportional to the product of the two
    beam amplitudes, f_i = exp(-rho_i^2/w420^2 - rho_i^2/w1013^2).  The
    differential light shift follows the 1013 nm intensity; with the schedule
    holding the beam-centre compensated values, the residual per-site offset
    is d_i = (1 - g_i^2) * light_shift_mhz with g_i = exp(-rho_i^2/w1013^2)
    (zero on axis, approaching the full shift far off axis).
    """
    if w420 <= 0 or w1013 <= 0:
        raise ValueError("beam waists must be positive")
    centroid = lattice.positions.mean(axis=0) + np.asarray(center, dtype=float)
    rho2 = np.sum((lattice.positions - centroid) ** 2, axis=1)
    f = np.exp(-rho2 / w420**2 - rho2 / w1013**2)
    g2 = np.exp(-2.0 * rho2 / w1013**2)
    d = (1.0 - g2) * light_shift_mhz
    return ImperfectionModel(f, d, epsilon, epsilon_prime, gamma,
                             w420=w420, w1013=w1013)


@dataclass(frozen=True)
class IsingModel:
    """Lattice + couplings + schedule + optional imperfections."""

    lattice: Lattice
    interactions: InteractionTable
    schedule: SweepSchedule
    imperfections: ImperfectionModel | None = None

    def __post_init__(self):
        n = self.lattice.n_sites
        if self.interactions.n_sites != n:
            raise ValueError("interaction table does not match lattice")
        if len(self.interactions.pairs) and self.interactions.pairs.max() >= n:
            raise ValueError("interaction pair indexes an unknown site")
        if self.imperfections is not None and len(self.imperfections.f) != n:
            raise ValueError("imperfection arrays do not match lattice")

    @property
    def n_sites(self) -> int:
        return self.lattice.n_sites

    @property
    def gamma(self) -> float:
        return self.imperfections.gamma if self.imperfections else 0.0

    def rabi_scale(self) -> np.ndarray:
        if self.imperfections is None:
            return np.ones(self.n_sites)
        return self.imperfections.f

    def detuning_offset(self) -> np.ndarray:
        if self.imperfections is None:
            return np.zeros(self.n_sites)
        return self.imperfections.d

    def fields_at(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        """Per-site (Omega_i, delta_i) in MHz at time t."""
        omega, delta = self.schedule.evaluate(t)
        return omega * self.rabi_scale(), delta + self.detuning_offset()

    def with_schedule(self, schedule: SweepSchedule) -> "IsingModel":
        return IsingModel(self.lattice, self.interactions, schedule,
                          self.imperfections)


def classical_energy(model: IsingModel, bits: np.ndarray,
                     delta_mhz: float | np.ndarray) -> float:
    """H_class = sum_{i<j} U_ij n_i n_j - sum_i delta_i n_i, as E/h in MHz.

    ``delta_mhz`` is the per-site detuning (scalar for homogeneous drive);
    the site offsets d_i are NOT added here, callers pass the full delta_i.
    """
    bits = np.asarray(bits)
    if bits.shape[-1] != model.n_sites:
        raise ValueError(f"bitstring length {bits.shape[-1]} != N = {model.n_sites}")
    tab = model.interactions
    occ = bits.astype(float)
    pair_e = np.sum(tab.u_mhz * occ[..., tab.pairs[:, 0]] * occ[..., tab.pairs[:, 1]],
                    axis=-1)
    field_e = np.sum(np.broadcast_to(delta_mhz, occ.shape[-1:]) * occ, axis=-1)
    return pair_e - field_e


def blockade_radius(c6_mhz_um6: float, omega_mhz: float) -> float:
    """Distance at which U = hbar * Omega: R_b = (C6 / (h nu_Omega))^(1/6)."""
    if omega_mhz <= 0:
        raise ValueError("Omega must be positive")
    return (c6_mhz_um6 / omega_mhz) ** (1.0 / 6.0)
