"""Hypothetical-temperature assignment: match classical energies of driven
states against a Monte Carlo equilibrium energy curve E(T)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .classical import energy_curve, site_detunings
from .lattice import Lattice, pair_interactions
from .model import IsingModel, classical_energy
from .sampler import SnapshotSet
from .units import DEFAULT_CUTOFF_A


def thermometry_model(lattice: Lattice, u_nnb_mhz: float, delta_mhz: float,
                      cutoff_a: float = DEFAULT_CUTOFF_A) -> IsingModel:
    """Classical model with the ideal-distance convention
    U_ij = U_nnb / (r_ij/a)^6 and a homogeneous detuning."""
    from .schedule import SweepSchedule
    c6 = u_nnb_mhz * lattice.spacing**6
    table = pair_interactions(lattice, c6, cutoff_a)
    sched = SweepSchedule([[0.0, 0.0, delta_mhz], [1.0, 0.0, delta_mhz]])
    return IsingModel(lattice, table, sched)


@dataclass
class ThermometryCurve:
    """Tabulated (T, E^MC(T)) with errors; invertible by interpolation."""

    temperatures: np.ndarray      # MHz, ascending
    energies: np.ndarray          # MHz
    errors: np.ndarray            # MHz
    monotonic: bool = True

    def __post_init__(self):
        order = np.argsort(self.temperatures)
        self.temperatures = np.asarray(self.temperatures, float)[order]
        self.energies = np.asarray(self.energies, float)[order]
        self.errors = np.asarray(self.errors, float)[order]
        viol = np.diff(self.energies) < -2.0 * np.hypot(self.errors[:-1],
                                                        self.errors[1:])
        self.monotonic = not bool(np.any(viol))

    def evaluate(self, t_mhz: float) -> float:
        return float(np.interp(t_mhz, self.temperatures, self.energies))


@dataclass
class TemperatureMatch:
    t_hyp: float                  # MHz
    sigma: float                  # MHz
    status: str                   # "ok" | "below-curve" | "above-curve"


def build_curve(model: IsingModel, t_grid_mhz, n_sweeps: int = 10_000,
                n_measure: int = 10_000, seed: int = 0) -> ThermometryCurve:
    ensembles = energy_curve(model, t_grid_mhz, n_sweeps, n_measure, seed)
    return ThermometryCurve(
        np.array([e.temperature for e in ensembles]),
        np.array([e.energy for e in ensembles]),
        np.array([e.energy_error for e in ensembles]))


def classical_energy_of_data(snapshots: SnapshotSet,
                             model: IsingModel) -> tuple[float, float]:
    """Shot-averaged H_class (E/h in MHz) with its standard error."""
    if len(snapshots) == 0:
        raise ValueError("empty snapshot set")
    delta = site_detunings(model)
    e = classical_energy(model, snapshots.bits, delta)
    se = float(e.std(ddof=1) / np.sqrt(len(e))) if len(e) > 1 else 0.0
    return float(e.mean()), se


def classical_energy_of_state(state, model: IsingModel) -> float:
    """Exact <H_class> of a quantum state (dense QuantumState or MpsState)."""
    delta = site_detunings(model)
    tab = model.interactions
    if hasattr(state, "probabilities"):              # dense state vector
        from .classical import enumerate_energies
        return float(state.probabilities() @ enumerate_energies(model))
    dens = state.site_densities()
    pair = state.pair_density_rows(sources=set(tab.pairs[:, 0].tolist()))
    e = -float(np.dot(delta, dens))
    for (i, j), u in zip(tab.pairs, tab.u_mhz):
        e += u * pair[(min(i, j), max(i, j))]
    return e


def match_temperature(e_target_mhz: float, sigma_e_mhz: float,
                      curve: ThermometryCurve) -> TemperatureMatch:
    """Invert the monotone interpolation of E(T) and propagate errors.

    Targets below the curve minimum report the zero-temperature sentinel
    (the state is at or below the sampled ground-state energy); targets
    above the maximum report an infinite-temperature sentinel.
    """
    t, e = curve.temperatures, np.maximum.accumulate(curve.energies)
    if e_target_mhz < e[0]:
        return TemperatureMatch(0.0, 0.0, "below-curve")
    if e_target_mhz > e[-1]:
        return TemperatureMatch(float("inf"), float("inf"), "above-curve")
    t_hyp = float(np.interp(e_target_mhz, e, t))
    k = min(np.searchsorted(e, e_target_mhz), len(e) - 1)
    k0 = max(k - 1, 0)
    de = e[k] - e[k0]
    slope = de / (t[k] - t[k0]) if t[k] > t[k0] and de > 0 else np.inf
    sigma_curve = float(np.interp(t_hyp, t, curve.errors))
    sigma_t = float(np.hypot(sigma_e_mhz, sigma_curve) / slope) \
        if np.isfinite(slope) else float("inf")
    return TemperatureMatch(t_hyp, sigma_t, "ok")
