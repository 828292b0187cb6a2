"""Metropolis Monte Carlo for the classical Ising limit, Binder-cumulant
critical-temperature extraction, and small-system enumeration oracles.

Energies and temperatures are E/h in MHz with k_B = 1; results are commonly
quoted in units of the mean nearest-neighbour coupling U_nnb.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._kernels import metropolis_sweeps
from .lattice import (InteractionTable, Lattice, build_square,
                      pair_interactions, sample_positions)
from .model import IsingModel, classical_energy
from .sampler import SnapshotSet
from .seeding import rng, seed_sequence
from .units import DEFAULT_C6_MHZ_UM6, DEFAULT_CUTOFF_A

_SWEEP_CHUNK = 2000               # kernel sweeps per call (bounds RNG buffers)


@dataclass
class McEnsemble:
    """Measured series of one equilibrated Metropolis chain."""

    temperature: float            # MHz
    energies: np.ndarray          # (n_meas,) running H_class, MHz
    m_signed: np.ndarray          # (n_meas,) signed (n_A - n_B)/(N/2), square only
    bits: np.ndarray | None      # (n_meas, N) configurations if collected
    lattice_label: str
    boundary: str
    seed: int
    disorder_id: int | None = None

    @property
    def energy(self) -> float:
        return float(self.energies.mean())

    @property
    def energy_error(self) -> float:
        """Standard error with a crude autocorrelation inflation (binning)."""
        return binned_error(self.energies)

    def snapshots(self) -> SnapshotSet:
        if self.bits is None:
            raise ValueError("configurations were not collected for this run")
        return SnapshotSet(self.bits, self.lattice_label,
                           {"engine": "mc", "T_mhz": self.temperature,
                            "seed": self.seed})


def binned_error(series: np.ndarray, n_bins: int = 32) -> float:
    """Standard error of the mean from bin averages (autocorrelation-safe)."""
    m = len(series)
    if m < 2:
        return float("inf")
    n_bins = min(n_bins, m)
    usable = (m // n_bins) * n_bins
    means = series[:usable].reshape(n_bins, -1).mean(axis=1)
    return float(means.std(ddof=1) / np.sqrt(n_bins))


def site_detunings(model: IsingModel) -> np.ndarray:
    """Per-site detuning of the classical limit: delta at the schedule end
    plus the static offsets."""
    _, delta = model.schedule.evaluate(model.schedule.end_time)
    return delta + model.detuning_offset()


def _run_chain(table: InteractionTable, delta: np.ndarray, sub_sign,
               norm: float, bits: np.ndarray, t_mhz: float, n_sweeps: int,
               measure_every: int, generator, collect: bool):
    """Drive the numba kernel in chunks; returns (energies, m, confs)."""
    n = len(bits)
    indptr, indices, coupling = table.neighbor_lists()
    energy = float(np.sum(table.u_mhz
                          * bits[table.pairs[:, 0]] * bits[table.pairs[:, 1]])
                   - np.dot(delta, bits))
    beta = 1.0 / t_mhz
    all_e, all_m, all_c = [], [], []
    done = 0
    while done < n_sweeps:
        chunk = min(_SWEEP_CHUNK, n_sweeps - done)
        n_meas = chunk // measure_every
        out_e = np.empty(n_meas)
        out_m = np.empty(n_meas)
        out_bits = np.empty((n_meas if collect else 0, n), dtype=np.uint8)
        raw_u = generator.random(chunk * n)
        raw_s = generator.integers(0, n, size=chunk * n)
        energy = metropolis_sweeps(bits, indptr, indices, coupling, delta,
                                   beta, chunk, measure_every, sub_sign, norm,
                                   energy, raw_u, raw_s, out_e, out_m,
                                   collect, out_bits)
        all_e.append(out_e)
        all_m.append(out_m)
        if collect:
            all_c.append(out_bits)
        done += chunk
    conf = np.concatenate(all_c) if collect else None
    return np.concatenate(all_e), np.concatenate(all_m), conf


def _order_parameter_weights(lattice: Lattice):
    if lattice.geometry == "square":
        return np.where(lattice.sublattice == 0, 1.0, -1.0), lattice.n_sites / 2.0
    return np.zeros(lattice.n_sites), 1.0


def metropolis_run(model: IsingModel, t_mhz: float, n_sweeps: int = 10_000,
                   n_measure: int = 10_000, seed: int = 0,
                   measure_every: int = 1, collect: bool = False,
                   anneal: bool = True,
                   disorder_id: int | None = None) -> McEnsemble:
    """Single-spin-flip Metropolis sampling of H_class at temperature T.

    Flips are accepted with min(1, exp(-dE/T)); dE comes incrementally from
    the interaction table.  ``n_sweeps`` of burn-in precede ``n_measure``
    measured sweeps.  ``anneal=True`` spends the first part of the burn-in
    cooling geometrically from a high temperature, which unsticks the
    low-temperature ordered phases.
    """
    if t_mhz <= 0:
        raise ValueError("temperature must be positive")
    lattice = model.lattice
    table = model.interactions
    delta = site_detunings(model)
    sub_sign, norm = _order_parameter_weights(lattice)
    g = rng(seed)
    bits = (g.random(lattice.n_sites) < 0.5).astype(np.uint8)
    t_hi = max(2.0 * t_mhz, 2.0 * table.u_nnb)
    if anneal and t_hi > t_mhz:
        stages = np.geomspace(t_hi, t_mhz, 6)[:-1]
        per_stage = max(1, n_sweeps // 12)
        for t_stage in stages:
            _run_chain(table, delta, sub_sign, norm, bits, t_stage,
                       per_stage, per_stage + 1, g, False)
        burn = max(1, n_sweeps - 5 * per_stage)
    else:
        burn = n_sweeps
    _run_chain(table, delta, sub_sign, norm, bits, t_mhz, burn, burn + 1,
               g, False)
    energies, m, conf = _run_chain(table, delta, sub_sign, norm, bits, t_mhz,
                                   n_measure * measure_every, measure_every,
                                   g, collect)
    boundary = "periodic" if lattice.periodic else "open"
    return McEnsemble(t_mhz, energies, m, conf, lattice.label, boundary,
                      seed, disorder_id)


def energy_curve(model: IsingModel, t_grid_mhz, n_sweeps: int = 10_000,
                 n_measure: int = 10_000, seed: int = 0,
                 collect: bool = False) -> list[McEnsemble]:
    """One ensemble per temperature, annealed from the top of the grid down.

    The configuration carries over between adjacent temperatures, so only the
    first (hottest) point pays the full burn-in.
    """
    t_grid = np.sort(np.asarray(t_grid_mhz, dtype=float))
    lattice = model.lattice
    table = model.interactions
    delta = site_detunings(model)
    sub_sign, norm = _order_parameter_weights(lattice)
    g = rng(seed)
    bits = (g.random(lattice.n_sites) < 0.5).astype(np.uint8)
    out = []
    boundary = "periodic" if lattice.periodic else "open"
    for idx, t in enumerate(t_grid[::-1]):
        burn = n_sweeps if idx == 0 else max(n_sweeps // 5, 1)
        _run_chain(table, delta, sub_sign, norm, bits, t, burn, burn + 1,
                   g, False)
        energies, m, conf = _run_chain(table, delta, sub_sign, norm, bits, t,
                                       n_measure, 1, g, collect)
        out.append(McEnsemble(t, energies, m, conf, lattice.label, boundary,
                              seed))
    return out[::-1]


# -- Binder cumulant and T_c ---------------------------------------------------

@dataclass
class BinderReport:
    """Binder cumulants per (L, T), crossings and the extrapolated T_c."""

    sizes: list
    t_grid: np.ndarray            # MHz
    u2: dict                      # L -> (n_T,) disorder-averaged U_2
    u2_err: dict                  # L -> (n_T,) jackknife errors
    crossings: dict               # (L, 2L) -> (T_cross, error) or None
    t_c: float | None             # MHz
    t_c_err: float | None
    u_ref_mhz: float              # normalisation scale (disorder-mean U_nnb)
    moments: dict = field(default_factory=dict, repr=False)


def _u2_from_moments(m2: np.ndarray, m4: np.ndarray) -> np.ndarray:
    return 1.5 * (1.0 - m4 / (3.0 * m2**2))


def binder_cumulant(m_signed: np.ndarray) -> float:
    """U_2 = (3/2)(1 - <m^4> / 3 <m^2>^2) of an order-parameter series."""
    m2 = float(np.mean(m_signed**2))
    m4 = float(np.mean(m_signed**4))
    return float(_u2_from_moments(np.array(m2), np.array(m4)))


def _crossing(t, diff):
    """First sign change of ``diff`` on the grid, linearly interpolated."""
    s = np.sign(diff)
    for k in range(len(t) - 1):
        if s[k] != 0 and s[k + 1] != 0 and s[k] != s[k + 1]:
            f = diff[k] / (diff[k] - diff[k + 1])
            return float(t[k] + f * (t[k + 1] - t[k]))
    return None


def disordered_square_model(L: int, instance_seed: int, a: float = 10.0,
                            c6: float = DEFAULT_C6_MHZ_UM6,
                            cutoff_a: float = DEFAULT_CUTOFF_A,
                            sigma_static: float = 0.1, sigma_r: float = 0.17,
                            sigma_z: float = 1.0, delta_mhz: float = 2.0,
                            periodic: bool = True) -> IsingModel:
    """Periodic L x L model with one position-disorder instance, homogeneous
    detuning held at ``delta_mhz`` (classical runs read the schedule end)."""
    from .schedule import SweepSchedule
    lat = build_square(L, a, periodic=periodic)
    pos = sample_positions(lat, sigma_static, sigma_r, sigma_z, instance_seed)
    table = pair_interactions(lat, c6, cutoff_a, positions=pos)
    sched = SweepSchedule([[0.0, 0.0, delta_mhz], [1.0, 0.0, delta_mhz]])
    return IsingModel(lat, table, sched)


def binder_tc(sizes, t_grid_mhz, n_instances: int = 50,
              n_sweeps: int = 10_000, n_measure: int = 10_000,
              seed: int = 0, model_factory=None,
              progress=None, pool_map=map) -> BinderReport:
    """Extrapolated classical critical temperature from (L, 2L) crossings.

    For every size and disorder instance an annealed Metropolis chain runs
    over the temperature grid; moments <m^2>, <m^4> are disorder-averaged,
    U_2 errors are delete-one jackknives over instances, crossings of the
    (L, 2L) cumulant curves are linearly interpolated and extrapolated
    against 1/L to the thermodynamic limit.
    """
    sizes = sorted(sizes)
    pairs = [(L, 2 * L) for L in sizes if 2 * L in sizes]
    if not pairs:
        raise ValueError("need at least one (L, 2L) size pair")
    factory = model_factory or disordered_square_model
    t_grid = np.asarray(t_grid_mhz, dtype=float)

    jobs = [(L, inst) for L in sizes for inst in range(n_instances)]

    def one_chain(job):
        L, inst = job
        child = seed_sequence(seed, L, inst).generate_state(1)[0]
        model = factory(L, int(child))
        ensembles = energy_curve(model, t_grid, n_sweeps, n_measure,
                                 seed=int(child) + 1)
        m2 = np.array([np.mean(e.m_signed**2) for e in ensembles])
        m4 = np.array([np.mean(e.m_signed**4) for e in ensembles])
        return L, inst, m2, m4, model.interactions.u_nnb

    moments = {L: np.zeros((n_instances, 2, len(t_grid))) for L in sizes}
    u_nnb_samples = []
    for count, (L, inst, m2, m4, u_nnb) in enumerate(pool_map(one_chain, jobs)):
        moments[L][inst, 0] = m2
        moments[L][inst, 1] = m4
        u_nnb_samples.append(u_nnb)
        if progress:
            progress(count + 1, len(jobs))

    u2, u2_err = {}, {}
    for L in sizes:
        m2_bar = moments[L][:, 0].mean(axis=0)
        m4_bar = moments[L][:, 1].mean(axis=0)
        u2[L] = _u2_from_moments(m2_bar, m4_bar)
        jk = _jackknife_u2(moments[L])
        u2_err[L] = jk

    crossings = {}
    cross_jk = {}
    for (La, Lb) in pairs:
        t_x = _crossing(t_grid, u2[La] - u2[Lb])
        if t_x is None:
            crossings[(La, Lb)] = None
            continue
        deletions = []
        for k in range(n_instances):
            u2a = _u2_delete(moments[La], k)
            u2b = _u2_delete(moments[Lb], k)
            t_k = _crossing(t_grid, u2a - u2b)
            if t_k is not None:
                deletions.append(t_k)
        err = _jackknife_spread(np.array(deletions)) if len(deletions) > 1 else np.nan
        crossings[(La, Lb)] = (t_x, err)
        cross_jk[(La, Lb)] = deletions

    valid = [(pair, val) for pair, val in crossings.items() if val is not None]
    t_c = t_c_err = None
    if valid:
        inv_l = np.array([1.0 / pair[0] for pair, _ in valid])
        t_x = np.array([val[0] for _, val in valid])
        if len(valid) == 1:
            t_c, t_c_err = float(t_x[0]), float(valid[0][1][1])
        else:
            coeff = np.polyfit(inv_l, t_x, 1)
            t_c = float(coeff[1])
            intercepts = []
            n_del = min(len(v) for v in cross_jk.values())
            for k in range(n_del):
                t_k = np.array([cross_jk[pair][k] for pair, _ in valid])
                intercepts.append(np.polyfit(inv_l, t_k, 1)[1])
            t_c_err = float(_jackknife_spread(np.array(intercepts)))
    return BinderReport(sizes, t_grid, u2, u2_err, crossings, t_c, t_c_err,
                        float(np.mean(u_nnb_samples)), moments)


def _u2_delete(mom: np.ndarray, k: int) -> np.ndarray:
    keep = np.ones(len(mom), dtype=bool)
    keep[k] = False
    return _u2_from_moments(mom[keep, 0].mean(axis=0), mom[keep, 1].mean(axis=0))


def _jackknife_u2(mom: np.ndarray) -> np.ndarray:
    n = len(mom)
    dels = np.array([_u2_delete(mom, k) for k in range(n)])
    return np.sqrt((n - 1) / n * np.sum((dels - dels.mean(axis=0)) ** 2, axis=0))


def _jackknife_spread(samples: np.ndarray) -> float:
    n = len(samples)
    return float(np.sqrt((n - 1) / n * np.sum((samples - samples.mean()) ** 2)))


# -- enumeration oracles (small N) ---------------------------------------------

def enumerate_energies(model: IsingModel) -> np.ndarray:
    """H_class of every configuration, indexed by the site-bit integer."""
    n = model.n_sites
    if n > 20:
        raise ValueError("enumeration capped at 20 sites")
    states = np.arange(1 << n, dtype=np.int64)
    bits = ((states[:, None] >> np.arange(n)) & 1).astype(float)
    delta = site_detunings(model)
    tab = model.interactions
    e = np.zeros(len(states))
    if len(tab.pairs):
        e = (bits[:, tab.pairs[:, 0]] * bits[:, tab.pairs[:, 1]]) @ tab.u_mhz
    return e - bits @ delta


def exact_partition_curve(model: IsingModel, t_grid_mhz) -> np.ndarray:
    """Exact thermal energy E(T) = sum_c H e^{-H/T} / Z by full enumeration."""
    e = enumerate_energies(model)
    e0 = e.min()
    out = []
    for t in np.asarray(t_grid_mhz, dtype=float):
        w = np.exp(-(e - e0) / t)
        out.append(float(np.sum(e * w) / np.sum(w)))
    return np.array(out)


def sample_boltzmann_exact(model: IsingModel, t_mhz: float, n_samples: int,
                           seed: int) -> SnapshotSet:
    """Exact Boltzmann snapshot sampler by enumeration (oracle use)."""
    e = enumerate_energies(model)
    w = np.exp(-(e - e.min()) / t_mhz)
    cdf = np.cumsum(w)
    cdf /= cdf[-1]
    draws = np.searchsorted(cdf, rng(seed).random(n_samples), side="right")
    bits = ((draws[:, None] >> np.arange(model.n_sites)) & 1).astype(np.uint8)
    return SnapshotSet(bits, model.lattice.label,
                       {"engine": "boltzmann-exact", "T_mhz": t_mhz,
                        "seed": seed})
