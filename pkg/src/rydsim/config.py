"""Experiment configuration: JSON schema, validation and object builders.

Unit-suffixed keys make the conventions explicit: *_um (micrometres),
*_us (microseconds), *_mhz (ordinary frequency).  ``validate`` returns the
full list of violations rather than stopping at the first.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .lattice import (Lattice, build_square, build_triangular, custom_lattice,
                      pair_interactions, sample_positions)
from .model import ImperfectionModel, IsingModel, gaussian_beam_profile
from .schedule import SweepSchedule
from .seeding import PURPOSE_POSITIONS, seed_sequence
from .units import DEFAULT_C6_MHZ_UM6, DEFAULT_CUTOFF_A

ENGINES = ("exact", "trajectories", "mps", "mc")
EXACT_SITE_CAP = 16
MPS_SITE_CAP = 48
MPS_CHI_CAP = 256


@dataclass
class ExperimentConfig:
    raw: dict
    path: str | None = None

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls(json.load(fh), str(path))

    def hash(self) -> str:
        blob = json.dumps(self.raw, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    @property
    def seed(self) -> int:
        return int(self.raw.get("seed", 0))

    @property
    def engine(self) -> str:
        return self.raw.get("engine", "exact")

    @property
    def output_dir(self) -> Path:
        return Path(self.raw.get("output_dir", "rydsim-out"))


def validate(config: ExperimentConfig) -> list[str]:
    """All schema and cap violations, each naming the offending key."""
    cfg = config.raw
    bad: list[str] = []
    lat = cfg.get("lattice")
    n_sites = None
    if not isinstance(lat, dict):
        bad.append("lattice: block missing")
    else:
        geom = lat.get("geometry")
        if geom == "square":
            L = lat.get("L")
            if not isinstance(L, int) or L < 2 or L % 2:
                bad.append("lattice.L: square arrays require even L >= 2 "
                           "(Neel degeneracy)")
            else:
                n_sites = L * L
        elif geom == "triangular":
            s = lat.get("shells")
            if not isinstance(s, int) or s < 0:
                bad.append("lattice.shells: need an integer >= 0")
            else:
                n_sites = 3 * (s + 1) ** 2
        elif geom == "custom":
            pos = lat.get("positions_um")
            if not isinstance(pos, list) or not pos:
                bad.append("lattice.positions_um: custom geometry needs "
                           "a nonempty position list")
            else:
                n_sites = len(pos)
        else:
            bad.append(f"lattice.geometry: unknown geometry {geom!r}")
        if geom in ("square", "triangular") and \
                not isinstance(lat.get("spacing_um"), (int, float)):
            bad.append("lattice.spacing_um: required (micrometres)")
        cutoff = lat.get("cutoff_a", DEFAULT_CUTOFF_A)
        if not (isinstance(cutoff, (int, float)) and cutoff > 1):
            bad.append("lattice.cutoff_a: must exceed 1 lattice spacing")
        dis = lat.get("disorder")
        if dis is not None:
            for key in ("sigma_static_um", "sigma_r_um", "sigma_z_um"):
                if not (isinstance(dis.get(key), (int, float))
                        and dis[key] >= 0):
                    bad.append(f"lattice.disorder.{key}: required, >= 0")
    sched = cfg.get("schedule")
    if not isinstance(sched, dict) or "breakpoints" not in sched:
        bad.append("schedule.breakpoints: block missing")
    else:
        try:
            SweepSchedule(np.asarray(sched["breakpoints"], dtype=float),
                          sched.get("t_off_us"))
        except (ValueError, TypeError) as exc:
            bad.append(f"schedule.breakpoints: {exc}")
    engine = cfg.get("engine", "exact")
    if engine not in ENGINES:
        bad.append(f"engine: must be one of {ENGINES}")
    params = cfg.get("engine_params", {})
    if n_sites is not None:
        if engine in ("exact", "trajectories") and n_sites > EXACT_SITE_CAP:
            bad.append(f"engine: {n_sites} sites exceeds the dense-engine "
                       f"cap of {EXACT_SITE_CAP}")
        if engine == "mps" and n_sites > MPS_SITE_CAP:
            bad.append(f"engine: {n_sites} sites exceeds the MPS production "
                       f"cap of {MPS_SITE_CAP}")
    if engine == "mps":
        chi = params.get("chi_max", 128)
        if not (isinstance(chi, int) and 2 <= chi <= MPS_CHI_CAP):
            bad.append(f"engine_params.chi_max: need 2 <= chi <= {MPS_CHI_CAP}")
    if engine == "trajectories":
        if not (isinstance(params.get("n_traj", 100), int)
                and params.get("n_traj", 100) >= 1):
            bad.append("engine_params.n_traj: need >= 1")
    dt = params.get("dt_us", 0.001)
    if not (isinstance(dt, (int, float)) and dt > 0):
        bad.append("engine_params.dt_us: must be positive")
    imp = cfg.get("imperfections")
    if imp is not None:
        for key in ("epsilon", "epsilon_prime"):
            v = imp.get(key, 0.0)
            if not (isinstance(v, (int, float)) and 0 <= v <= 1):
                bad.append(f"imperfections.{key}: must lie in [0, 1]")
        if imp.get("gamma_per_us", 0.0) < 0:
            bad.append("imperfections.gamma_per_us: must be >= 0")
    scan = cfg.get("scan", {})
    t_offs = scan.get("t_off_us")
    if t_offs is not None and (not isinstance(t_offs, list) or not t_offs):
        bad.append("scan.t_off_us: scan axis must be a nonempty list")
    chis = scan.get("chi_max")
    if chis is not None:
        if not isinstance(chis, list) or not chis:
            bad.append("scan.chi_max: scan axis must be a nonempty list")
        elif engine != "mps":
            bad.append("scan.chi_max: only meaningful for the mps engine")
    inst = scan.get("disorder_instances", 1)
    if not (isinstance(inst, int) and inst >= 1):
        bad.append("scan.disorder_instances: need an integer >= 1")
    return bad


def build_lattice(cfg: dict) -> Lattice:
    lat = cfg["lattice"]
    geom = lat["geometry"]
    if geom == "square":
        return build_square(lat["L"], lat["spacing_um"],
                            periodic=lat.get("periodic", False))
    if geom == "triangular":
        return build_triangular(lat["shells"], lat["spacing_um"])
    return custom_lattice(lat["positions_um"], lat.get("spacing_um"))


def build_schedule(cfg: dict) -> SweepSchedule:
    sched = cfg["schedule"]
    return SweepSchedule(np.asarray(sched["breakpoints"], dtype=float),
                         sched.get("t_off_us"))


def build_imperfections(cfg: dict, lattice: Lattice) -> ImperfectionModel | None:
    imp = cfg.get("imperfections")
    if imp is None:
        return None
    common = dict(epsilon=imp.get("epsilon", 0.0),
                  epsilon_prime=imp.get("epsilon_prime", 0.0),
                  gamma=imp.get("gamma_per_us", 0.0))
    if imp.get("field_maps_file"):
        data = np.loadtxt(imp["field_maps_file"], delimiter=",")
        data = np.atleast_2d(data)
        order = np.argsort(data[:, 0].astype(int))
        return ImperfectionModel(f=data[order, 1], d=data[order, 2], **common)
    if imp.get("w420_um") and imp.get("w1013_um"):
        return gaussian_beam_profile(
            lattice, imp["w420_um"], imp["w1013_um"],
            light_shift_mhz=imp.get("light_shift_mhz", 0.0),
            center=imp.get("beam_center_um", (0.0, 0.0)), **common)
    return ImperfectionModel.identity(lattice.n_sites, **common)


def build_model(config: ExperimentConfig, instance: int = 0,
                t_off: float | None = None) -> IsingModel:
    """Assemble the IsingModel for one disorder instance and one t_off."""
    cfg = config.raw
    lattice = build_lattice(cfg)
    lat_cfg = cfg["lattice"]
    dis = lat_cfg.get("disorder")
    positions = None
    if dis is not None:
        child = seed_sequence(config.seed, PURPOSE_POSITIONS,
                              instance).generate_state(1)[0]
        positions = sample_positions(lattice, dis["sigma_static_um"],
                                     dis["sigma_r_um"], dis["sigma_z_um"],
                                     int(child))
    table = pair_interactions(lattice,
                              lat_cfg.get("c6_mhz_um6", DEFAULT_C6_MHZ_UM6),
                              lat_cfg.get("cutoff_a", DEFAULT_CUTOFF_A),
                              positions=positions)
    schedule = build_schedule(cfg)
    if t_off is not None:
        schedule = schedule.truncate(t_off)
    imperfections = build_imperfections(cfg, lattice)
    return IsingModel(lattice, table, schedule, imperfections)
