"""Pipeline orchestration: scans over t_off, chi and disorder instances.

Every work item truncates the schedule, evolves with the configured engine,
samples snapshots, applies the detection channel and runs the analyses.
Results land in the output directory as NDJSON/CSV plus snapshot files; a
manifest records provenance (config hash, seeds, versions) and references
every output file exactly once.  A failing item is recorded and skipped;
the remaining items proceed.
"""

from __future__ import annotations

import json
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .config import ExperimentConfig, build_model, validate
from .exact import evolve_schrodinger, evolve_trajectories
from .mps import tdvp_evolve
from .mps.checkpoint import save_checkpoint
from .mps.tdvp import TdvpOptions
from .observables import (cluster_report, connected_correlations,
                          rydberg_density, staggered_magnetization_square,
                          staggered_magnetization_triangular,
                          sublattice_histogram)
from .sampler import (SnapshotSet, apply_detection_errors, sample_dense,
                      sample_mps, save_snapshots)
from .seeding import (PURPOSE_DETECTION, PURPOSE_EVOLVE, PURPOSE_MC,
                      PURPOSE_SAMPLING, seed_sequence)


class PipelineError(RuntimeError):
    pass


def _child(master: int, *path: int) -> int:
    return int(seed_sequence(master, *path).generate_state(1)[0])


def write_series_ndjson(path, series, include_sites: bool = False) -> None:
    with open(path, "w") as fh:
        for k, t in enumerate(series.times):
            row = {"t_us": float(t), "n": float(series.density[k]),
                   "m_stag": None if np.isnan(series.m_stag[k])
                   else float(series.m_stag[k])}
            if include_sites:
                row["site_density"] = [float(x) for x in series.site_density[k]]
            fh.write(json.dumps(row) + "\n")


def write_correlation_csv(path, cmap) -> None:
    with open(path, "w") as fh:
        fh.write("k,l,distance_a,C,pairs\n")
        d = cmap.distances()
        for row, dist in zip(range(len(cmap.values)), d):
            k, l = cmap.displacements[row]
            fh.write(f"{k},{l},{dist:.6f},{cmap.values[row]:.8e},"
                     f"{int(cmap.counts[row])}\n")


def analyze_snapshots(snapshots: SnapshotSet, lattice) -> dict:
    """JSON-ready summary of the standard observables."""
    out = {"n_shots": len(snapshots),
           "density": rydberg_density(snapshots)}
    if lattice.geometry == "square":
        out["m_stag"] = staggered_magnetization_square(snapshots, lattice)
        rep = cluster_report(snapshots, lattice)
        out["s_max_mean"] = float(rep.s_max.mean())
        out["p_smax_full"] = float(np.mean(rep.s_max == lattice.n_sites))
    elif lattice.geometry == "triangular":
        out["m_stag"] = staggered_magnetization_triangular(snapshots, lattice)
    return out


def _run_item(args):
    (cfg_raw, cfg_path, instance, t_off, chi, out_dir, tag) = args
    config = ExperimentConfig(cfg_raw, cfg_path)
    try:
        return _run_item_inner(config, instance, t_off, chi, Path(out_dir), tag)
    except Exception:
        return {"tag": tag, "status": "error",
                "error": traceback.format_exc()}


def _run_item_inner(config, instance, t_off, chi, out_dir, tag):
    cfg = config.raw
    model = build_model(config, instance=instance, t_off=t_off)
    engine = config.engine
    params = cfg.get("engine_params", {})
    sampling = cfg.get("sampling", {})
    n_shots = int(sampling.get("n_shots", 1000))
    seed = config.seed
    evolve_seed = _child(seed, PURPOSE_EVOLVE, instance)
    sample_seed = _child(seed, PURPOSE_SAMPLING, instance,
                         _t_off_key(t_off), chi or 0)
    files = {}
    meta = {"engine": engine, "instance": instance, "t_off_us": t_off,
            "chi_max": chi}

    if engine == "exact":
        series, state = evolve_schrodinger(
            model, dt=params.get("dt_us", 0.001),
            n_records=params.get("n_records", 60))
        snaps = sample_dense(state, n_shots, sample_seed) if n_shots else None
    elif engine == "trajectories":
        n_traj = params.get("n_traj", 100)
        per_traj = -(-n_shots // n_traj) if n_shots else 0
        series, bits = evolve_trajectories(
            model, n_traj, dt=params.get("dt_us", 0.001),
            seed=evolve_seed, n_records=params.get("n_records", 60),
            samples_per_traj=per_traj)
        snaps = SnapshotSet(bits[:n_shots], model.lattice.label,
                            {"engine": "trajectories"}) if n_shots else None
    elif engine == "mps":
        opts = TdvpOptions(chi_max=chi or params.get("chi_max", 128),
                           dt=params.get("dt_us", 0.005),
                           trunc_tol=params.get("trunc_tol", 1e-8),
                           mode=params.get("mode", "auto"),
                           n_records=params.get("n_records", 40))
        series, mps = tdvp_evolve(model, opts)
        ck = out_dir / f"{tag}-state.npz"
        save_checkpoint(ck, mps, {"t_off_us": t_off,
                                  "lattice": model.lattice.label})
        files["checkpoint"] = ck.name
        snaps = sample_mps(mps, n_shots, sample_seed,
                           lattice_label=model.lattice.label) if n_shots else None
        meta["truncation_error"] = mps.truncation_error
    elif engine == "mc":
        from .classical import metropolis_run
        mc = params.get("mc", {})
        ens = metropolis_run(model, mc.get("t_mhz", 1.0),
                             n_sweeps=mc.get("n_sweeps", 10_000),
                             n_measure=max(n_shots, 1),
                             seed=_child(seed, PURPOSE_MC, instance),
                             collect=bool(n_shots))
        series = None
        snaps = ens.snapshots() if n_shots else None
        meta["energy_mhz"] = ens.energy
    else:
        raise PipelineError(f"unknown engine {engine}")

    if series is not None:
        path = out_dir / f"{tag}-series.ndjson"
        write_series_ndjson(path, series,
                            include_sites=bool(cfg.get("output", {})
                                               .get("site_densities", False)))
        files["series"] = path.name
    if snaps is not None:
        snaps.t_off = t_off
        imp = model.imperfections
        if imp is not None and sampling.get("apply_detection_errors", True) \
                and (imp.epsilon > 0 or imp.epsilon_prime > 0):
            snaps = apply_detection_errors(
                snaps, imp.epsilon, imp.epsilon_prime,
                _child(seed, PURPOSE_DETECTION, instance, _t_off_key(t_off)))
        path = out_dir / f"{tag}-snapshots.txt"
        save_snapshots(path, snaps)
        files["snapshots"] = path.name
        summary = analyze_snapshots(snaps, model.lattice)
        cmap_file = None
        if len(snaps) >= 2 and model.lattice.geometry in ("square", "triangular"):
            cmap = connected_correlations(snaps, model.lattice)
            cmap_file = out_dir / f"{tag}-correlations.csv"
            write_correlation_csv(cmap_file, cmap)
            files["correlations"] = cmap_file.name
        path = out_dir / f"{tag}-analysis.json"
        with open(path, "w") as fh:
            json.dump(summary, fh, indent=1)
        files["analysis"] = path.name
    return {"tag": tag, "status": "ok", "files": files, "meta": meta}


def _t_off_key(t_off) -> int:
    return 0 if t_off is None else int(round(t_off * 1e6))


def run_pipeline(config: ExperimentConfig, threads: int = 1,
                 out_dir=None) -> Path:
    """Execute the configured scan; returns the output directory."""
    violations = validate(config)
    if violations:
        raise PipelineError("invalid config:\n" + "\n".join(violations))
    cfg = config.raw
    out = Path(out_dir) if out_dir else config.output_dir
    out.mkdir(parents=True, exist_ok=True)
    scan = cfg.get("scan", {})
    t_offs = scan.get("t_off_us", [None])
    chis = scan.get("chi_max", [None]) if config.engine == "mps" else [None]
    n_instances = int(scan.get("disorder_instances", 1))
    items = []
    for inst in range(n_instances):
        for t_idx, t_off in enumerate(t_offs):
            for chi in chis:
                tag = f"i{inst:03d}-t{t_idx:03d}" + \
                    (f"-chi{chi}" if chi else "")
                items.append((cfg, config.path, inst, t_off, chi,
                              str(out), tag))
    if threads > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(_run_item, items))
    else:
        records = [_run_item(it) for it in items]
    manifest = {
        "package": "rydsim",
        "version": __version__,
        "config_hash": config.hash(),
        "config_path": config.path,
        "seed": config.seed,
        "engine": config.engine,
        "items": records,
    }
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=1)
    n_err = sum(1 for r in records if r["status"] != "ok")
    if n_err == len(records):
        raise PipelineError("every pipeline item failed; see manifest")
    return out
