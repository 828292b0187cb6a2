"""Command-line interface.

Subcommands: validate, evolve-exact, evolve-mps, sample, mc-run, mc-tc,
thermometry, analyze, pipeline.  Exit codes: 0 success, 2 validation
failure, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .config import ExperimentConfig, build_lattice, build_model, validate
from .exact import evolve_schrodinger
from .mps import tdvp_evolve
from .mps.checkpoint import load_checkpoint, save_checkpoint
from .mps.tdvp import TdvpOptions
from .observables import connected_correlations, fit_correlation_length
from .pipeline import (analyze_snapshots, run_pipeline, write_correlation_csv,
                       write_series_ndjson)
from .sampler import load_snapshots, sample_mps, save_snapshots
from .seeding import PURPOSE_SAMPLING, seed_sequence

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_RUNTIME = 3


def _load_config(args) -> ExperimentConfig:
    if not args.config:
        raise SystemExit("--config is required for this subcommand")
    config = ExperimentConfig.load(args.config)
    if args.seed is not None:
        config.raw["seed"] = args.seed
    if args.out:
        config.raw["output_dir"] = args.out
    return config


def _require_valid(config: ExperimentConfig) -> None:
    violations = validate(config)
    if violations:
        for v in violations:
            print(f"violation: {v}", file=sys.stderr)
        sys.exit(EXIT_VALIDATION)


def cmd_validate(args) -> int:
    config = _load_config(args)
    violations = validate(config)
    if violations:
        for v in violations:
            print(f"violation: {v}")
        return EXIT_VALIDATION
    print("ok")
    return EXIT_OK


def cmd_evolve_exact(args) -> int:
    config = _load_config(args)
    _require_valid(config)
    params = config.raw.get("engine_params", {})
    model = build_model(config)
    series, _state = evolve_schrodinger(model, dt=params.get("dt_us", 0.001),
                                        n_records=params.get("n_records", 60))
    out = config.output_dir
    out.mkdir(parents=True, exist_ok=True)
    path = out / "exact-series.ndjson"
    write_series_ndjson(path, series, include_sites=args.site_densities)
    print(path)
    return EXIT_OK


def cmd_evolve_mps(args) -> int:
    config = _load_config(args)
    _require_valid(config)
    params = config.raw.get("engine_params", {})
    model = build_model(config)
    opts = TdvpOptions(chi_max=params.get("chi_max", 128),
                       dt=params.get("dt_us", 0.005),
                       trunc_tol=params.get("trunc_tol", 1e-8),
                       mode=params.get("mode", "auto"),
                       n_records=params.get("n_records", 40))
    series, mps = tdvp_evolve(model, opts)
    out = config.output_dir
    out.mkdir(parents=True, exist_ok=True)
    series_path = out / "mps-series.ndjson"
    write_series_ndjson(series_path, series, include_sites=args.site_densities)
    ck_path = out / "mps-state.npz"
    save_checkpoint(ck_path, mps, {"lattice": model.lattice.label,
                                   "t_off_us": model.schedule.t_off})
    print(series_path)
    print(ck_path)
    return EXIT_OK


def cmd_sample(args) -> int:
    config = _load_config(args)
    mps, extra = load_checkpoint(args.state)
    seed = int(seed_sequence(config.seed, PURPOSE_SAMPLING)
               .generate_state(1)[0])
    snaps = sample_mps(mps, args.shots, seed,
                       lattice_label=extra.get("lattice", ""))
    snaps.t_off = extra.get("t_off_us")
    out = config.output_dir
    out.mkdir(parents=True, exist_ok=True)
    path = out / "snapshots.txt"
    save_snapshots(path, snaps)
    print(path)
    return EXIT_OK


def cmd_mc_run(args) -> int:
    from .classical import metropolis_run
    config = _load_config(args)
    _require_valid(config)
    mc = config.raw.get("engine_params", {}).get("mc", {})
    model = build_model(config)
    t_mhz = args.temperature if args.temperature is not None \
        else mc.get("t_mhz", 1.0)
    ens = metropolis_run(model, t_mhz,
                         n_sweeps=mc.get("n_sweeps", 10_000),
                         n_measure=mc.get("n_measure", 10_000),
                         seed=config.seed, collect=args.shots > 0)
    out = config.output_dir
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "mc-run.csv"
    with open(csv_path, "w") as fh:
        fh.write("T_mhz,E_mhz,E_err,m2,m4\n")
        fh.write(f"{t_mhz},{ens.energy},{ens.energy_error},"
                 f"{np.mean(ens.m_signed**2)},{np.mean(ens.m_signed**4)}\n")
    print(csv_path)
    if args.shots > 0:
        snaps = ens.snapshots()
        stride = max(1, len(snaps) // args.shots)
        snaps.bits = snaps.bits[::stride][:args.shots]
        snap_path = out / "mc-snapshots.txt"
        save_snapshots(snap_path, snaps)
        print(snap_path)
    return EXIT_OK


def cmd_mc_tc(args) -> int:
    from .classical import binder_tc, disordered_square_model
    config = _load_config(args)
    block = config.raw.get("mc_tc")
    if not isinstance(block, dict):
        print("violation: mc_tc: block missing", file=sys.stderr)
        return EXIT_VALIDATION
    u_ref = block.get("u_ref_mhz", 1.857)
    t_grid = np.asarray(block["t_over_u"], dtype=float) * u_ref
    delta = block.get("delta_over_u", 1.075) * u_ref

    def factory(L, inst_seed):
        return disordered_square_model(L, inst_seed, delta_mhz=delta,
                                       cutoff_a=block.get("cutoff_a", 5.2))

    pool_map = map
    if args.threads > 1:
        from concurrent.futures import ProcessPoolExecutor
        pool = ProcessPoolExecutor(max_workers=args.threads)
        pool_map = pool.map
    report = binder_tc(block["sizes"], t_grid,
                       n_instances=block.get("n_instances", 50),
                       n_sweeps=block.get("n_sweeps", 10_000),
                       n_measure=block.get("n_measure", 10_000),
                       seed=config.seed, model_factory=factory,
                       pool_map=pool_map)
    out = config.output_dir
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "binder.csv"
    with open(csv_path, "w") as fh:
        fh.write("L,T_mhz,T_over_u,U2,U2_err\n")
        for L in report.sizes:
            for k, t in enumerate(report.t_grid):
                fh.write(f"{L},{t},{t / u_ref},{report.u2[L][k]},"
                         f"{report.u2_err[L][k]}\n")
    summary = {
        "u_ref_mhz": u_ref,
        "u_nnb_disorder_mean_mhz": report.u_ref_mhz,
        "crossings": {f"{a}-{b}": v for (a, b), v in report.crossings.items()},
        "t_c_mhz": report.t_c,
        "t_c_err_mhz": report.t_c_err,
        "t_c_over_u": None if report.t_c is None else report.t_c / u_ref,
    }
    json_path = out / "binder.json"
    with open(json_path, "w") as fh:
        json.dump(summary, fh, indent=1)
    print(csv_path)
    print(json_path)
    return EXIT_OK


def cmd_thermometry(args) -> int:
    from .thermometry import (build_curve, classical_energy_of_data,
                              match_temperature, thermometry_model)
    config = _load_config(args)
    block = config.raw.get("thermometry")
    if not isinstance(block, dict):
        print("violation: thermometry: block missing", file=sys.stderr)
        return EXIT_VALIDATION
    snaps = load_snapshots(args.snapshots)
    lattice = build_lattice(config.raw)
    model = thermometry_model(lattice, block["u_nnb_mhz"],
                              block["delta_mhz"],
                              cutoff_a=block.get("cutoff_a", 5.2))
    u = block["u_nnb_mhz"]
    t_grid = np.asarray(block.get(
        "t_over_u", np.geomspace(0.02, 5.0, 40).tolist())) * u
    curve = build_curve(model, t_grid,
                        n_sweeps=block.get("n_sweeps", 10_000),
                        n_measure=block.get("n_measure", 10_000),
                        seed=config.seed)
    e_data, e_err = classical_energy_of_data(snaps, model)
    match = match_temperature(e_data, e_err, curve)
    report = {"t_off_us": snaps.t_off, "E_class_mhz": e_data,
              "E_err_mhz": e_err, "T_hyp_mhz": match.t_hyp,
              "T_hyp_over_u": match.t_hyp / u if np.isfinite(match.t_hyp) else None,
              "sigma_mhz": match.sigma, "status": match.status,
              "curve_monotonic": curve.monotonic}
    out = config.output_dir
    out.mkdir(parents=True, exist_ok=True)
    path = out / "thermometry.json"
    with open(path, "w") as fh:
        json.dump(report, fh, indent=1)
    print(json.dumps(report))
    return EXIT_OK


def cmd_analyze(args) -> int:
    config = _load_config(args)
    snaps = load_snapshots(args.snapshots)
    lattice = build_lattice(config.raw)
    if snaps.n_sites != lattice.n_sites:
        print(f"violation: snapshots have {snaps.n_sites} sites, lattice "
              f"has {lattice.n_sites}", file=sys.stderr)
        return EXIT_VALIDATION
    out = config.output_dir
    out.mkdir(parents=True, exist_ok=True)
    summary = analyze_snapshots(snaps, lattice)
    if len(snaps) >= 2 and lattice.geometry in ("square", "triangular"):
        cmap = connected_correlations(snaps, lattice)
        write_correlation_csv(out / "correlations.csv", cmap)
        try:
            fit = fit_correlation_length(cmap)
            summary["xi_over_a"] = fit.xi if np.isfinite(fit.xi) else None
        except Exception:
            pass
    path = out / "analysis.json"
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=1)
    print(json.dumps(summary))
    return EXIT_OK


def cmd_pipeline(args) -> int:
    config = _load_config(args)
    _require_valid(config)
    out = run_pipeline(config, threads=args.threads)
    print(out / "manifest.json")
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="rydsim",
        description="Rydberg-array antiferromagnet simulation toolkit")
    parser.add_argument("--config", help="experiment JSON config")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the config master seed")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker processes for scans")
    parser.add_argument("--out", help="override the output directory")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("validate", help="check a config, list violations")
    p = sub.add_parser("evolve-exact", help="dense Schrodinger evolution")
    p.add_argument("--site-densities", action="store_true")
    p = sub.add_parser("evolve-mps", help="TDVP evolution, writes a checkpoint")
    p.add_argument("--site-densities", action="store_true")
    p = sub.add_parser("sample", help="snapshots from an MPS checkpoint")
    p.add_argument("--state", required=True, help="checkpoint .npz")
    p.add_argument("--shots", type=int, default=1000)
    p = sub.add_parser("mc-run", help="Metropolis run at one temperature")
    p.add_argument("--temperature", type=float, default=None,
                   help="T in MHz (overrides engine_params.mc.t_mhz)")
    p.add_argument("--shots", type=int, default=0,
                   help="collect this many MC snapshots")
    sub.add_parser("mc-tc", help="Binder-cumulant critical temperature")
    p = sub.add_parser("thermometry", help="match T_hyp for a snapshot file")
    p.add_argument("--snapshots", required=True)
    p = sub.add_parser("analyze", help="observables from a snapshot file")
    p.add_argument("--snapshots", required=True)
    sub.add_parser("pipeline", help="full scan: evolve, sample, analyze")

    args = parser.parse_args(argv)
    handlers = {
        "validate": cmd_validate,
        "evolve-exact": cmd_evolve_exact,
        "evolve-mps": cmd_evolve_mps,
        "sample": cmd_sample,
        "mc-run": cmd_mc_run,
        "mc-tc": cmd_mc_tc,
        "thermometry": cmd_thermometry,
        "analyze": cmd_analyze,
        "pipeline": cmd_pipeline,
    }
    try:
        return handlers[args.command](args)
    except SystemExit:
        raise
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
