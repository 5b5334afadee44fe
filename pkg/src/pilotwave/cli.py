"""Command-line interface.

Subcommands: run, ensemble, sweep-memory, calibrate-threshold, classify,
meanfield, bohm.  All consume one config file (--config) and an output
directory (--out).  Exit codes: 0 success, 3 wave blow-up, 4 all
trajectories left the domain, 5 calibration failure, 2 usage/config errors.
"""

from __future__ import annotations

import argparse
import csv
import glob
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .analysis import classify_trajectory, mean_wave_field
from .bohmian import essw_pair, integrate_trajectory
from .config import ConfigError, SimConfig, parse_config, default_config_text
from .errors import CalibrationError, PilotwaveError
from .gridio import (
    TrajectoryRecord,
    read_grid,
    read_trajectory,
    write_grid,
    write_manifest,
    write_trajectory,
)
from .simulation import (
    EnsembleSpec,
    calibrate_threshold,
    run_ensemble,
    run_single,
    sweep_memory,
)
from .topography import GeometrySpec, Region

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_BLOWUP = 3
EXIT_DOMAIN_EXIT_ALL = 4
EXIT_CALIBRATION = 5


def _load_config(path) -> SimConfig:
    if path is None:
        return parse_config("")
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def _write_records(records, out_dir, config: SimConfig, t_start):
    os.makedirs(out_dir, exist_ok=True)
    outputs = []
    for i, rec in enumerate(records):
        snap_files = []
        if rec.snapshots:
            snap_dir = os.path.join(out_dir, f"snaps_{i:03d}")
            os.makedirs(snap_dir, exist_ok=True)
            for k, snap in enumerate(rec.snapshots):
                t_s, eta = snap[0], snap[1]
                p = os.path.join(snap_dir, f"eta_{k:04d}.pwhf")
                write_grid(eta, p, dx=rec.metadata["grid"]["dx_m"],
                           dy=rec.metadata["grid"]["dy_m"], t=t_s)
                snap_files.append(os.path.relpath(p, out_dir))
                if len(snap) > 2:
                    p2 = os.path.join(snap_dir, f"phi_{k:04d}.pwhf")
                    write_grid(snap[2], p2, dx=rec.metadata["grid"]["dx_m"],
                               dy=rec.metadata["grid"]["dy_m"], t=t_s)
                    snap_files.append(os.path.relpath(p2, out_dir))
        rec.metadata["snapshot_files"] = snap_files
        path = os.path.join(out_dir, f"traj_{i:03d}.csv")
        write_trajectory(rec, path)
        outputs += [f"traj_{i:03d}.csv", f"traj_{i:03d}.meta.json"] + snap_files
    write_manifest(os.path.join(out_dir, "manifest.json"), {
        "config_hash": config.hash,
        "software_version": __version__,
        "seed": config.seed,
        "started_utc": t_start,
        "ended_utc": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "terminations": [r.termination for r in records],
        "outputs": sorted(outputs),
    })
    with open(os.path.join(out_dir, "config.ini"), "w", encoding="utf-8") as fh:
        fh.write(config.canonical)


def _records_exit_code(records) -> int:
    if any(r.termination == "blow_up" for r in records):
        return EXIT_BLOWUP
    if records and all(r.termination == "domain_exit" for r in records):
        return EXIT_DOMAIN_EXIT_ALL
    return EXIT_OK


def _now() -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())


def _cmd_run(args) -> int:
    config = _load_config(args.config)
    if args.seed is not None:
        config = _reseed(config, args.seed)
    t0 = _now()
    rec = run_single(config)
    _write_records([rec], args.out, config, t0)
    return _records_exit_code([rec])


def _reseed(config: SimConfig, seed: int) -> SimConfig:
    values = {k: dict(v) for k, v in config.values.items()}
    values["geometry"]["custom_regions"] = config.values["geometry"].get("custom_regions", [])
    values["run"]["seed"] = seed
    from .config import resolve_config

    return resolve_config(values)


def _ensemble_spec(config: SimConfig) -> EnsembleSpec:
    lam = config.lambda_F
    bs = tuple(b * lam for b in config.values["ensemble"]["impact_parameters"])
    return EnsembleSpec(config=config, impact_parameters=bs)


def _cmd_ensemble(args) -> int:
    config = _load_config(args.config)
    if args.seed is not None:
        config = _reseed(config, args.seed)
    t0 = _now()
    records = run_ensemble(_ensemble_spec(config), threads=args.threads)
    _write_records(records, args.out, config, t0)
    return _records_exit_code(records)


def _write_classification(records, geometry, path):
    rows = []
    for i, rec in enumerate(records):
        c = classify_trajectory(rec, geometry)
        b_mm = rec.metadata.get("impact_parameter_m", rec.x[0]) * 1e3
        rows.append([
            i, f"{b_mm:.6g}",
            f"{rec.metadata.get('gamma_over_gamma_F', float('nan')):.6g}",
            c.label,
            "" if c.first_crossing_time is None else f"{c.first_crossing_time:.9g}",
            c.detector_side,
        ])
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "impact_parameter_mm", "gamma_over_gammaF",
                    "label", "first_crossing_time_s", "detector_side"])
        w.writerows(rows)
    return rows


def _cmd_sweep(args) -> int:
    config = _load_config(args.config)
    if args.seed is not None:
        config = _reseed(config, args.seed)
    values = config.values["ensemble"]["memory_values"]
    t0 = _now()
    results = sweep_memory(_ensemble_spec(config), values, threads=args.threads)
    code = EXIT_OK
    for v, records in results.items():
        sub = os.path.join(args.out, f"mem_{v:.4g}")
        _write_records(records, sub, config, t0)
        geometry = _geometry_from_metadata(records[0].metadata["geometry"]) if records else config.geometry
        _write_classification(records, geometry, os.path.join(sub, "classification.csv"))
        code = max(code, _records_exit_code(records))
    return code


def _cmd_calibrate(args) -> int:
    config = _load_config(args.config)
    cal = config.values["calibration"]
    os.makedirs(args.out, exist_ok=True)
    t0 = _now()
    try:
        result = calibrate_threshold(
            config.fluid,
            config.forcing.f,
            grid=cal["grid"],
            domain_lambda=cal["domain_lambda"],
            tolerance=cal["tolerance"],
            window_t_f=cal["window_t_f"],
            noise_amplitude=cal["noise_amplitude"],
            bracket=(cal["bracket_lo"], cal["bracket_hi"]),
            seed=config.seed if args.seed is None else args.seed,
            fit_target=cal["fit_target"],
            fit_tolerance=cal["fit_tolerance"],
        )
    except CalibrationError as exc:
        print(f"calibration failed: {exc}", file=sys.stderr)
        return EXIT_CALIBRATION
    payload = {
        "gamma_F": result.gamma_F,
        "nu_eff": result.nu_eff,
        "fitted": result.fitted,
        "elapsed_s": result.elapsed_s,
        "probes": [[g, bool(gr)] for g, gr in result.probes],
    }
    with open(os.path.join(args.out, "calibration.json"), "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")
    write_manifest(os.path.join(args.out, "manifest.json"), {
        "config_hash": config.hash, "software_version": __version__,
        "seed": config.seed, "started_utc": t0, "ended_utc": _now(),
        "terminations": ["calibrated"], "outputs": ["calibration.json"],
    })
    print(f"gamma_F = {result.gamma_F:.4f} g  (nu_eff = {result.nu_eff:.6e} m^2/s)")
    return EXIT_OK


def _geometry_from_metadata(gm: dict) -> GeometrySpec:
    regions = tuple(
        Region(tuple(map(tuple, r["vertices_m"])), r["depth_m"], r["name"])
        for r in gm["regions"]
    )
    return GeometrySpec(
        regions=regions,
        ambient_depth=gm["ambient_depth_m"],
        domain_size=tuple(gm["domain_size_m"]),
        domain_origin=tuple(gm["domain_origin_m"]),
        has_left_barrier=any(r.name == "barrier_left" for r in regions),
        has_right_barrier=any(r.name == "barrier_right" for r in regions),
        lambda_F=gm["lambda_F_m"],
        variant=gm.get("variant", "custom"),
    )


def _read_run_dir(in_dir):
    paths = sorted(glob.glob(os.path.join(in_dir, "traj_*.csv")))
    if not paths:
        raise PilotwaveError(f"no trajectory CSVs found in {in_dir}")
    records = []
    for p in paths:
        rec = read_trajectory(p)
        snaps = []
        for rel in rec.metadata.get("snapshot_files", []):
            if "eta_" not in os.path.basename(rel):
                continue
            arr, header = read_grid(os.path.join(in_dir, rel))
            snaps.append((header["t"], arr))
        rec.snapshots.extend(snaps)
        records.append(rec)
    return records


def _cmd_classify(args) -> int:
    records = _read_run_dir(args.indir)
    geometry = _geometry_from_metadata(records[0].metadata["geometry"])
    os.makedirs(args.out, exist_ok=True)
    rows = _write_classification(records, geometry, os.path.join(args.out, "classification.csv"))
    for row in rows:
        print(",".join(str(v) for v in row))
    return EXIT_OK


def _cmd_meanfield(args) -> int:
    records = _read_run_dir(args.indir)
    lam = records[0].metadata["geometry"]["lambda_F_m"]
    sigma = args.sigma_b * lam if args.sigma_b is not None else None
    mf = mean_wave_field(records, sigma_b=sigma)
    os.makedirs(args.out, exist_ok=True)
    write_grid(mf.mean_eta, os.path.join(args.out, "meanfield.pwhf"), dx=mf.dx, dy=mf.dy)
    write_grid(mf.mean_eta_lambda, os.path.join(args.out, "meanfield_lambdaF.pwhf"),
               dx=mf.dx, dy=mf.dy)
    meta = dict(mf.metadata)
    meta["weights"] = [float(w) for w in mf.weights]
    meta["grid_origin_m"] = [records[0].metadata["grid"]["x0_m"],
                             records[0].metadata["grid"]["y0_m"]]
    with open(os.path.join(args.out, "meanfield.meta.json"), "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return EXIT_OK


def _cmd_bohm(args) -> int:
    config = _load_config(args.config)
    bv = config.values["bohm"]
    sup = essw_pair(
        x_sep=bv["packet_x0"], speed=bv["packet_speed"],
        half_angle_deg=bv["half_angle_deg"], width=bv["packet_width"],
    )
    n = bv["n_trajectories"]
    k = int(np.ceil(np.sqrt(n)))
    hw = bv["launch_halfwidth"] * bv["packet_width"]
    offsets = np.linspace(-hw, hw, k)
    launches = [
        (bv["packet_x0"] + ox, oy)
        for oy in offsets
        for ox in offsets
    ][:n]
    t0 = _now()
    os.makedirs(args.out, exist_ok=True)
    outputs = []
    for i, X0 in enumerate(launches):
        ts, xs = integrate_trajectory(sup, X0, (0.0, bv["t_final"]), bv["dt"])
        vs = np.gradient(xs, ts, axis=0)
        rec = TrajectoryRecord(
            t=ts, x=xs[:, 0], y=xs[:, 1], vx=vs[:, 0], vy=vs[:, 1],
            F=np.zeros_like(ts), phase=np.zeros_like(ts),
            metadata={
                "units": "natural",
                "config_hash": config.hash,
                "config_text": config.canonical,
                "software_version": __version__,
                "seed": config.seed,
                "member_index": i,
                "impact_parameter_m": X0[0],
                "scenario": "two_packet_interference",
            },
        )
        path = os.path.join(args.out, f"traj_{i:03d}.csv")
        write_trajectory(rec, path)
        outputs += [f"traj_{i:03d}.csv", f"traj_{i:03d}.meta.json"]
    write_manifest(os.path.join(args.out, "manifest.json"), {
        "config_hash": config.hash, "software_version": __version__,
        "seed": config.seed, "started_utc": t0, "ended_utc": _now(),
        "terminations": ["completed"] * len(launches), "outputs": sorted(outputs),
    })
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="pilotwave",
        description="Pilot-wave hydrodynamics simulator (walking droplets over topography) "
                    "and Bohmian trajectory reference.",
    )
    p.add_argument("--version", action="version", version=f"pilotwave {__version__}")
    p.add_argument("--print-default-config", action="store_true",
                   help="print the documented default configuration and exit")
    sub = p.add_subparsers(dest="command")

    def common(sp, indir=False):
        sp.add_argument("--config", help="configuration file (defaults apply if omitted)")
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--seed", type=int, default=None, help="override [run] seed")
        sp.add_argument("--threads", type=int, default=1,
                        help="worker processes for ensemble members")
        if indir:
            sp.add_argument("--in", dest="indir", required=True,
                            help="input run directory")

    common(sub.add_parser("run", help="single coupled wave-droplet run"))
    common(sub.add_parser("ensemble", help="impact-parameter ensemble"))
    common(sub.add_parser("sweep-memory", help="ensemble at several gamma/gamma_F values"))
    common(sub.add_parser("calibrate-threshold", help="bisect the Faraday threshold"))
    sp = sub.add_parser("classify", help="label trajectories expected/surreal")
    common(sp, indir=True)
    sp = sub.add_parser("meanfield", help="Gaussian-weighted mean wave field")
    common(sp, indir=True)
    sp.add_argument("--sigma-b", type=float, default=None,
                    help="impact-parameter weighting std in lambda_F units (default 1.4)")
    common(sub.add_parser("bohm", help="Bohmian two-packet reference trajectories"))
    return p


_COMMANDS = {
    "run": _cmd_run,
    "ensemble": _cmd_ensemble,
    "sweep-memory": _cmd_sweep,
    "calibrate-threshold": _cmd_calibrate,
    "classify": _cmd_classify,
    "meanfield": _cmd_meanfield,
    "bohm": _cmd_bohm,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.print_default_config:
        print(default_config_text())
        return EXIT_OK
    if args.command is None:
        parser.print_help()
        return EXIT_USAGE
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PilotwaveError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
