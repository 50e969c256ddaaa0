"""Command-line entry points: ``simulate``, ``replay``, ``observability``.

Each subcommand writes plot-ready CSVs plus a JSON run summary into the
output directory.  Exit codes: 0 success, 1 runtime error (message on
stderr), 2 usage error.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import cascade, logio, observability, sim
from .errors import ConfigError, PitotNavError


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pitotnav",
        description="Cascade observer for UAV attitude and air velocity: "
                    "synthetic-flight simulation, log replay, observability diagnostics.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="generate a synthetic flight and run the observer")
    p_sim.add_argument("--traj", choices=sim.TRAJECTORY_KINDS, default=None,
                       help="trajectory kind (default banked-turn)")
    p_sim.add_argument("--config", default=None, help="key=value config file")
    p_sim.add_argument("--out", required=True, help="output directory")
    p_sim.add_argument("--duration", type=float, default=None, help="override duration (s)")
    p_sim.add_argument("--seed", type=int, default=None, help="override RNG seed")

    p_rep = sub.add_parser("replay", help="run the observer over a recorded log")
    p_rep.add_argument("--log", required=True, help="merged log file or per-sensor directory")
    p_rep.add_argument("--config", default=None)
    p_rep.add_argument("--out", required=True)
    p_rep.add_argument("--t0", type=float, default=None,
                       help="start time (s); earlier samples are dropped")

    p_obs = sub.add_parser("observability",
                           help="windowed Gramian / excitation diagnostics")
    src = p_obs.add_mutually_exclusive_group(required=True)
    src.add_argument("--log", default=None)
    src.add_argument("--traj", choices=sim.TRAJECTORY_KINDS, default=None)
    p_obs.add_argument("--config", default=None)
    p_obs.add_argument("--window", type=float, default=2.0, help="window length (s)")
    p_obs.add_argument("--out", required=True)
    p_obs.add_argument("--duration", type=float, default=None)
    p_obs.add_argument("--seed", type=int, default=None)
    return parser


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "replay":
            return _cmd_replay(args)
        return _cmd_observability(args)
    except (PitotNavError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _load(args) -> logio.RunSettings:
    settings = logio.load_settings(args.config)
    if getattr(args, "traj", None):
        settings.trajectory.kind = args.traj
    if getattr(args, "duration", None) is not None:
        settings.trajectory.duration = args.duration
    if getattr(args, "seed", None) is not None:
        settings.seed = args.seed
    return settings


def _simulate_stream(settings: logio.RunSettings):
    truth = sim.generate_truth(settings.trajectory, wind=settings.wind,
                               seed=settings.seed,
                               imu_rate=settings.rates.imu,
                               oversample=settings.oversample,
                               g=settings.observer.g)
    stream = sim.synthesize_sensors(truth, noise=settings.noise,
                                    rates=settings.rates, seed=settings.seed,
                                    axes=settings.observer.pitot.axes,
                                    mag_inertial=settings.observer.mag_inertial)
    return truth, stream


def _imu_rate_reference(truth: sim.TruthTrace, imu_rate: float) -> logio.ReferenceTrace:
    step = int(round(truth.rate / imu_rate))
    idx = np.arange(0, len(truth), step)
    return logio.ReferenceTrace(t=truth.t[idx], R=truth.R[idx], V_a=truth.V_a[idx])


def _cmd_simulate(args) -> int:
    settings = _load(args)
    os.makedirs(args.out, exist_ok=True)
    truth, stream = _simulate_stream(settings)

    logio.write_log(os.path.join(args.out, "log.csv"), stream,
                    reference=_imu_rate_reference(truth, settings.rates.imu))
    outputs = cascade.run(stream, settings.observer, settings.init)
    logio.write_estimates_csv(os.path.join(args.out, "estimates.csv"), outputs)
    ev = cascade.evaluate(outputs, truth)
    logio.write_metrics_csv(os.path.join(args.out, "metrics.csv"), ev)
    summary = dict(ev.summary(), **outputs.meta,
                   trajectory=settings.trajectory.kind, seed=settings.seed)
    logio.write_summary_json(os.path.join(args.out, "summary.json"), summary)
    print(f"simulate: {len(outputs)} steps, terminal att_err "
          f"{summary['terminal_att_err']:.3e}; outputs in {args.out}")
    return 0


def _cmd_replay(args) -> int:
    settings = _load(args)
    os.makedirs(args.out, exist_ok=True)
    log = logio.parse_log(args.log)
    t0 = args.t0 if args.t0 is not None else settings.t0
    if t0 is not None:
        log = log.clipped(t0)
    if not log.imu:
        raise ConfigError("log contains no IMU samples after clipping")
    if log.reference is not None:
        log = logio.reconstruct_mag_reference(log)
    outputs = cascade.run(log.merged(), settings.observer, settings.init)
    logio.write_estimates_csv(os.path.join(args.out, "estimates.csv"), outputs)
    summary = dict(outputs.meta)
    if log.reference is not None:
        ev = cascade.evaluate(outputs, log.reference)
        logio.write_metrics_csv(os.path.join(args.out, "metrics.csv"), ev)
        summary.update(ev.summary())
    logio.write_summary_json(os.path.join(args.out, "summary.json"), summary)
    print(f"replay: {len(outputs)} steps; outputs in {args.out}")
    return 0


def _cmd_observability(args) -> int:
    settings = _load(args)
    os.makedirs(args.out, exist_ok=True)
    if args.traj is not None:
        truth, _ = _simulate_stream(settings)
        step = int(round(truth.rate / settings.rates.imu))
        idx = np.arange(0, len(truth), step)
        times, omegas, rotations = truth.t[idx], truth.omega[idx], truth.R[idx]
    else:
        log = logio.parse_log(args.log)
        if log.reference is None:
            raise ConfigError("observability diagnostics on a log require ref rows "
                              "(an attitude trace)")
        if not log.imu:
            raise ConfigError("log contains no IMU samples")
        times = np.array([s.t for s in log.imu])
        omegas = np.array([s.gyro for s in log.imu])
        rotations = np.array([log.reference.nearest_attitude(t) for t in times])

    rows = observability.window_diagnostics(times, omegas, rotations,
                                            settings.observer.pitot,
                                            delta=args.window,
                                            g=settings.observer.g)
    if not rows:
        raise ConfigError(f"trace shorter than one {args.window} s window")
    logio.write_windows_csv(os.path.join(args.out, "windows.csv"), rows)
    worst = max(r["cond_M"] for r in rows)
    logio.write_summary_json(os.path.join(args.out, "summary.json"), {
        "windows": len(rows), "window_s": args.window,
        "worst_cond_M": worst if np.isfinite(worst) else "inf",
        "min_eig_gramian": min(r["min_eig_gramian"] for r in rows),
    })
    print(f"observability: {len(rows)} windows of {args.window} s; outputs in {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
