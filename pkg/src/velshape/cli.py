"""Command-line front end: ``velshape {reach-avoid,simulate,time-optimal,validate} SCENARIO``.

Exit codes: 0 success, 1 runtime failure (empty set, run not reaching the
target, infeasible profile), 2 validation failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

from . import io
from .exceptions import ConfigurationError, InputError, VelShapeError
from .reach_avoid import compute_reach_avoid, interval_counts
from .scenario import load_scenario, region_table
from .simulation import simulate
from .time_optimal import InfeasibleProfileError, time_optimal

log = logging.getLogger("velshape")

EXIT_OK, EXIT_RUNTIME, EXIT_INVALID = 0, 1, 2


class _Failure(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def _load(args):
    sc = load_scenario(args.scenario)
    if getattr(args, "grid", None) is not None:
        if args.grid < 10:
            raise ConfigurationError("--grid must be at least 10")
        sc.grid = args.grid
    if getattr(args, "epsilon", None) is not None:
        if not args.epsilon > 0:
            raise ConfigurationError("--epsilon must be positive")
        sc.epsilon = args.epsilon
    if getattr(args, "sample_period", None) is not None:
        if not args.sample_period > 0:
            raise ConfigurationError("--sample-period must be positive")
        sc.sample_period = args.sample_period
    return sc


def _reach_avoid(sc, out):
    if not sc.target.admissible_in(sc.system):
        raise _Failure(EXIT_INVALID, "target inadmissible")
    start = time.perf_counter()
    ras = compute_reach_avoid(sc.system, sc.target, sc.epsilon, sc.grid, sc.poly_degree)
    elapsed = time.perf_counter() - start
    io.write_boundary_csv(out / "boundary_upper.csv", ras.upper)
    io.write_boundary_csv(out / "boundary_lower.csv", ras.lower)
    io.write_region_csv(out / "region.csv", *region_table(sc.system))
    counts = interval_counts(ras)
    io.write_summary(out / "reach_avoid_summary.txt", {
        "scenario": sc.name,
        "epsilon": sc.epsilon,
        "grid": sc.grid,
        "x1_range": f"[{ras.x1_min!r}, {ras.target.c!r}]",
        "upper_terminal": f"{ras.terminals['x_d_on']} at {tuple(ras.terminals['x_d'])}",
        "lower_terminal": f"{ras.terminals['x_a_on']} at {tuple(ras.terminals['x_a'])}",
        "intervals_upper": counts.get("upper", 0),
        "intervals_lower": counts.get("lower", 0),
        "epsilon_steps": len(ras.upper.step_points()) + len(ras.lower.step_points()),
        "clipped_ranges": ras.clipped,
        "flags": ras.flags,
        "wall_clock_s": f"{elapsed:.3f}",
    })
    log.info("reach-avoid set over [%.4f, %.4f] in %.2f s", ras.x1_min, ras.target.c, elapsed)
    if ras.empty:
        raise _Failure(EXIT_RUNTIME, "reach-avoid set is empty")
    return ras


def cmd_reach_avoid(args):
    sc = _load(args)
    _reach_avoid(sc, Path(args.out))
    return EXIT_OK


def _optimal(sc, out, start):
    t0 = time.perf_counter()
    prof = time_optimal(sc.system, start, sc.final_state, grid=sc.grid)
    elapsed = time.perf_counter() - t0
    io.write_profile_csv(out / "time_optimal.csv", prof, sc.system)
    io.write_switch_sidecar(out / "time_optimal_switches.json", prof)
    return prof, elapsed


def cmd_time_optimal(args):
    sc = _load(args)
    sc.require("initial_state", "final_state")
    out = Path(args.out)
    try:
        prof, elapsed = _optimal(sc, out, sc.initial_state)
    except InfeasibleProfileError as exc:
        raise _Failure(EXIT_RUNTIME, f"no admissible profile: {exc}") from exc
    io.write_summary(out / "time_optimal_summary.txt", {
        "scenario": sc.name,
        "total_time_s": repr(prof.total_time),
        "switch_points": [repr(v) for v in prof.switch_points],
        "terminal_state": tuple(prof.end),
        "flags": prof.flags,
        "wall_clock_s": f"{elapsed:.3f}",
    })
    return EXIT_OK


def cmd_simulate(args):
    sc = _load(args)
    sc.require("initial_state", "sample_period", "policy_spec")
    out = Path(args.out)
    ras = None
    if sc.policy_spec.get("kind") == "boundary-derived":
        ras = _reach_avoid(sc, out)
    policy = sc.policy(ras)
    t0 = time.perf_counter()
    run = simulate(sc.system, policy, sc.initial_state, sc.sample_period, sc.target, sc.budget)
    elapsed = time.perf_counter() - t0
    io.write_simrun_csv(out / "simulation.csv", run)
    summary = {
        "scenario": sc.name,
        "policy": run.policy,
        "sample_period_s": run.sample_period,
        "outcome": run.outcome,
        "detail": run.detail,
        "duration_s": repr(run.duration),
        "samples": run.n_samples,
        "max_violation": repr(run.max_violation),
        "violation_count": int(run.max_violation > 1e-6),
        "hold_check_failures": run.hold_failures,
        "max_abs_torque": [repr(float(v)) for v in abs(run.torques).max(axis=0)] if run.torques.size else [],
        "max_torque_step": repr(run.torque_roughness()),
        "wall_clock_s": f"{elapsed:.3f}",
    }
    if sc.final_state is not None and not args.no_time_optimal:
        try:
            prof, _ = _optimal(sc, out, sc.initial_state)
            summary["time_optimal_duration_s"] = repr(prof.total_time)
            summary["time_optimal_switches"] = len(prof.switch_points)
            summary["feedback_slower_than_optimal"] = run.duration > prof.total_time
        except InfeasibleProfileError as exc:
            summary["time_optimal"] = f"infeasible: {exc}"
    io.write_summary(out / "simulation_summary.txt", summary)
    if not run.reached:
        raise _Failure(EXIT_RUNTIME, f"simulation {run.outcome}: {run.detail}")
    return EXIT_OK


def cmd_validate(args):
    sc = _load(args)
    issues = sc.check()
    clipped = sc.system.clipped_where(201) if sc.system.clip else []
    print(f"scenario {sc.name}: {sc.n_joints} joints, grid {sc.grid}, epsilon {sc.epsilon}")
    if len(clipped):
        print(f"upper curve clipped to the velocity limit at {len(clipped)} of 201 samples")
    for msg in issues:
        print(f"problem: {msg}")
    if issues:
        raise _Failure(EXIT_INVALID, issues[0])
    print("ok")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="velshape", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("scenario", help="scenario JSON file or built-in name (two_dof)")
        p.add_argument("--out", default="out", help="output directory (default: out)")
        p.add_argument("--grid", type=int, help="x1 grid cells (overrides the scenario)")
        p.add_argument("--epsilon", type=float, help="extension step (overrides the scenario)")
        return p

    common(sub.add_parser("reach-avoid", help="compute the reach-avoid set")).set_defaults(func=cmd_reach_avoid)
    p = common(sub.add_parser("simulate", help="sampled closed-loop simulation"))
    p.add_argument("--sample-period", type=float, help="hold time in seconds")
    p.add_argument("--no-time-optimal", action="store_true", help="skip the baseline")
    p.set_defaults(func=cmd_simulate)
    common(sub.add_parser("time-optimal", help="open-loop minimum-time profile")).set_defaults(
        func=cmd_time_optimal)
    common(sub.add_parser("validate", help="load and cross-check a scenario")).set_defaults(
        func=cmd_validate)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except _Failure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (ConfigurationError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except VelShapeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
