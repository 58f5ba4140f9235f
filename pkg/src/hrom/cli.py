"""``hrom`` command line: simulate, optimize and verify.

Exit codes: 0 success, 1 verify failure, 2 configuration error (nothing
written), 3 simulation abort (partial outputs kept), 4 solver did not converge
(best iterate written).
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from .acceptance import CHECKS, VerifyContext, bundled_config, hrom_smoke, run_check
from .config import RunConfig, config_echo, load_config, with_overrides
from .errors import ConfigError, HROMError, SolverError
from .gait import build_gait
from .io import (write_metadata, write_plot_data, write_solution_csv, write_solver_report,
                 write_trajectory_csv)
from .sim import simulate, stance_slip
from .trajopt.problems import (HROMDynamics, double_integrator_guess, double_integrator_problem,
                               solution_trajectory)
from .trajopt.solver import SolverOptions, nlp_solve

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_ABORT, EXIT_SOLVER = 0, 1, 2, 3, 4


def _output_dir(config: RunConfig, config_path, out):
    if out is not None:
        return Path(out)
    if config.out_dir:
        return Path(config.out_dir)
    root = os.environ.get("HROM_OUT_DIR", "hrom_out")
    return Path(root) / Path(config_path).stem


def _prepare(config_path, out, **overrides):
    config = with_overrides(load_config(config_path), **overrides)
    out_dir = _output_dir(config, config_path, out)
    return config, out_dir


def _summary(traj, robot):
    s = traj.states
    slips = [d for (_, _, _, d) in stance_slip(traj, robot)] if len(traj.t) > 1 else []
    return {
        "forward_displacement_m": float(s[-1, 0] - s[0, 0]),
        "max_abs_roll_rad": float(np.max(np.abs(s[:, 5]))),
        "max_abs_pitch_rad": float(np.max(np.abs(s[:, 4]))),
        "max_body_rate_radps": float(np.max(np.linalg.norm(s[:, 21:24], axis=1))),
        "max_total_thrust_n": float(np.max(traj.thrust.sum(axis=1))),
        "max_stance_slip_m": float(max(slips, default=0.0)),
    }


def cmd_simulate(config_path, out=None, dt=None, duration=None) -> int:
    try:
        config, out_dir = _prepare(config_path, out, dt=dt, duration=duration)
        gait = build_gait(replace(config.gait, duration=max(config.gait.duration, config.sim.duration)),
                          config.robot)
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except HROMError as exc:
        print(f"config error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    traj = simulate(config.sim, gait, config.robot, config.ground)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_trajectory_csv(out_dir / "trajectory.csv", traj)
    write_plot_data(out_dir, traj, config.robot)
    s0 = traj.states[0]
    write_metadata(out_dir / "meta.json", config_echo(config), {
        "command": "simulate",
        "status": traj.status,
        "message": traj.message,
        "samples": len(traj.t),
        "initial_body_height_m": float(s0[2]),
        "initial_joints": s0[6:18].reshape(4, 3).tolist(),
        "summary": _summary(traj, config.robot),
    })
    if traj.aborted:
        print(f"simulation aborted at t = {traj.t[-1]:.4f} s: {traj.status} {traj.message}", file=sys.stderr)
        return EXIT_ABORT
    print(f"wrote {out_dir} ({len(traj.t)} samples, {traj.t[-1]:.3f} s)")
    return EXIT_OK


def _optimize_double_integrator(config):
    o = config.opt
    nlp = double_integrator_problem(n=o.n, final_time=o.final_time, target=o.target)
    guess = double_integrator_guess(n=o.n, final_time=o.final_time, target=o.target)
    opts = SolverOptions(tol_c=o.tol_c, tol_g=o.tol_g, max_iter=o.max_iter, time_limit=o.time_limit)
    analytic = 12.0 * o.target**2 / o.final_time**3
    return nlp, guess, opts, {"analytic_cost": analytic}


def cmd_optimize(config_path, out=None, n=None) -> int:
    try:
        config, out_dir = _prepare(config_path, out, n=n)
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    t0 = time.perf_counter()
    o = config.opt
    code = EXIT_OK
    if o.problem == "double_integrator":
        nlp, guess, opts, extra = _optimize_double_integrator(config)
        try:
            dv, report = nlp_solve(nlp, guess, opts)
        except SolverError as exc:
            if exc.report is None:
                print(f"solver error: {exc}", file=sys.stderr)
                return EXIT_SOLVER
            dv, report, code = exc.best, exc.report, EXIT_SOLVER
        out_dir.mkdir(parents=True, exist_ok=True)
        write_solution_csv(out_dir / "solution.csv", dv)
    else:
        try:
            dv, report, c0, v0, _ = hrom_smoke(config, n=o.n)
        except SolverError as exc:
            print(f"solver error: {exc}", file=sys.stderr)
            return EXIT_SOLVER
        except HROMError as exc:
            print(f"warm start failed: {type(exc).__name__}: {exc}", file=sys.stderr)
            return EXIT_ABORT
        extra = {"warm_start_cost": c0, "warm_start_violation": v0}
        if report.status != "Converged":
            code = EXIT_SOLVER
        gait = build_gait(config.gait, config.robot)
        dyn = HROMDynamics(config.robot, config.ground, gait, o.free_joint_inputs)
        out_dir.mkdir(parents=True, exist_ok=True)
        write_trajectory_csv(out_dir / "solution.csv", solution_trajectory(dv, dyn))
    extra.update({"problem": o.problem, "n": o.n, "final_time": dv.final_time, "config": config_echo(config)})
    write_solver_report(out_dir / "solver_report.json", report, extra)
    print(f"{report.status}: cost {report.cost:.6g}, violation {report.constraint_violation:.3e}, "
          f"{report.iterations} iterations, {time.perf_counter() - t0:.1f} s -> {out_dir}")
    return code


def cmd_verify(name_filter=None, config_path=None) -> int:
    ctx = VerifyContext(Path(config_path) if config_path else bundled_config())
    names = [n for n, _ in CHECKS if not name_filter or name_filter in n]
    if not names:
        print(f"no checks match {name_filter!r}", file=sys.stderr)
        return EXIT_VERIFY
    failed = 0
    for name in names:
        result = run_check(name, ctx)
        failed += not result.passed
        print(result.line(), flush=True)
    print(f"{len(names) - failed}/{len(names)} checks passed")
    return EXIT_OK if failed == 0 else EXIT_VERIFY


def build_parser():
    p = argparse.ArgumentParser(prog="hrom", description="Thruster-assisted quadruped simulation and optimization.")
    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("simulate", help="run the walking simulation and export trajectories")
    s.add_argument("config")
    s.add_argument("--out", metavar="DIR")
    s.add_argument("--dt", type=float, metavar="S")
    s.add_argument("--duration", type=float, metavar="S")
    o = sub.add_parser("optimize", help="solve the collocation problem from a simulated warm start")
    o.add_argument("config")
    o.add_argument("--n", type=int, metavar="N")
    o.add_argument("--out", metavar="DIR")
    v = sub.add_parser("verify", help="run the acceptance suite")
    v.add_argument("--filter", metavar="NAME")
    v.add_argument("--config", metavar="PATH", help="configuration for the scenario checks")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "simulate":
        return cmd_simulate(args.config, args.out, args.dt, args.duration)
    if args.command == "optimize":
        return cmd_optimize(args.config, args.out, args.n)
    return cmd_verify(args.filter, args.config)


if __name__ == "__main__":
    sys.exit(main())
