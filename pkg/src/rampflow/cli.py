"""Command-line interface: simulate, sweep, stability, convergence, constants.

Every command reads one scenario file (--config accepts a path or the name
of a bundled scenario such as ``paper_s4``), writes its CSVs plus a
run-metadata JSON and the normalized configuration into --out, and exits 0
on success.  Failures print one machine-readable line to stderr and exit
nonzero.
"""

import argparse
import json
import sys
import time
from pathlib import Path

from . import __version__
from ._accel import resolve_backend
from .config import normalized_text, parse_config, resolve_config_path
from .csvio import write_csv
from .diagnostics import (
    functional_J,
    functional_Psi,
    mass_ledger,
    theorem_constants,
    total_variation,
    tv_bound_violations,
)
from .errors import ConfigurationError, InvariantViolationError
from .experiments import (
    SweepSpec,
    convergence_study,
    delta_sweep,
    default_workers,
    lipschitz_envelope_check,
    stability_experiment,
)
from .meshkernel import weights_csv_rows
from .scenario import run_scenario

SCHEME_ID = "upwind-nonlocal-explicit-v1"

SNAPSHOT_HEADER = ("t", "x_center", "rho")
DIAGNOSTICS_HEADER = (
    "step", "t", "dt", "tv", "mass", "flux_in", "flux_out", "onramp_inflow", "offramp_outflow",
)
SWEEP_HEADER = ("delta", "J", "Psi", "tv_final")
STABILITY_HEADER = ("channel", "epsilon", "input_distance", "output_distance", "ratio")
CONVERGENCE_HEADER = ("dx", "l1_error", "observed_order")
REPORT_HEADER = (
    "run_id", "delta", "eta", "J", "Psi", "TV_final", "mass_residual_max",
    "H", "Q_T", "L_vel", "r_T",
)


def _constants_for(scenario):
    return theorem_constants(
        scenario.law,
        scenario.ramps,
        scenario.convective_kernel(),
        scenario.initial_state(),
        scenario.solver.t_final,
    )


def _diagnostics_rows(traj):
    for n in range(traj.n_steps):
        yield (
            n, traj.times[n], traj.dts[n], traj.tv[n], traj.mass[n],
            traj.flux_in[n], traj.flux_out[n],
            traj.onramp_inflow[n], traj.offramp_outflow[n],
        )
    n = traj.n_steps
    yield (n, traj.times[n], 0.0, traj.tv[n], traj.mass[n], 0.0, 0.0, 0.0, 0.0)


def _snapshot_rows(traj):
    centers = traj.grid.centers()
    for snap in traj.snapshots:
        for x, r in zip(centers, snap.rho):
            yield (snap.time, x, r)


def _write_metadata(out_dir, command, parsed, backend, wall_time, extra):
    scenario = parsed.scenario
    constants = _constants_for(scenario)
    meta = {
        "command": command,
        "version": __version__,
        "scheme": SCHEME_ID,
        "backend": backend,
        "boundary": {
            "left": scenario.solver.left_boundary,
            "left_value": scenario.solver.left_value,
            "right": "extrapolate",
        },
        "constants": {
            "L_vel": constants.l_vel,
            "Q_T": constants.q_t,
            "H": constants.h,
            "r_T": constants.r_t,
            "rho0_l1": constants.rho0_l1,
        },
        "normalized_config": parsed.normalized,
        "wall_time_s": wall_time,
    }
    meta.update(extra)
    with open(out_dir / "run_metadata.json", "w", encoding="utf-8") as handle:
        json.dump(meta, handle, indent=2, sort_keys=True)
        handle.write("\n")
    (out_dir / "normalized.cfg").write_text(normalized_text(parsed.normalized), encoding="utf-8")


def _report_row(run_id, scenario, traj, constants):
    ledger = mass_ledger(traj)
    a, b = scenario.window
    return (
        run_id,
        scenario.delta,
        scenario.eta,
        functional_J(traj),
        functional_Psi(traj, a, b),
        total_variation(traj.final_state),
        ledger.max_abs_residual,
        constants.h,
        constants.q_t,
        constants.l_vel,
        constants.r_t,
    )


def _cmd_simulate(parsed, out_dir, args):
    scenario = parsed.scenario
    traj = run_scenario(scenario, backend=args.backend)
    write_csv(out_dir / "snapshots.csv", SNAPSHOT_HEADER, _snapshot_rows(traj))
    write_csv(out_dir / "diagnostics.csv", DIAGNOSTICS_HEADER, _diagnostics_rows(traj))
    conv_w, react_w = scenario.weights()
    write_csv(out_dir / "kernel_convective.csv", ("k", "x_left", "x_right", "gamma_k"),
              weights_csv_rows(conv_w))
    write_csv(out_dir / "kernel_reactive.csv", ("k", "x_left", "x_right", "gamma_k"),
              weights_csv_rows(react_w))
    constants = _constants_for(scenario)
    row = None
    if traj.has_per_step_states():
        row = _report_row("simulate", scenario, traj, constants)
        write_csv(out_dir / "functional_report.csv", REPORT_HEADER, [row])
    ledger = mass_ledger(traj)
    violations = tv_bound_violations(traj, constants)
    print(
        f"simulate: {traj.n_steps} steps to t={float(traj.times[-1])!r}; "
        f"max ledger residual {ledger.max_abs_residual:.3e}; "
        f"tv bound violations {violations.size}/{traj.times.size}"
    )
    return {
        "n_steps": traj.n_steps,
        "max_overshoot": traj.max_overshoot,
        "max_undershoot": traj.max_undershoot,
        "mass_residual_max": ledger.max_abs_residual,
        "mass_cumulative_drift": ledger.cumulative_drift,
        "tv_bound_violation_steps": int(violations.size),
    }


def _cmd_sweep(parsed, out_dir, args):
    scenario = parsed.scenario
    deltas = parsed.sweep_deltas
    if deltas is None:
        deltas = SweepSpec.default_deltas(scenario.eta)
    result = delta_sweep(SweepSpec(scenario, deltas), workers=args.workers, backend=args.backend)
    write_csv(
        out_dir / "sweep.csv",
        SWEEP_HEADER,
        ((r.delta, r.J, r.Psi, r.tv_final) for r in result.rows),
    )
    constants = _constants_for(scenario)
    write_csv(
        out_dir / "functional_report.csv",
        REPORT_HEADER,
        (
            (
                f"sweep_{i:02d}", r.delta, scenario.eta, r.J, r.Psi, r.tv_final,
                r.mass_residual_max, constants.h, constants.q_t, constants.l_vel,
                constants.r_t,
            )
            for i, r in enumerate(result.rows)
        ),
    )
    print(
        f"sweep: {len(result.rows)} runs; argmin Psi at delta={result.argmin_psi!r}"
        f"{' (tied)' if result.psi_tied else ''}; argmin J at delta={result.argmin_j!r}"
    )
    return {
        "argmin_psi": result.argmin_psi,
        "argmin_j": result.argmin_j,
        "psi_tied": result.psi_tied,
        "j_tied": result.j_tied,
        "runtimes_s": {repr(r.delta): r.runtime_s for r in result.rows},
    }


def _cmd_stability(parsed, out_dir, args):
    if parsed.stability is None:
        raise ConfigurationError("the stability command needs a [stability] section")
    scenario = parsed.scenario
    constants = _constants_for(scenario)
    c_surrogate = parsed.stability.c_surrogate
    if c_surrogate is None:
        c_surrogate = constants.h
    base = run_scenario(scenario, snapshot_stride=0, backend=args.backend).final_state
    rows = []
    meta = {"c_surrogate": c_surrogate, "channels": {}}
    for spec in parsed.stability.specs:
        report = stability_experiment(
            scenario, spec, workers=args.workers, backend=args.backend, base_final=base
        )
        envelope = lipschitz_envelope_check(report, constants, c_surrogate)
        for row in report.rows:
            rows.append((spec.channel, row.epsilon, row.input_distance,
                         row.output_distance, row.ratio))
        meta["channels"][spec.channel] = {
            "slope": report.slope,
            "r_squared": report.r_squared,
            "envelope_all_passed": all(e.passed for e in envelope),
        }
        print(
            f"stability[{spec.channel}]: slope={report.slope:.6g} "
            f"R2={report.r_squared:.6f} envelope "
            f"{'pass' if meta['channels'][spec.channel]['envelope_all_passed'] else 'FAIL'}"
        )
    write_csv(out_dir / "stability.csv", STABILITY_HEADER, rows)
    return meta


def _cmd_convergence(parsed, out_dir, args):
    if parsed.convergence_cells is None:
        raise ConfigurationError("the convergence command needs a [convergence] section")
    result = convergence_study(
        parsed.scenario, parsed.convergence_cells, workers=args.workers, backend=args.backend
    )
    write_csv(
        out_dir / "convergence.csv",
        CONVERGENCE_HEADER,
        ((r.dx, r.l1_error, r.observed_order) for r in result.rows),
    )
    for r in result.rows:
        print(f"convergence: dx={r.dx!r} l1_error={r.l1_error:.6e} order={r.observed_order}")
    return {
        "reference_n_cells": result.reference_n_cells,
        "orders": [r.observed_order for r in result.rows],
    }


def _cmd_constants(parsed, out_dir, args):
    constants = _constants_for(parsed.scenario)
    print(
        f"L_vel={constants.l_vel!r} Q_T={constants.q_t!r} H={constants.h!r} "
        f"r_T={constants.r_t!r} rho0_l1={constants.rho0_l1!r}"
    )
    return {}


_COMMANDS = {
    "simulate": _cmd_simulate,
    "sweep": _cmd_sweep,
    "stability": _cmd_stability,
    "convergence": _cmd_convergence,
    "constants": _cmd_constants,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rampflow",
        description="Finite-volume simulator and experiments for nonlocal ramp traffic flow",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", required=True,
                         help="scenario file path or bundled scenario name")
        cmd.add_argument("--out", default="rampflow_out", help="output directory")
        cmd.add_argument("--workers", type=int, default=None,
                         help="worker processes (default: RAMPFLOW_WORKERS or min(4, cpus))")
        cmd.add_argument("--backend", default=None, choices=("numba", "numpy"),
                         help="kernel backend override")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        backend = resolve_backend(args.backend)
        if args.workers is None:
            args.workers = default_workers()
        parsed = parse_config(resolve_config_path(args.config))
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        t0 = time.perf_counter()
        extra = _COMMANDS[args.command](parsed, out_dir, args)
        _write_metadata(out_dir, args.command, parsed, backend, time.perf_counter() - t0, extra)
    except ConfigurationError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return 2
    except InvariantViolationError as exc:
        print(f"error: invariant: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
