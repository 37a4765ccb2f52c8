"""Experiment orchestration: delta sweep, stability study, grid convergence.

Runs are independent and dispatched to a bounded process pool; results are
keyed by parameter value so aggregation is order-independent and
deterministic.  ``workers`` defaults to the RAMPFLOW_WORKERS environment
variable, falling back to min(4, cpu count); a value of 1 runs in process.
"""

import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from functools import partial

import numpy as np

from .diagnostics import (
    TheoremConstants,
    functional_J,
    functional_Psi,
    l1_distance,
    mass_ledger,
    total_variation,
)
from .errors import ConfigurationError
from .meshkernel import kernel_l1_distance
from .scenario import Scenario, perturbed_profile, run_scenario
from .solver import StateField

PERTURBATION_CHANNELS = ("initial_datum", "q_on", "q_off", "kernel_delta", "kernel_shape")

#: where the initial-datum perturbation bump sits (kept away from the
#: domain boundaries of the bundled scenario, upstream of its ramp)
BUMP_CENTER = 0.0
BUMP_HALF_WIDTH = 0.5


def default_workers() -> int:
    env = os.environ.get("RAMPFLOW_WORKERS", "").strip()
    if env:
        try:
            n = int(env)
        except ValueError as exc:
            raise ConfigurationError(f"RAMPFLOW_WORKERS must be an integer (got {env!r})") from exc
        if n < 1:
            raise ConfigurationError(f"RAMPFLOW_WORKERS must be >= 1 (got {n})")
        return n
    return min(4, os.cpu_count() or 1)


def _run_one(task):
    """Worker entry: run a scenario and reduce it with the named reducer."""
    key, scenario, stride, backend, reducer = task
    t0 = time.perf_counter()
    traj = run_scenario(scenario, snapshot_stride=stride, backend=backend)
    runtime = time.perf_counter() - t0
    return key, _REDUCERS[reducer](scenario, traj), runtime


def _reduce_functionals(scenario: Scenario, traj):
    a, b = scenario.window
    return {
        "J": functional_J(traj),
        "Psi": functional_Psi(traj, a, b),
        "tv_final": total_variation(traj.final_state),
        "mass_residual_max": mass_ledger(traj).max_abs_residual,
    }


def _reduce_final_state(scenario: Scenario, traj):
    return traj.final_state


_REDUCERS = {"functionals": _reduce_functionals, "final_state": _reduce_final_state}


def _run_tasks(tasks, workers: int | None):
    workers = default_workers() if workers is None else workers
    if workers <= 1 or len(tasks) <= 1:
        return [_run_one(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
        return list(pool.map(_run_one, tasks))


# ---------------------------------------------------------------------------
# delta sweep
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepSpec:
    """Base scenario plus the ordered list of reactive-kernel offsets."""

    scenario: Scenario
    deltas: tuple

    def __post_init__(self):
        object.__setattr__(self, "deltas", tuple(float(d) for d in self.deltas))
        if len(self.deltas) < 2:
            raise ConfigurationError("sweep.deltas needs at least 2 values")
        eta = self.scenario.eta
        for d in self.deltas:
            if not -eta <= d <= eta:
                raise ConfigurationError(
                    f"sweep delta {d} outside [-eta, eta] = [{-eta}, {eta}]"
                )

    @staticmethod
    def default_deltas(eta: float, count: int = 11) -> tuple:
        return tuple(np.linspace(-eta, eta, count))


@dataclass(frozen=True)
class SweepRow:
    delta: float
    J: float
    Psi: float
    tv_final: float
    mass_residual_max: float
    runtime_s: float


@dataclass(frozen=True)
class SweepResult:
    rows: tuple
    argmin_psi: float
    argmin_j: float
    psi_tied: bool
    j_tied: bool

    def row_for(self, delta: float) -> SweepRow:
        for row in self.rows:
            if row.delta == delta:
                return row
        raise KeyError(f"no sweep row for delta={delta}")


def _argmin_with_ties(rows, key):
    best = min(key(r) for r in rows)
    minimizers = [r.delta for r in rows if key(r) == best]
    return min(minimizers), len(set(minimizers)) > 1


def delta_sweep(spec: SweepSpec, workers: int | None = None, backend: str | None = None) -> SweepResult:
    """One simulation per delta; rows come back sorted by delta.

    Psi needs per-step states, so sweep runs always use snapshot stride 1.
    Ties in the argmin are broken toward the smaller delta and flagged.
    """
    tasks = [
        (d, replace(spec.scenario, delta=d), 1, backend, "functionals")
        for d in spec.deltas
    ]
    results = _run_tasks(tasks, workers)
    rows = tuple(
        SweepRow(delta=key, runtime_s=rt, **vals)
        for key, vals, rt in sorted(results, key=lambda item: item[0])
    )
    argmin_psi, psi_tied = _argmin_with_ties(rows, lambda r: r.Psi)
    argmin_j, j_tied = _argmin_with_ties(rows, lambda r: r.J)
    return SweepResult(rows, argmin_psi, argmin_j, psi_tied, j_tied)


# ---------------------------------------------------------------------------
# stability experiment
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PerturbationSpec:
    """One perturbation channel with its ordered magnitudes.

    Construction rules: ``kernel_delta`` shifts the reactive-kernel offset
    by eps; ``kernel_shape`` widens the reactive support half-width by eps;
    ``q_on``/``q_off`` shift the rate table by eps; ``initial_datum`` adds
    eps times a smooth compact bump to the initial density (clamped).
    """

    channel: str
    magnitudes: tuple
    bump_center: float = BUMP_CENTER
    bump_half_width: float = BUMP_HALF_WIDTH

    def __post_init__(self):
        if self.channel not in PERTURBATION_CHANNELS:
            raise ConfigurationError(
                f"stability.channel must be one of {PERTURBATION_CHANNELS} "
                f"(got {self.channel!r})"
            )
        mags = tuple(float(m) for m in self.magnitudes)
        object.__setattr__(self, "magnitudes", mags)
        if len(mags) == 0:
            raise ConfigurationError("stability.magnitudes must not be empty")
        if any(m < 0 for m in mags):
            raise ConfigurationError("stability.magnitudes must be >= 0")


def perturb_scenario(scenario: Scenario, spec: PerturbationSpec, eps: float) -> Scenario:
    """Apply one channel's construction rule; the result must be admissible."""
    if spec.channel == "kernel_delta":
        return replace(scenario, delta=scenario.delta + eps)
    if spec.channel == "kernel_shape":
        base = scenario.react_eta if scenario.react_eta is not None else scenario.eta
        return replace(scenario, react_eta=base + eps)
    if spec.channel == "q_on":
        return replace(scenario, ramps=replace(scenario.ramps, q_on=scenario.ramps.q_on.shifted(eps)))
    if spec.channel == "q_off":
        return replace(scenario, ramps=replace(scenario.ramps, q_off=scenario.ramps.q_off.shifted(eps)))
    # initial_datum
    profile = partial(
        perturbed_profile,
        base_profile=scenario.rho0,
        eps=eps,
        center=spec.bump_center,
        half_width=spec.bump_half_width,
    )
    return replace(scenario, rho0=profile)


def input_distance(scenario: Scenario, spec: PerturbationSpec, eps: float, horizon: float) -> float:
    """The stability estimate's input term for one perturbed pair."""
    perturbed = perturb_scenario(scenario, spec, eps)
    if spec.channel in ("kernel_delta", "kernel_shape"):
        dx = scenario.grid.dx
        return kernel_l1_distance(scenario.weights()[1], perturbed.weights()[1])
    if spec.channel == "q_on":
        return scenario.ramps.q_on.l1_distance(perturbed.ramps.q_on, horizon)
    if spec.channel == "q_off":
        return scenario.ramps.q_off.l1_distance(perturbed.ramps.q_off, horizon)
    return l1_distance(scenario.initial_state(), perturbed.initial_state())


@dataclass(frozen=True)
class StabilityRow:
    epsilon: float
    input_distance: float
    output_distance: float
    ratio: float


@dataclass(frozen=True)
class StabilityReport:
    """Per-magnitude distances plus a through-origin linear fit.

    ``r_squared`` is computed about the origin (no-intercept model).
    ``q_interval_length`` records the ramp-interval length used as the
    interval factor in the envelope check for the rate channels.
    """

    channel: str
    horizon: float
    rows: tuple
    slope: float
    r_squared: float
    q_interval_length: float | None


def _fit_through_origin(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    sxx = float((x * x).sum())
    slope = float((x * y).sum()) / sxx if sxx > 0 else 0.0
    ss_res = float(((y - slope * x) ** 2).sum())
    ss_tot = float((y * y).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else float("nan")
    return slope, r2


def stability_experiment(
    scenario: Scenario,
    spec: PerturbationSpec,
    horizon: float | None = None,
    workers: int | None = None,
    backend: str | None = None,
    base_final: StateField | None = None,
) -> StabilityReport:
    """Paired runs of the base and perturbed scenarios up to the horizon.

    ``base_final`` lets callers reuse one base run across several channels.
    eps = 0 is allowed only as a self-test (it must reproduce the base
    exactly); nonzero eps with zero input distance flags a construction bug.
    """
    if horizon is not None and horizon != scenario.solver.t_final:
        scenario = replace(scenario, solver=replace(scenario.solver, t_final=horizon))
    horizon = scenario.solver.t_final

    if base_final is None:
        base_final = run_scenario(scenario, snapshot_stride=0, backend=backend).final_state

    tasks = [
        (eps, perturb_scenario(scenario, spec, eps), 0, backend, "final_state")
        for eps in spec.magnitudes
    ]
    results = _run_tasks(tasks, workers)

    rows = []
    for eps, final, _rt in sorted(results, key=lambda item: item[0]):
        inp = input_distance(scenario, spec, eps, horizon)
        out = l1_distance(base_final, final)
        if eps > 0 and inp <= 0.0:
            raise ConfigurationError(
                f"perturbation eps={eps} on channel {spec.channel} produced zero "
                "input distance; the construction rule is broken"
            )
        rows.append(
            StabilityRow(
                epsilon=eps,
                input_distance=inp,
                output_distance=out,
                ratio=out / inp if inp > 0 else 0.0,
            )
        )

    fit_rows = [(r.input_distance, r.output_distance) for r in rows if r.epsilon > 0]
    x = np.array([r[0] for r in fit_rows])
    y = np.array([r[1] for r in fit_rows])
    slope, r2 = _fit_through_origin(x, y) if fit_rows else (0.0, float("nan"))

    interval = None
    if spec.channel == "q_on" and scenario.ramps.on_interval is not None:
        a, b = scenario.ramps.on_interval
        interval = b - a
    elif spec.channel == "q_off" and scenario.ramps.off_interval is not None:
        a, b = scenario.ramps.off_interval
        interval = b - a

    return StabilityReport(
        channel=spec.channel,
        horizon=horizon,
        rows=tuple(rows),
        slope=slope,
        r_squared=r2,
        q_interval_length=interval,
    )


@dataclass(frozen=True)
class EnvelopeRow:
    epsilon: float
    output_distance: float
    envelope: float
    passed: bool
    margin: float


def lipschitz_envelope_check(
    report: StabilityReport, constants: TheoremConstants, c_surrogate: float
) -> tuple[EnvelopeRow, ...]:
    """Compare each output distance against exp(C T) times its input term.

    The input term is the channel's own contribution to the stability
    estimate: the bare initial L1 distance, the ramp-interval length times
    the rate L1 distance, or the accumulated-mass factor r_t times the
    kernel L1 distance.  C is a configured surrogate (the estimate's true
    constant is not computable here), so failures are report rows, not
    exceptions.
    """
    if not c_surrogate > 0:
        raise ConfigurationError(f"c_surrogate must be > 0 (got {c_surrogate})")
    if report.channel in ("kernel_delta", "kernel_shape"):
        factor = constants.r_t
    elif report.channel in ("q_on", "q_off"):
        factor = report.q_interval_length if report.q_interval_length is not None else 1.0
    else:
        factor = 1.0
    growth = float(np.exp(c_surrogate * report.horizon))
    out = []
    for row in report.rows:
        envelope = growth * factor * row.input_distance
        out.append(
            EnvelopeRow(
                epsilon=row.epsilon,
                output_distance=row.output_distance,
                envelope=envelope,
                passed=row.output_distance <= envelope,
                margin=envelope - row.output_distance,
            )
        )
    return tuple(out)


# ---------------------------------------------------------------------------
# grid convergence
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConvergenceRow:
    n_cells: int
    dx: float
    l1_error: float
    observed_order: float


@dataclass(frozen=True)
class ConvergenceResult:
    rows: tuple
    reference_n_cells: int


def restrict_to_coarse(fine: StateField, n_coarse: int) -> np.ndarray:
    """Cell-average a fine solution onto a nested coarse grid."""
    n_fine = fine.grid.n_cells
    if n_fine % n_coarse != 0:
        raise ConfigurationError(
            f"grids are not nested: {n_fine} reference cells cannot restrict to {n_coarse}"
        )
    factor = n_fine // n_coarse
    return fine.rho.reshape(n_coarse, factor).mean(axis=1)


def convergence_study(
    scenario: Scenario,
    n_cells_list,
    workers: int | None = None,
    backend: str | None = None,
) -> ConvergenceResult:
    """Self-convergence against a 4x-finer reference run.

    Errors are dx-weighted L1 distances between each solution and the
    cell-averaged restriction of the reference; observed orders compare
    successive grid pairs.  Errors at roundoff level (< 1e-13) report the
    order as nan (not applicable).
    """
    sizes = [int(n) for n in n_cells_list]
    if len(sizes) < 2:
        raise ConfigurationError("convergence.n_cells needs at least 2 grid sizes")
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ConfigurationError("convergence.n_cells must be strictly increasing")
    ref_n = 4 * sizes[-1]
    for n in sizes:
        if ref_n % n != 0:
            raise ConfigurationError(
                f"grids are not nested: reference {ref_n} is not a multiple of {n}"
            )

    tasks = [
        (n, scenario.with_grid(n), 0, backend, "final_state") for n in sizes + [ref_n]
    ]
    results = dict((key, final) for key, final, _rt in _run_tasks(tasks, workers))
    reference = results[ref_n]

    domain = scenario.grid.x_max - scenario.grid.x_min
    errors = []
    for n in sizes:
        coarse = results[n]
        restricted = restrict_to_coarse(reference, n)
        errors.append((domain / n) * float(np.abs(coarse.rho - restricted).sum()))

    rows = []
    for i, n in enumerate(sizes):
        if i == 0:
            order = float("nan")
        else:
            e_prev, e_here = errors[i - 1], errors[i]
            if e_prev < 1e-13 or e_here < 1e-13:
                order = float("nan")
            else:
                order = float(np.log(e_prev / e_here) / np.log(sizes[i] / sizes[i - 1]))
        rows.append(ConvergenceRow(n, domain / n, errors[i], order))
    return ConvergenceResult(tuple(rows), ref_n)
