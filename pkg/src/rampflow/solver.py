"""Explicit upwind finite-volume solver for the nonlocal balance law.

Scheme: first-order upwind with the nonlocal velocity frozen per interface
and unsplit explicit sources,

    rho_j^{n+1} = rho_j - (dt/dx) (F_{j+1/2} - F_{j-1/2}) + dt (S_on,j - S_off,j)

with F_{j+1/2} = rho_j * v(c_{j+1/2}) and c_{j+1/2} the convective-kernel
average of the cells downstream of the interface.  The transport speed is
nonnegative, so upwinding always takes the left cell.  The time step keeps
densities inside [0, 1]; any excursion beyond roundoff aborts the run
instead of being clamped away.

Boundaries: the left ghost cell is either a Dirichlet value (steady inflow)
or a copy of the first cell; kernel windows overrunning the right edge
replicate the last cell (free outflow).
"""

from dataclasses import dataclass

import numpy as np

from ._accel import resolve_backend
from ._kernels import kernel_funcs
from .errors import ConfigurationError, InvariantViolationError
from .meshkernel import DiscreteKernelWeights, Grid
from .model import DENSITY_TOL, RampConfig, VelocityLaw, discretize_indicator

LEFT_BOUNDARY_MODES = ("dirichlet", "extrapolate")

#: guards the division in the source part of the time-step bound
_RATE_EPS = 1e-300


@dataclass
class StateField:
    """Cell-averaged densities on a grid at one instant."""

    grid: Grid
    rho: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        r = np.array(self.rho, dtype=float)
        if r.shape != (self.grid.n_cells,):
            raise ConfigurationError(
                f"state length {r.shape} does not match grid n_cells={self.grid.n_cells}"
            )
        if r.min() < -DENSITY_TOL or r.max() > 1.0 + DENSITY_TOL:
            raise InvariantViolationError(
                f"initial density outside [0,1] beyond roundoff: "
                f"min={r.min()!r} max={r.max()!r}"
            )
        np.clip(r, 0.0, 1.0, out=r)
        self.rho = r


@dataclass(frozen=True)
class BoundaryRule:
    """Left-edge ghost rule; the right edge always replicates the last cell."""

    left_mode: str
    left_value: float | None = None

    def __post_init__(self):
        if self.left_mode not in LEFT_BOUNDARY_MODES:
            raise ConfigurationError(
                f"solver.left_boundary must be one of {LEFT_BOUNDARY_MODES} "
                f"(got {self.left_mode!r})"
            )
        if self.left_mode == "dirichlet":
            if self.left_value is None:
                raise ConfigurationError("solver.left_value is required for dirichlet inflow")
            if not 0.0 <= self.left_value <= 1.0:
                raise ConfigurationError(
                    f"solver.left_value must lie in [0,1] (got {self.left_value})"
                )

    def ghost(self, rho: np.ndarray) -> float:
        if self.left_mode == "dirichlet":
            return float(self.left_value)
        return float(rho[0])


@dataclass(frozen=True)
class SolverConfig:
    t_final: float
    cfl: float = 0.9
    left_boundary: str = "dirichlet"
    left_value: float | None = None
    snapshot_stride: int = 1

    def __post_init__(self):
        if not self.t_final >= 0.0:
            raise ConfigurationError(f"solver.t_final must be >= 0 (got {self.t_final})")
        if not 0.0 < self.cfl <= 1.0:
            raise ConfigurationError(f"solver.cfl must lie in (0, 1] (got {self.cfl})")
        if self.snapshot_stride < 0:
            raise ConfigurationError(
                f"solver.snapshot_stride must be >= 0 (got {self.snapshot_stride})"
            )
        self.boundary()  # validate mode/value pairing

    def boundary(self) -> BoundaryRule:
        return BoundaryRule(self.left_boundary, self.left_value)


@dataclass
class Trajectory:
    """Snapshots plus per-step diagnostics of one completed run.

    Diagnostic arrays: ``times``, ``tv`` and ``mass`` have n_steps + 1
    entries (one per recorded instant, initial state included); ``dts``,
    boundary fluxes and source integrals have n_steps entries (entry n
    covers the step from times[n] to times[n+1]).  Source integrals are
    instantaneous spatial integrals (rates), not yet multiplied by dt.
    """

    grid: Grid
    times: np.ndarray
    dts: np.ndarray
    tv: np.ndarray
    mass: np.ndarray
    flux_in: np.ndarray
    flux_out: np.ndarray
    onramp_inflow: np.ndarray
    offramp_outflow: np.ndarray
    snapshots: list
    snapshot_stride: int
    max_overshoot: float = 0.0
    max_undershoot: float = 0.0

    def __post_init__(self):
        if len(self.snapshots) == 0:
            raise ConfigurationError("trajectory must contain at least the initial state")
        if np.any(np.diff(self.times) <= 0.0) and self.times.size > 1:
            raise ConfigurationError("trajectory times must be strictly increasing")

    @property
    def n_steps(self) -> int:
        return self.dts.size

    @property
    def final_state(self) -> StateField:
        return self.snapshots[-1]

    def has_per_step_states(self) -> bool:
        return len(self.snapshots) == self.n_steps + 1


def _extend(rho: np.ndarray, ghost_left: float, k_lo: int, k_hi: int) -> np.ndarray:
    """Values of the extended state at cell indices k_lo .. n-1+k_hi."""
    parts = []
    if k_lo < 0:
        parts.append(np.full(-k_lo, ghost_left))
    parts.append(rho)
    if k_hi > 0:
        parts.append(np.full(k_hi, rho[-1]))
    ext = np.concatenate(parts) if len(parts) > 1 else rho
    start = k_lo if k_lo > 0 else 0
    stop = ext.size + (k_hi if k_hi < 0 else 0)
    return ext[start:stop]


def nonlocal_sample(
    state: StateField, weights: DiscreteKernelWeights, j: int, boundary: BoundaryRule
) -> float:
    """Convolved density sum_k gamma_k rho_hat[j + k] at cell index j.

    Reference implementation (scalar); the solver computes the same samples
    vectorized.  The result is a convex combination of admissible densities
    and is clipped to [0, 1] against roundoff.
    """
    n = state.grid.n_cells
    if not 0 <= j < n:
        raise IndexError(f"cell index {j} outside 0..{n - 1}")
    rho = state.rho
    ghost = boundary.ghost(rho)
    acc = 0.0
    for i, k in enumerate(range(weights.offset_lo, weights.offset_hi + 1)):
        idx = j + k
        if idx < 0:
            val = ghost
        elif idx >= n:
            val = float(rho[-1])
        else:
            val = float(rho[idx])
        acc += float(weights.weights[i]) * val
    return min(max(acc, 0.0), 1.0)


def _base_dt(dx: float, law: VelocityLaw, ramps: RampConfig, config: SolverConfig) -> float:
    v_max = law.sup_v()
    q_sup = ramps.effective_rate_sup(config.t_final)
    if v_max == 0.0 and q_sup == 0.0:
        # static model: nothing evolves, one step covers the horizon
        return np.inf
    adv = dx / v_max if v_max > 0.0 else np.inf
    return config.cfl * min(adv, 1.0 / (q_sup + _RATE_EPS))


def compute_dt(
    state: StateField, law: VelocityLaw, ramps: RampConfig, config: SolverConfig
) -> float:
    """Stable step: cfl * min(dx / V_max, 1 / sup(per-length rates)).

    The advective part bounds the upwind CFL number; the rate part keeps the
    explicit source update inside [0, 1].  Rate sups are taken over the whole
    horizon, so the bound is step-independent; the returned value is clipped
    so the final step lands exactly on t_final.

    The min of the two restrictions is provably band-preserving when the
    advective limit dominates (cfl (1 + dx (omega(0) |v'|_sup + q_sup)) <= 1);
    when the two limits are comparable the bound is heuristic and the solver
    relies on its runtime band check, which aborts instead of clamping.
    """
    return min(_base_dt(state.grid.dx, law, ramps, config), config.t_final - state.time)


@dataclass(frozen=True)
class _StepWork:
    """Grid-dependent arrays shared by every step of one run."""

    chi_on: np.ndarray
    chi_off: np.ndarray
    on_scale: float
    off_scale: float
    boundary: BoundaryRule
    correlate: object
    update: object

    @staticmethod
    def build(
        grid: Grid, ramps: RampConfig, config: SolverConfig, backend: str | None
    ) -> "_StepWork":
        zeros = np.zeros(grid.n_cells)
        chi_on = (
            discretize_indicator(ramps.on_interval, grid).chi
            if ramps.on_interval is not None
            else zeros
        )
        chi_off = (
            discretize_indicator(ramps.off_interval, grid).chi
            if ramps.off_interval is not None
            else zeros
        )
        correlate, update = kernel_funcs(backend)
        return _StepWork(
            chi_on=chi_on,
            chi_off=chi_off,
            on_scale=ramps.on_rate_scale(),
            off_scale=ramps.off_rate_scale(),
            boundary=config.boundary(),
            correlate=correlate,
            update=update,
        )


def _advance(rho, t, dt, law, ramps, conv_w, react_w, work, dx):
    """Raw update plus ledger quantities; no band check, no clamping."""
    ghost = work.boundary.ghost(rho)
    # interface speeds: convective sample anchored at each interface
    ext_c = _extend(rho, ghost, conv_w.offset_lo, conv_w.offset_hi + 1)
    conv = np.clip(work.correlate(ext_c, conv_w.weights), 0.0, 1.0)
    vel = np.asarray(law.v(conv), dtype=float)
    # reactive sample per cell
    ext_r = _extend(rho, ghost, react_w.offset_lo, react_w.offset_hi)
    r_on = np.clip(work.correlate(ext_r, react_w.weights), 0.0, 1.0)
    q_on_t = ramps.q_on(t) * work.on_scale
    q_off_t = ramps.q_off(t) * work.off_scale
    return work.update(
        rho, ghost, vel, r_on, work.chi_on, work.chi_off, q_on_t, q_off_t, dt, dx
    )


def step(
    state: StateField,
    dt: float,
    law: VelocityLaw,
    ramps: RampConfig,
    conv_weights: DiscreteKernelWeights,
    react_weights: DiscreteKernelWeights,
    config: SolverConfig,
    backend: str | None = None,
) -> StateField:
    """Advance one explicit step; raises if the density band breaks."""
    work = _StepWork.build(state.grid, ramps, config, backend)
    raw, *_ = _advance(
        state.rho, state.time, dt, law, ramps, conv_weights, react_weights, work, state.grid.dx
    )
    mn, mx = float(raw.min()), float(raw.max())
    if mn < -DENSITY_TOL or mx > 1.0 + DENSITY_TOL:
        raise InvariantViolationError(
            f"density left [0,1] beyond roundoff after step at t={state.time!r} "
            f"(min={mn!r}, max={mx!r}); check the CFL number and kernel weights",
            time=state.time,
        )
    np.clip(raw, 0.0, 1.0, out=raw)
    return StateField(state.grid, raw, state.time + dt)


def simulate(
    initial: StateField,
    law: VelocityLaw,
    ramps: RampConfig,
    conv_weights: DiscreteKernelWeights,
    react_weights: DiscreteKernelWeights,
    config: SolverConfig,
    backend: str | None = None,
) -> Trajectory:
    """Run compute_dt + step until t_final, recording per-step diagnostics.

    Snapshots are stored every ``config.snapshot_stride`` accepted steps
    (stride 0 keeps only the initial and final states); the final state is
    always stored.  Per-step diagnostics are recorded unconditionally.
    """
    backend = resolve_backend(backend)
    grid = initial.grid
    dx = grid.dx
    work = _StepWork.build(grid, ramps, config, backend)
    rho = initial.rho.copy()
    t = float(initial.time)

    times = [t]
    tv = [float(np.abs(np.diff(rho)).sum())]
    mass = [dx * float(rho.sum())]
    dts, flux_in, flux_out, on_int, off_int = [], [], [], [], []
    snapshots = [StateField(grid, rho.copy(), t)]
    max_over = 0.0
    max_under = 0.0

    base_dt = _base_dt(dx, law, ramps, config)
    n_accepted = 0
    while t < config.t_final:
        remaining = config.t_final - t
        last = base_dt >= remaining
        dt = remaining if last else base_dt
        raw, f_in, f_out, s_on_int, s_off_int = _advance(
            rho, t, dt, law, ramps, conv_weights, react_weights, work, dx
        )
        mn, mx = float(raw.min()), float(raw.max())
        if mn < -DENSITY_TOL or mx > 1.0 + DENSITY_TOL:
            raise InvariantViolationError(
                f"density left [0,1] beyond roundoff at step {n_accepted} "
                f"(t={t!r}, min={mn!r}, max={mx!r}); "
                "check the CFL number and kernel weights",
                step=n_accepted,
                time=t,
            )
        max_over = max(max_over, mx - 1.0)
        max_under = max(max_under, -mn)
        np.clip(raw, 0.0, 1.0, out=raw)
        rho = raw
        t = config.t_final if last else t + dt
        n_accepted += 1

        times.append(t)
        dts.append(dt)
        tv.append(float(np.abs(np.diff(rho)).sum()))
        mass.append(dx * float(rho.sum()))
        flux_in.append(f_in)
        flux_out.append(f_out)
        on_int.append(s_on_int)
        off_int.append(s_off_int)
        if config.snapshot_stride > 0 and n_accepted % config.snapshot_stride == 0:
            snapshots.append(StateField(grid, rho.copy(), t))

    if snapshots[-1].time != t:
        snapshots.append(StateField(grid, rho.copy(), t))

    return Trajectory(
        grid=grid,
        times=np.array(times),
        dts=np.array(dts),
        tv=np.array(tv),
        mass=np.array(mass),
        flux_in=np.array(flux_in),
        flux_out=np.array(flux_out),
        onramp_inflow=np.array(on_int),
        offramp_outflow=np.array(off_int),
        snapshots=snapshots,
        snapshot_stride=config.snapshot_stride,
        max_overshoot=max(max_over, 0.0),
        max_undershoot=max(max_under, 0.0),
    )
