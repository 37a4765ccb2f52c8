"""Norms, congestion functionals, the mass ledger, and a-priori constants."""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .meshkernel import ConvectiveKernel
from .model import DENSITY_TOL, RampConfig, VelocityLaw, discretize_indicator
from .solver import StateField, Trajectory


def total_variation(state) -> float:
    """Sum of |rho_{j+1} - rho_j| over interior cell pairs."""
    rho = state.rho if isinstance(state, StateField) else np.asarray(state, dtype=float)
    return float(np.abs(np.diff(rho)).sum())


def l1_distance(a: StateField, b: StateField) -> float:
    """dx-weighted L1 distance of two states on the same grid."""
    if a.grid != b.grid:
        raise ConfigurationError("l1_distance requires states on the same grid")
    return a.grid.dx * float(np.abs(a.rho - b.rho).sum())


def functional_J(traj: Trajectory) -> float:
    """Time integral of the spatial total variation (left-endpoint rule).

    Uses the per-step diagnostics, so the value is independent of the
    snapshot stride.
    """
    if traj.times.size == 0 or len(traj.snapshots) == 0:
        raise ConfigurationError("functional_J needs a trajectory with diagnostics")
    if traj.n_steps == 0:
        return 0.0
    return float((traj.dts * traj.tv[:-1]).sum())


def phi(r):
    """Congestion weight: 0 below 0.75, then 10 r - 7.5, saturating at 1."""
    arr = np.asarray(r, dtype=float)
    if np.any(arr < -DENSITY_TOL) or np.any(arr > 1.0 + DENSITY_TOL):
        raise ConfigurationError(
            f"phi expects densities in [0,1]; got min={arr.min()!r} max={arr.max()!r}"
        )
    out = np.clip(10.0 * arr - 7.5, 0.0, 1.0)
    return float(out) if np.isscalar(r) else out


def functional_Psi(traj: Trajectory, a: float, b: float) -> float:
    """Time-space integral of phi(rho) over the window [a, b].

    Needs the per-step states (snapshot stride 1); partial boundary cells
    contribute with their coverage fraction.
    """
    if not a < b:
        raise ConfigurationError(f"functional window must satisfy a < b (got [{a}, {b}])")
    if not traj.has_per_step_states():
        raise ConfigurationError(
            "functional_Psi needs per-step states; rerun with snapshot_stride=1"
        )
    if traj.n_steps == 0:
        return 0.0
    chi = discretize_indicator((a, b), traj.grid).chi
    dx = traj.grid.dx
    spatial = np.array([float((chi * phi(s.rho)).sum()) for s in traj.snapshots[:-1]])
    return float((traj.dts * dx * spatial).sum())


@dataclass(frozen=True)
class TheoremConstants:
    """A-priori constants of the well-posedness estimates.

    ``l_vel`` is the sup of |v| plus the sup of |v'| on [0, 1]; ``q_t`` is
    twice the summed rate sups; ``h`` adds the kernel peak times ``l_vel``
    to the rate sups; ``r1_upper(t)`` bounds the L1 norm of the solution by
    the initial mass plus the accumulated on-ramp demand (the subtracted
    outflow terms of the sharp estimate are dropped, keeping it an upper
    bound); ``r_t`` integrates that bound over the horizon.
    """

    l_vel: float
    q_t: float
    h: float
    rho0_l1: float
    horizon: float
    r_t: float
    q_on: object

    def r1_upper(self, t: float) -> float:
        return self.rho0_l1 + self.q_on.l1(t)

    def tv_bound(self, t, tv0: float):
        """Right-hand side exp(t h) (tv0 + t q_t) of the TV estimate."""
        t = np.asarray(t, dtype=float)
        return np.exp(t * self.h) * (tv0 + t * self.q_t)


def theorem_constants(
    law: VelocityLaw,
    ramps: RampConfig,
    conv_kernel: ConvectiveKernel,
    rho0: StateField,
    horizon: float,
) -> TheoremConstants:
    """Evaluate the constants from the configured rate tables.

    Exact for the affine default law; non-affine laws are sampled densely.
    """
    l_vel = law.sup_v() + law.sup_dv()
    q_on_sup = ramps.q_on.sup(horizon)
    q_off_sup = ramps.q_off.sup(horizon)
    q_t = 2.0 * (q_on_sup + q_off_sup)
    h = 2.0 * q_on_sup + q_off_sup + conv_kernel.peak() * l_vel
    rho0_l1 = rho0.grid.dx * float(rho0.rho.sum())
    r_t = rho0_l1 * horizon + ramps.q_on.double_integral(horizon)
    return TheoremConstants(
        l_vel=l_vel,
        q_t=q_t,
        h=h,
        rho0_l1=rho0_l1,
        horizon=horizon,
        r_t=r_t,
        q_on=ramps.q_on,
    )


def tv_bound_violations(traj: Trajectory, constants: TheoremConstants) -> np.ndarray:
    """Indices of recorded steps where TV exceeds the a-priori bound."""
    bound = constants.tv_bound(traj.times, float(traj.tv[0]))
    return np.nonzero(traj.tv > bound)[0]


@dataclass(frozen=True)
class MassLedgerReport:
    """Per-step and cumulative closure of the discrete mass balance.

    Residual n is mass(t_{n+1}) - mass(t_n) minus the step's boundary net
    influx and net ramp exchange, each multiplied by dt.
    """

    residuals: np.ndarray
    max_abs_residual: float
    cumulative_drift: float


def mass_ledger(traj: Trajectory) -> MassLedgerReport:
    """Recompute the discrete balance from the per-step diagnostics."""
    if traj.n_steps == 0:
        empty = np.zeros(0)
        return MassLedgerReport(empty, 0.0, 0.0)
    dmass = np.diff(traj.mass)
    explained = traj.dts * (
        traj.flux_in - traj.flux_out + traj.onramp_inflow - traj.offramp_outflow
    )
    residuals = dmass - explained
    return MassLedgerReport(
        residuals=residuals,
        max_abs_residual=float(np.abs(residuals).max()),
        cumulative_drift=float(abs(residuals.sum())),
    )
