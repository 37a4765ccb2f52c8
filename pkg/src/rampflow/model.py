"""Velocity law, ramp geometry, rate tables, and the two source terms."""

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigurationError
from .meshkernel import Grid

#: roundoff tolerance accepted outside [0, 1] before raising
DENSITY_TOL = 1e-12


def _linear_v(rho):
    return 1.0 - np.asarray(rho, dtype=float)


def _linear_dv(rho):
    return np.full_like(np.asarray(rho, dtype=float), -1.0)


@dataclass(frozen=True)
class VelocityLaw:
    """Speed as a function of density on [0, 1], with v >= 0 and v' <= 0.

    ``v_sup``/``dv_sup`` are the exact sup norms when known; otherwise they
    are estimated by dense sampling (1e4 points).
    """

    name: str
    v: Callable
    dv: Callable
    v_sup: float | None = None
    dv_sup: float | None = None

    @staticmethod
    def linear() -> "VelocityLaw":
        """The default law v(rho) = 1 - rho."""
        return VelocityLaw("linear", _linear_v, _linear_dv, v_sup=1.0, dv_sup=1.0)

    def sup_v(self) -> float:
        if self.v_sup is not None:
            return self.v_sup
        return float(np.max(self.v(np.linspace(0.0, 1.0, 10_000))))

    def sup_dv(self) -> float:
        if self.dv_sup is not None:
            return self.dv_sup
        return float(np.max(np.abs(self.dv(np.linspace(0.0, 1.0, 10_000)))))


def velocity(law: VelocityLaw, rho_bar):
    """Evaluate the law with domain validation.

    Inputs may stray from [0, 1] by at most DENSITY_TOL (roundoff from the
    convolutions); anything worse signals a broken maximum principle
    upstream and raises.
    """
    r = np.asarray(rho_bar, dtype=float)
    if np.any(r < -DENSITY_TOL) or np.any(r > 1.0 + DENSITY_TOL):
        raise ConfigurationError(
            f"density outside [0,1] beyond roundoff passed to velocity: "
            f"min={r.min()!r} max={r.max()!r}"
        )
    out = law.v(np.clip(r, 0.0, 1.0))
    return float(out) if np.isscalar(rho_bar) else out


@dataclass(frozen=True)
class RateFunction:
    """Piecewise-constant-in-time rate: value[i] on [times[i], times[i+1]).

    The last piece extends to +infinity.  times[0] must be 0 and values must
    be nonnegative (rates are inflow/outflow demands).
    """

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.array(self.times, dtype=float)
        v = np.array(self.values, dtype=float)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)
        if t.ndim != 1 or v.shape != t.shape or t.size == 0:
            raise ConfigurationError("rate table times/values must be 1D and equal length")
        if t[0] != 0.0:
            raise ConfigurationError(f"rate table must start at t=0 (got {t[0]})")
        if np.any(np.diff(t) <= 0.0):
            raise ConfigurationError("rate table breakpoints must be strictly increasing")
        if np.any(v < 0.0):
            raise ConfigurationError(f"rates must be >= 0 (got min {v.min()})")
        t.flags.writeable = False
        v.flags.writeable = False

    @staticmethod
    def constant(value: float) -> "RateFunction":
        return RateFunction(np.array([0.0]), np.array([float(value)]))

    @staticmethod
    def zero() -> "RateFunction":
        return RateFunction.constant(0.0)

    def __call__(self, t: float) -> float:
        idx = int(np.searchsorted(self.times, t, side="right")) - 1
        return float(self.values[max(idx, 0)])

    def shifted(self, amount: float) -> "RateFunction":
        return RateFunction(self.times.copy(), self.values + amount)

    def sup(self, horizon: float) -> float:
        """Sup of the rate over [0, horizon]."""
        live = self.times <= horizon
        live[0] = True
        return float(self.values[live].max())

    def l1(self, horizon: float) -> float:
        """Exact integral of the rate over [0, horizon]."""
        ends = np.append(self.times[1:], np.inf)
        spans = np.clip(np.minimum(ends, horizon) - self.times, 0.0, None)
        return float((self.values * spans).sum())

    def double_integral(self, horizon: float) -> float:
        """Exact value of the iterated integral of the rate up to the horizon.

        Computes the integral over t in [0, horizon] of the running L1 norm,
        i.e. the rate integrated against the weight (horizon - s).
        """
        ends = np.append(self.times[1:], np.inf)
        a = np.minimum(self.times, horizon)
        b = np.minimum(np.clip(ends, None, horizon), horizon)
        contrib = 0.5 * ((horizon - a) ** 2 - (horizon - b) ** 2)
        return float((self.values * contrib).sum())

    def l1_distance(self, other: "RateFunction", horizon: float) -> float:
        """Exact integral of |self - other| over [0, horizon]."""
        cuts = np.unique(np.concatenate([self.times, other.times, [0.0, horizon]]))
        cuts = cuts[(cuts >= 0.0) & (cuts <= horizon)]
        total = 0.0
        for a, b in zip(cuts[:-1], cuts[1:]):
            total += abs(self(a) - other(a)) * (b - a)
        return total


#: how the configured ramp rate maps to the per-length source rate
RATE_NORMALIZATIONS = ("per_length", "total")


@dataclass(frozen=True)
class RampConfig:
    """On/off ramp intervals and their time-dependent rates.

    With ``rate_normalization="per_length"`` the configured rate is applied
    per unit road length on the ramp interval.  With ``"total"`` the rate is
    the total ramp demand and is spread uniformly over the interval, so the
    per-length rate is q(t)/|interval|.
    """

    on_interval: tuple[float, float] | None = None
    off_interval: tuple[float, float] | None = None
    q_on: RateFunction = None
    q_off: RateFunction = None
    rate_normalization: str = "per_length"

    def __post_init__(self):
        if self.q_on is None:
            object.__setattr__(self, "q_on", RateFunction.zero())
        if self.q_off is None:
            object.__setattr__(self, "q_off", RateFunction.zero())
        for name, iv in (("on_interval", self.on_interval), ("off_interval", self.off_interval)):
            if iv is not None:
                a, b = iv
                if not a < b:
                    raise ConfigurationError(
                        f"ramp.{name} must have positive length (got [{a}, {b}])"
                    )
                object.__setattr__(self, name, (float(a), float(b)))
        if self.rate_normalization not in RATE_NORMALIZATIONS:
            raise ConfigurationError(
                f"ramp.rate_normalization must be one of {RATE_NORMALIZATIONS} "
                f"(got {self.rate_normalization!r})"
            )
        for name, iv, q in (
            ("on", self.on_interval, self.q_on),
            ("off", self.off_interval, self.q_off),
        ):
            if self.rate_normalization == "total" and iv is None and np.any(q.values > 0.0):
                raise ConfigurationError(
                    f"ramp.q_{name} is nonzero with rate_normalization=total but "
                    f"ramp.{name}_interval is absent; a total rate needs a ramp length"
                )

    @staticmethod
    def none() -> "RampConfig":
        """No ramps at all (both sources identically zero)."""
        return RampConfig()

    def _scale(self, interval) -> float:
        if self.rate_normalization == "total" and interval is not None:
            return 1.0 / (interval[1] - interval[0])
        return 1.0

    def on_rate_scale(self) -> float:
        """Factor converting q_on(t) into the per-length source rate."""
        return self._scale(self.on_interval)

    def off_rate_scale(self) -> float:
        return self._scale(self.off_interval)

    def effective_rate_sup(self, horizon: float) -> float:
        """Sup of the summed per-length source rates, used by the CFL bound."""
        return self.q_on.sup(horizon) * self.on_rate_scale() + self.q_off.sup(
            horizon
        ) * self.off_rate_scale()


@dataclass(frozen=True)
class IndicatorField:
    """Per-cell coverage fractions chi_j of an interval on a grid."""

    grid: Grid
    chi: np.ndarray

    def __post_init__(self):
        c = np.array(self.chi, dtype=float)
        object.__setattr__(self, "chi", c)
        if c.shape != (self.grid.n_cells,):
            raise ConfigurationError("indicator length must match the grid")
        c.flags.writeable = False


def discretize_indicator(interval: tuple[float, float], grid: Grid) -> IndicatorField:
    """Per-cell overlap fractions of [a, b] with the grid cells.

    Overlaps are computed in index coordinates, where fully covered interior
    cells come out as exactly 1; the two boundary cells are snapped to {0, 1}
    when within 1e-10 (removes roundoff on grid-aligned intervals without
    touching genuinely partial coverage).
    """
    a, b = interval
    if not a < b:
        raise ConfigurationError(f"interval must satisfy a < b (got [{a}, {b}])")
    if a < grid.x_min or b > grid.x_max:
        raise ConfigurationError(
            f"interval [{a}, {b}] is not contained in the grid [{grid.x_min}, {grid.x_max}]"
        )
    idx_a = (a - grid.x_min) / grid.dx
    idx_b = (b - grid.x_min) / grid.dx
    j = np.arange(grid.n_cells, dtype=float)
    chi = np.clip(np.minimum(j + 1.0, idx_b) - np.maximum(j, idx_a), 0.0, 1.0)
    chi[chi > 1.0 - 1e-10] = 1.0
    chi[chi < 1e-10] = 0.0
    return IndicatorField(grid, chi)


def s_on(q_on_t: float, chi, rho, r_on):
    """On-ramp source rate chi * q * (1 - rho) * (1 - rho_convolved)."""
    if q_on_t < 0.0:
        raise ConfigurationError(f"ramp.q_on must be >= 0 (got {q_on_t})")
    return chi * (q_on_t * (1.0 - rho) * (1.0 - r_on))


def s_off(q_off_t: float, chi, rho):
    """Off-ramp sink rate chi * q * rho."""
    if q_off_t < 0.0:
        raise ConfigurationError(f"ramp.q_off must be >= 0 (got {q_off_t})")
    return chi * (q_off_t * rho)
