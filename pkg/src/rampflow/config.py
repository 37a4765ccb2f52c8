"""Scenario-file parsing and validation.

Scenario files are INI-style: section headers with key = value lines,
UTF-8.  Every value is validated at parse time with errors naming
``section.key``; unknown sections or keys are rejected.  Defaults are
applied and echoed back through :func:`normalized_text`, whose output
reparses to an identical configuration.
"""

import configparser
from dataclasses import dataclass
from functools import partial
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ConfigurationError
from .experiments import PerturbationSpec, SweepSpec
from .meshkernel import Grid
from .model import RATE_NORMALIZATIONS, RampConfig, RateFunction, VelocityLaw
from .scenario import Scenario, constant_profile
from .solver import LEFT_BOUNDARY_MODES, SolverConfig

_DEFAULT_EPSILONS = {
    "kernel_delta": (0.0125, 0.025, 0.05, 0.1),
    "kernel_shape": (0.0125, 0.025, 0.05, 0.1),
    "q_on": (0.01, 0.02, 0.04),
    "q_off": (0.01, 0.02, 0.04),
    "initial_datum": (0.0125, 0.025, 0.05, 0.1),
}

_KNOWN_KEYS = {
    "grid": ("x_min", "x_max", "n_cells"),
    "kernel": ("eta", "delta"),
    "initial": ("rho0",),
    "ramp": ("on_interval", "q_on", "off_interval", "q_off", "rate_normalization"),
    "law": ("name",),
    "solver": ("t_final", "cfl", "left_boundary", "left_value", "snapshot_stride"),
    "functional": ("window",),
    "sweep": ("deltas",),
    "stability": (
        "channels",
        "c_surrogate",
        "epsilons_kernel_delta",
        "epsilons_kernel_shape",
        "epsilons_q_on",
        "epsilons_q_off",
        "epsilons_initial_datum",
    ),
    "convergence": ("n_cells",),
}

_REQUIRED = {
    "grid": ("x_min", "x_max", "n_cells"),
    "kernel": ("eta", "delta"),
    "initial": ("rho0",),
    "solver": ("t_final",),
}


@dataclass(frozen=True)
class StabilitySettings:
    specs: tuple
    c_surrogate: float | None


@dataclass(frozen=True)
class ParsedConfig:
    scenario: Scenario
    sweep_deltas: tuple | None
    stability: StabilitySettings | None
    convergence_cells: tuple | None
    normalized: dict


class _Section:
    """One config section with typed, error-annotated accessors."""

    def __init__(self, name: str, raw: dict):
        self.name = name
        self.raw = dict(raw)

    def _get(self, key: str):
        return self.raw.get(key)

    def _convert(self, key, text, kind, conv):
        try:
            return conv(text)
        except (ValueError, TypeError) as exc:
            raise ConfigurationError(
                f"{self.name}.{key} must be {kind} (got {text!r})"
            ) from exc

    def get_float(self, key, default=None, required=False):
        text = self._get(key)
        if text is None:
            if required:
                raise ConfigurationError(f"{self.name}.{key} is required")
            return default
        return self._convert(key, text, "a number", float)

    def get_int(self, key, default=None, required=False):
        text = self._get(key)
        if text is None:
            if required:
                raise ConfigurationError(f"{self.name}.{key} is required")
            return default
        return self._convert(key, text, "an integer", int)

    def get_str(self, key, default=None, choices=None):
        text = self._get(key)
        if text is None:
            return default
        text = text.strip()
        if choices is not None and text not in choices:
            raise ConfigurationError(
                f"{self.name}.{key} must be one of {choices} (got {text!r})"
            )
        return text

    def get_float_list(self, key, default=None):
        text = self._get(key)
        if text is None:
            return default
        items = [p.strip() for p in text.split(",") if p.strip()]
        if not items:
            raise ConfigurationError(f"{self.name}.{key} must be a comma-separated list")
        return tuple(
            self._convert(key, item, "a number", float) for item in items
        )

    def get_interval(self, key, default=None):
        vals = self.get_float_list(key, default=None)
        if vals is None:
            return default
        if len(vals) != 2:
            raise ConfigurationError(
                f"{self.name}.{key} must be two comma-separated numbers (got {len(vals)})"
            )
        return (vals[0], vals[1])

    def get_rate(self, key, default=None):
        """Either a single number (constant) or 'time:value' pairs."""
        text = self._get(key)
        if text is None:
            return default
        if ":" not in text:
            value = self._convert(key, text, "a number", float)
            if value < 0:
                raise ConfigurationError(f"{self.name}.{key} must be >= 0 (got {value})")
            return RateFunction.constant(value)
        times, values = [], []
        for piece in text.split(","):
            piece = piece.strip()
            if not piece:
                continue
            if ":" not in piece:
                raise ConfigurationError(
                    f"{self.name}.{key} mixes constant and time:value syntax ({piece!r})"
                )
            t_text, v_text = piece.split(":", 1)
            times.append(self._convert(key, t_text.strip(), "a time", float))
            values.append(self._convert(key, v_text.strip(), "a rate", float))
        try:
            return RateFunction(np.array(times), np.array(values))
        except ConfigurationError as exc:
            raise ConfigurationError(f"{self.name}.{key}: {exc}") from exc


def resolve_config_path(name_or_path: str) -> Path:
    """Accept a filesystem path or the name of a bundled scenario."""
    p = Path(name_or_path)
    if p.is_file():
        return p
    bundled = resources.files("rampflow").joinpath("scenarios").joinpath(f"{name_or_path}.cfg")
    if bundled.is_file():
        return Path(str(bundled))
    raise ConfigurationError(
        f"config {name_or_path!r} is neither a readable file nor a bundled scenario"
    )


def parse_config(path) -> ParsedConfig:
    """Read, validate, and normalize one scenario file."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        with open(path, encoding="utf-8") as handle:
            parser.read_file(handle)
    except OSError as exc:
        raise ConfigurationError(f"cannot read config file {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigurationError(f"malformed config file {path}: {exc}") from exc

    sections = {}
    for name in parser.sections():
        if name not in _KNOWN_KEYS:
            raise ConfigurationError(f"unknown config section [{name}]")
        sections[name] = _Section(name, dict(parser.items(name)))
        for key in sections[name].raw:
            if key not in _KNOWN_KEYS[name]:
                raise ConfigurationError(f"unknown key {name}.{key}")
    for name, keys in _REQUIRED.items():
        if name not in sections:
            raise ConfigurationError(f"missing required config section [{name}]")
        for key in keys:
            if key not in sections[name].raw:
                raise ConfigurationError(f"{name}.{key} is required")

    def section(name):
        return sections.get(name, _Section(name, {}))

    g = section("grid")
    grid = Grid(
        g.get_float("x_min", required=True),
        g.get_float("x_max", required=True),
        g.get_int("n_cells", required=True),
    )

    k = section("kernel")
    eta = k.get_float("eta", required=True)
    delta = k.get_float("delta", required=True)

    ini = section("initial")
    rho0_value = ini.get_float("rho0", required=True)
    if not 0.0 <= rho0_value <= 1.0:
        raise ConfigurationError(f"initial.rho0 must lie in [0,1] (got {rho0_value})")

    r = section("ramp")
    ramps = RampConfig(
        on_interval=r.get_interval("on_interval"),
        off_interval=r.get_interval("off_interval"),
        q_on=r.get_rate("q_on", default=RateFunction.zero()),
        q_off=r.get_rate("q_off", default=RateFunction.zero()),
        rate_normalization=r.get_str(
            "rate_normalization", default="per_length", choices=RATE_NORMALIZATIONS
        ),
    )

    law_name = section("law").get_str("name", default="linear", choices=("linear",))
    law = VelocityLaw.linear()

    s = section("solver")
    solver = SolverConfig(
        t_final=s.get_float("t_final", required=True),
        cfl=s.get_float("cfl", default=0.9),
        left_boundary=s.get_str("left_boundary", default="dirichlet", choices=LEFT_BOUNDARY_MODES),
        left_value=s.get_float("left_value", default=rho0_value),
        snapshot_stride=s.get_int("snapshot_stride", default=1),
    )
    if solver.left_boundary == "extrapolate":
        solver = SolverConfig(
            t_final=solver.t_final,
            cfl=solver.cfl,
            left_boundary="extrapolate",
            left_value=None,
            snapshot_stride=solver.snapshot_stride,
        )

    window = section("functional").get_interval("window", default=(grid.x_min, grid.x_max))

    scenario = Scenario(
        grid=grid,
        eta=eta,
        delta=delta,
        ramps=ramps,
        law=law,
        solver=solver,
        window=window,
        rho0=partial(constant_profile, value=rho0_value),
    )

    sweep_deltas = None
    if "sweep" in sections:
        sweep_deltas = section("sweep").get_float_list("deltas")
        SweepSpec(scenario, sweep_deltas)  # validate now, fail at parse time

    stability = None
    if "stability" in sections:
        st = section("stability")
        channels_text = st.get_str("channels", default="kernel_delta, q_on, initial_datum")
        channels = tuple(c.strip() for c in channels_text.split(",") if c.strip())
        specs = []
        for channel in channels:
            eps = st.get_float_list(
                f"epsilons_{channel}", default=_DEFAULT_EPSILONS.get(channel)
            )
            if eps is None:
                raise ConfigurationError(f"stability.epsilons_{channel} is required")
            specs.append(PerturbationSpec(channel, eps))
        stability = StabilitySettings(tuple(specs), st.get_float("c_surrogate"))

    convergence_cells = None
    if "convergence" in sections:
        cells = section("convergence").get_float_list("n_cells")
        convergence_cells = tuple(int(c) for c in cells)

    normalized = _normalized_sections(
        grid, eta, delta, rho0_value, ramps, law_name, solver, window,
        sweep_deltas, stability, convergence_cells,
    )
    return ParsedConfig(scenario, sweep_deltas, stability, convergence_cells, normalized)


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _fmt_list(values) -> str:
    return ", ".join(_fmt(float(v)) for v in values)


def _fmt_rate(rate: RateFunction) -> str:
    if rate.times.size == 1:
        return _fmt(float(rate.values[0]))
    return ", ".join(
        f"{_fmt(float(t))}:{_fmt(float(v))}" for t, v in zip(rate.times, rate.values)
    )


def _normalized_sections(
    grid, eta, delta, rho0_value, ramps, law_name, solver, window,
    sweep_deltas, stability, convergence_cells,
):
    out = {
        "grid": {
            "x_min": _fmt(grid.x_min),
            "x_max": _fmt(grid.x_max),
            "n_cells": str(grid.n_cells),
        },
        "kernel": {"eta": _fmt(eta), "delta": _fmt(delta)},
        "initial": {"rho0": _fmt(rho0_value)},
        "ramp": {},
        "law": {"name": law_name},
        "solver": {
            "t_final": _fmt(solver.t_final),
            "cfl": _fmt(solver.cfl),
            "left_boundary": solver.left_boundary,
            "snapshot_stride": str(solver.snapshot_stride),
        },
        "functional": {"window": _fmt_list(window)},
    }
    if ramps.on_interval is not None:
        out["ramp"]["on_interval"] = _fmt_list(ramps.on_interval)
    out["ramp"]["q_on"] = _fmt_rate(ramps.q_on)
    if ramps.off_interval is not None:
        out["ramp"]["off_interval"] = _fmt_list(ramps.off_interval)
    out["ramp"]["q_off"] = _fmt_rate(ramps.q_off)
    out["ramp"]["rate_normalization"] = ramps.rate_normalization
    if solver.left_value is not None:
        out["solver"]["left_value"] = _fmt(solver.left_value)
    if sweep_deltas is not None:
        out["sweep"] = {"deltas": _fmt_list(sweep_deltas)}
    if stability is not None:
        st = {"channels": ", ".join(s.channel for s in stability.specs)}
        for spec in stability.specs:
            st[f"epsilons_{spec.channel}"] = _fmt_list(spec.magnitudes)
        if stability.c_surrogate is not None:
            st["c_surrogate"] = _fmt(stability.c_surrogate)
        out["stability"] = st
    if convergence_cells is not None:
        out["convergence"] = {"n_cells": ", ".join(str(c) for c in convergence_cells)}
    return out


def normalized_text(normalized: dict) -> str:
    """Render the normalized configuration as reparseable INI text."""
    lines = []
    for name in _KNOWN_KEYS:
        if name not in normalized or not normalized[name]:
            continue
        lines.append(f"[{name}]")
        for key in _KNOWN_KEYS[name]:
            if key in normalized[name]:
                lines.append(f"{key} = {normalized[name][key]}")
        lines.append("")
    return "\n".join(lines)
