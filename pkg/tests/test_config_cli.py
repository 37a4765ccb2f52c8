"""Scenario-file parsing, validation errors, CLI commands, reproducibility."""

import json

import numpy as np
import pytest

from rampflow import ConfigurationError
from rampflow.cli import main
from rampflow.config import normalized_text, parse_config, resolve_config_path

TINY_CFG = """\
[grid]
x_min = -1.0
x_max = 4.0
n_cells = 100

[kernel]
eta = 0.5
delta = 0.1

[initial]
rho0 = 0.3

[ramp]
on_interval = 1.0, 1.1
q_on = 1.2
rate_normalization = total

[solver]
t_final = 0.5

[sweep]
deltas = -0.2, 0.0, 0.2

[stability]
channels = kernel_delta, q_on
epsilons_kernel_delta = 0.05, 0.1
epsilons_q_on = 0.02, 0.04

[convergence]
n_cells = 50, 100
"""


@pytest.fixture
def tiny_cfg(tmp_path):
    path = tmp_path / "tiny.cfg"
    path.write_text(TINY_CFG, encoding="utf-8")
    return path


def write_cfg(tmp_path, text, name="case.cfg"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


class TestParseBundled:
    def test_paper_scenario_values(self):
        parsed = parse_config(resolve_config_path("paper_s4"))
        sc = parsed.scenario
        assert (sc.grid.x_min, sc.grid.x_max, sc.grid.n_cells) == (-1.0, 4.0, 1000)
        assert (sc.eta, sc.delta) == (0.5, 0.1)
        assert sc.ramps.on_interval == (1.0, 1.1)
        assert sc.ramps.q_on(0.0) == 1.2
        assert sc.ramps.rate_normalization == "total"
        assert sc.solver.t_final == 6.0
        assert sc.solver.cfl == 0.9
        assert sc.solver.left_value == 0.3
        assert sc.window == (-1.0, 4.0)
        assert parsed.sweep_deltas == tuple(np.round(np.linspace(-0.5, 0.5, 11), 10))
        assert parsed.convergence_cells == (250, 500, 1000)
        channels = [s.channel for s in parsed.stability.specs]
        assert channels == ["kernel_delta", "q_on", "initial_datum"]

    def test_unknown_bundled_name(self):
        with pytest.raises(ConfigurationError, match="bundled"):
            resolve_config_path("paper_s5")


class TestDefaults:
    def test_cfl_default_applied_and_echoed(self, tmp_path):
        text = TINY_CFG.replace("[sweep]", "[functional]\nwindow = 0.0, 2.0\n\n[sweep]")
        parsed = parse_config(write_cfg(tmp_path, text))
        assert parsed.scenario.solver.cfl == 0.9
        assert parsed.normalized["solver"]["cfl"] == "0.9"
        assert parsed.scenario.window == (0.0, 2.0)

    def test_window_defaults_to_domain(self, tiny_cfg):
        parsed = parse_config(tiny_cfg)
        assert parsed.scenario.window == (-1.0, 4.0)

    def test_left_value_defaults_to_initial_density(self, tiny_cfg):
        parsed = parse_config(tiny_cfg)
        assert parsed.scenario.solver.left_value == 0.3

    def test_stability_epsilons_default(self, tmp_path):
        text = TINY_CFG.replace(
            "channels = kernel_delta, q_on\nepsilons_kernel_delta = 0.05, 0.1\nepsilons_q_on = 0.02, 0.04",
            "channels = initial_datum",
        )
        parsed = parse_config(write_cfg(tmp_path, text))
        assert parsed.stability.specs[0].magnitudes == (0.0125, 0.025, 0.05, 0.1)


class TestValidationErrors:
    def test_offcenter_kernel_named(self, tmp_path):
        text = TINY_CFG.replace("delta = 0.1", "delta = 0.7")
        with pytest.raises(ConfigurationError, match=r"kernel.delta must lie in \[-eta, eta\]"):
            parse_config(write_cfg(tmp_path, text))

    def test_missing_required_key_named(self, tmp_path):
        text = TINY_CFG.replace("t_final = 0.5\n", "")
        with pytest.raises(ConfigurationError, match="solver.t_final"):
            parse_config(write_cfg(tmp_path, text))

    def test_unknown_key_rejected(self, tmp_path):
        text = TINY_CFG.replace("cfl_ignored", "x").replace("[solver]", "[solver]\nviscosity = 1")
        with pytest.raises(ConfigurationError, match="solver.viscosity"):
            parse_config(write_cfg(tmp_path, text))

    def test_unknown_section_rejected(self, tmp_path):
        with pytest.raises(ConfigurationError, match=r"\[plotting\]"):
            parse_config(write_cfg(tmp_path, TINY_CFG + "\n[plotting]\nstyle = dark\n"))

    def test_type_error_named(self, tmp_path):
        text = TINY_CFG.replace("n_cells = 100", "n_cells = many")
        with pytest.raises(ConfigurationError, match="grid.n_cells"):
            parse_config(write_cfg(tmp_path, text))

    def test_bad_interval_length(self, tmp_path):
        text = TINY_CFG.replace("on_interval = 1.0, 1.1", "on_interval = 1.0, 1.1, 1.2")
        with pytest.raises(ConfigurationError, match="ramp.on_interval"):
            parse_config(write_cfg(tmp_path, text))

    def test_sweep_delta_out_of_range(self, tmp_path):
        text = TINY_CFG.replace("deltas = -0.2, 0.0, 0.2", "deltas = 0.0, 0.9")
        with pytest.raises(ConfigurationError, match="outside"):
            parse_config(write_cfg(tmp_path, text))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigurationError):
            parse_config(tmp_path / "absent.cfg")


class TestRateSyntax:
    def test_piecewise_rate(self, tmp_path):
        text = TINY_CFG.replace("q_on = 1.2", "q_on = 0:1.2, 0.25:0.4")
        parsed = parse_config(write_cfg(tmp_path, text))
        q = parsed.scenario.ramps.q_on
        assert q(0.1) == 1.2
        assert q(0.3) == 0.4

    def test_negative_rate_rejected(self, tmp_path):
        text = TINY_CFG.replace("q_on = 1.2", "q_on = -1.0")
        with pytest.raises(ConfigurationError, match="ramp.q_on"):
            parse_config(write_cfg(tmp_path, text))


class TestNormalizedEcho:
    def test_round_trip_reparses_identically(self, tiny_cfg, tmp_path):
        parsed = parse_config(tiny_cfg)
        echoed = write_cfg(tmp_path, normalized_text(parsed.normalized), name="norm.cfg")
        reparsed = parse_config(echoed)
        assert reparsed.normalized == parsed.normalized
        assert reparsed.scenario.grid == parsed.scenario.grid
        assert reparsed.scenario.solver == parsed.scenario.solver
        assert reparsed.sweep_deltas == parsed.sweep_deltas


class TestCliCommands:
    def test_constants_prints_reference_values(self, capsys):
        assert main(["constants", "--config", "paper_s4", "--out", "/tmp/rf_const"]) == 0
        out = capsys.readouterr().out
        assert "L_vel=2.0" in out
        assert "Q_T=2.4" in out
        assert "H=10.4" in out

    def test_simulate_writes_expected_files(self, tiny_cfg, tmp_path):
        out = tmp_path / "sim"
        assert main(["simulate", "--config", str(tiny_cfg), "--out", str(out)]) == 0
        for name in (
            "snapshots.csv",
            "diagnostics.csv",
            "functional_report.csv",
            "kernel_convective.csv",
            "kernel_reactive.csv",
            "run_metadata.json",
            "normalized.cfg",
        ):
            assert (out / name).is_file(), name
        header = (out / "diagnostics.csv").read_text().splitlines()[0]
        assert header == "step,t,dt,tv,mass,flux_in,flux_out,onramp_inflow,offramp_outflow"
        meta = json.loads((out / "run_metadata.json").read_text())
        assert meta["command"] == "simulate"
        assert meta["constants"]["L_vel"] == 2.0

    def test_sweep_csv_schema(self, tiny_cfg, tmp_path):
        out = tmp_path / "sw"
        assert main(["sweep", "--config", str(tiny_cfg), "--out", str(out), "--workers", "1"]) == 0
        lines = (out / "sweep.csv").read_text().splitlines()
        assert lines[0] == "delta,J,Psi,tv_final"
        assert len(lines) == 4  # three deltas

    def test_stability_csv_schema(self, tiny_cfg, tmp_path):
        out = tmp_path / "st"
        assert main(["stability", "--config", str(tiny_cfg), "--out", str(out), "--workers", "1"]) == 0
        lines = (out / "stability.csv").read_text().splitlines()
        assert lines[0] == "channel,epsilon,input_distance,output_distance,ratio"
        assert len(lines) == 5  # 2 channels x 2 epsilons
        meta = json.loads((out / "run_metadata.json").read_text())
        assert set(meta["channels"]) == {"kernel_delta", "q_on"}

    def test_convergence_csv_schema(self, tiny_cfg, tmp_path):
        out = tmp_path / "cv"
        assert main(["convergence", "--config", str(tiny_cfg), "--out", str(out), "--workers", "1"]) == 0
        lines = (out / "convergence.csv").read_text().splitlines()
        assert lines[0] == "dx,l1_error,observed_order"
        assert len(lines) == 3

    def test_config_error_exit_code(self, tmp_path, capsys):
        bad = write_cfg(tmp_path, TINY_CFG.replace("delta = 0.1", "delta = 0.9"))
        assert main(["simulate", "--config", str(bad), "--out", str(tmp_path / "x")]) == 2
        assert "error: config:" in capsys.readouterr().err

    def test_missing_stability_section(self, tmp_path):
        text = TINY_CFG.split("[stability]")[0]
        cfg = write_cfg(tmp_path, text)
        assert main(["stability", "--config", str(cfg), "--out", str(tmp_path / "y")]) == 2


class TestReproducibility:
    @pytest.mark.parametrize("command", ["simulate", "sweep", "stability", "convergence"])
    def test_reruns_byte_identical(self, command, tiny_cfg, tmp_path):
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        for out in (out_a, out_b):
            args = [command, "--config", str(tiny_cfg), "--out", str(out), "--workers", "1"]
            assert main(args) == 0
        csvs = sorted(p.name for p in out_a.glob("*.csv"))
        assert csvs
        for name in csvs:
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes(), name

    def test_normalized_config_reproduces_run(self, tiny_cfg, tmp_path):
        out_a = tmp_path / "orig"
        assert main(["simulate", "--config", str(tiny_cfg), "--out", str(out_a)]) == 0
        out_b = tmp_path / "from_norm"
        assert main(["simulate", "--config", str(out_a / "normalized.cfg"), "--out", str(out_b)]) == 0
        for name in ("snapshots.csv", "diagnostics.csv"):
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes()
