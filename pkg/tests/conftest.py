"""Shared fixtures: the bundled reference scenario and cheap variants."""

import time
from dataclasses import replace
from functools import partial

import pytest

from rampflow import RampConfig, RateFunction, SolverConfig, VelocityLaw
from rampflow.meshkernel import Grid
from rampflow.scenario import Scenario, constant_profile, paper_setup_scenario, run_scenario


@pytest.fixture(scope="session")
def paper_scenario():
    return paper_setup_scenario()


@pytest.fixture(scope="session")
def paper_run(paper_scenario):
    """The reference run with per-step snapshots, plus its wall time."""
    t0 = time.perf_counter()
    traj = run_scenario(paper_scenario)
    return traj, time.perf_counter() - t0


def make_small_scenario(
    n_cells=100,
    t_final=1.5,
    delta=0.1,
    eta=0.5,
    q_on=1.2,
    rate_normalization="total",
    with_ramp=True,
    rho0=0.3,
    snapshot_stride=1,
    cfl=0.9,
):
    """Coarse, short variant of the reference setup for unit tests."""
    ramps = (
        RampConfig(
            on_interval=(1.0, 1.1),
            q_on=RateFunction.constant(q_on),
            rate_normalization=rate_normalization,
        )
        if with_ramp
        else RampConfig.none()
    )
    return Scenario(
        grid=Grid(-1.0, 4.0, n_cells),
        eta=eta,
        delta=delta,
        ramps=ramps,
        law=VelocityLaw.linear(),
        solver=SolverConfig(
            t_final=t_final,
            cfl=cfl,
            left_boundary="dirichlet",
            left_value=rho0,
            snapshot_stride=snapshot_stride,
        ),
        window=(-1.0, 4.0),
        rho0=partial(constant_profile, value=rho0),
    )


@pytest.fixture
def small_scenario():
    return make_small_scenario()
