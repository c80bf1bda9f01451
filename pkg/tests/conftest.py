import numpy as np
import pytest

from dra_grid import (
    build_report,
    init_fleet_state,
    run_active_phase,
    run_reactive_phase,
)
from dra_grid.metrics_io import bundled_scenario

K3_NAMES = ("oracle_flat_k3", "oracle_ramp_k3", "oracle_step_k3")


def pev_spec(**overrides):
    """Hand-built PevSpec with the reference parameters (K=10, 1 h slots)."""
    from dra_grid.model import PevSpec

    fields = dict(
        soc_init=15500.0,
        soc_target=16000.0,
        soc_upper=18500.0,
        soc_lower=13500.0,
        charger_power=3000.0,
        slot_widths=np.ones(10),
        commitment=0.5,
        preferred_rates=np.full(10, 50.0),
    )
    fields.update(overrides)
    return PevSpec(**fields)


def run_both_phases(s):
    state = init_fleet_state(s)
    active = run_active_phase(s, state)
    reactive = run_reactive_phase(s, active.final_state)
    return active, reactive


@pytest.fixture(scope="session")
def six_scenario():
    return bundled_scenario("sec6_six_pev")


@pytest.fixture(scope="session")
def single_scenario():
    return bundled_scenario("sec6_single_pev")


@pytest.fixture(scope="session")
def six_run(six_scenario):
    active, reactive = run_both_phases(six_scenario)
    return six_scenario, active, reactive, build_report(six_scenario, active, reactive)


@pytest.fixture(scope="session")
def single_run(single_scenario):
    active, reactive = run_both_phases(single_scenario)
    return single_scenario, active, reactive, build_report(single_scenario, active, reactive)


@pytest.fixture(scope="session")
def k3_runs():
    """The three desk-scale single-PEV instances with both phases run."""
    out = {}
    for name in K3_NAMES:
        s = bundled_scenario(name)
        active, reactive = run_both_phases(s)
        out[name] = (s, active, reactive)
    return out
