"""Distributed resource allocation for PEV fleet charging.

A deterministic simulator that coordinates the charging/discharging of
a plug-in electric vehicle fleet against a grid load profile by driving
per-slot strategy variables to output consensus over a communication
graph, under hard state-of-charge, charger-power and reactive-envelope
constraints enforced by a logarithmic barrier.
"""

from .constraints import (
    BoundInterval,
    ReactiveEnvelope,
    active_bounds,
    barrier,
    reactive_envelope,
    slack_bounds,
)
from .dynamics import (
    DriftReport,
    PhaseResult,
    consensus_velocity,
    conservation_check,
    run_active_phase,
    run_reactive_phase,
    step_active,
)
from .errors import (
    BoundViolation,
    CollapsedInterval,
    DomainError,
    DraGridError,
    InfeasibleDemand,
    MultiRoot,
    NoRoot,
    ParseError,
    RangeError,
    ShapeError,
    SizeError,
    StepCollapse,
)
from .graph import StrategyGraph, complete_graph, is_connected, quadratic_form, ring_graph
from .metrics import RunReport, build_report, consensus_spread, smoothness, soc_trajectory
from .metrics_io import (
    SweepGrid,
    bundled_scenario,
    bundled_scenario_path,
    load_scenario,
    run_scenario,
    run_sweep,
    save_scenario,
    serialize_scenario,
)
from .model import (
    FleetState,
    GridProfile,
    PevSpec,
    Scenario,
    SimParams,
    init_fleet_state,
    validate_scenario,
)
from .oracle import EquilibriumSolution, reference_integrate, solve_single_pev
from .payoff import (
    AggregateLoads,
    active_consensus_output,
    active_payoff,
    aggregate_loads,
    extended_load,
    modified_active_output,
    modified_reactive_output,
    reactive_consensus_output,
    reactive_payoff,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
