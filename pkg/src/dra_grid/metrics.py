"""Grid-side and PEV-side outcome metrics.

Smoothness is the sum of squared second differences of a load profile
(what the curvature term of the payoff penalizes); flattening is the
population variance of the profile (what the level term penalizes).
Both are invariant under adding a constant to every slot.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import PhaseResult
from .errors import BoundViolation, SizeError
from .model import FleetState, PevSpec, Scenario
from .payoff import AggregateLoads, aggregate_loads


@dataclass(frozen=True, eq=False)
class RunReport:
    """Everything a finished run reports to callers and serializers."""

    soc_trajectories: np.ndarray  # (N, K+1) Wh, prefix sums from soc_init
    final_loads: AggregateLoads
    baseline_loads: AggregateLoads
    smoothness_with: float
    smoothness_without: float
    variance_with: float
    variance_without: float
    phase_results: tuple[PhaseResult, PhaseResult]


def soc_trajectory(pev: PevSpec, x_row: np.ndarray) -> np.ndarray:
    """State of charge after each slot: prefix sums from soc_init.

    Raises BoundViolation if any prefix leaves [soc_lower, soc_upper];
    the dynamics' interval bookkeeping should make that impossible.
    """
    x_row = np.asarray(x_row, dtype=np.float64)
    out = np.concatenate(([pev.soc_init], pev.soc_init + np.cumsum(x_row)))
    if np.any(out < pev.soc_lower) or np.any(out > pev.soc_upper):
        bad = int(np.argmax((out < pev.soc_lower) | (out > pev.soc_upper)))
        raise BoundViolation(
            f"SoC {out[bad]:g} Wh after slot {bad} leaves "
            f"[{pev.soc_lower:g}, {pev.soc_upper:g}]"
        )
    return out


def smoothness(loads: np.ndarray) -> float:
    """Sum of squared second differences over interior slots.

    Zero exactly for affine profiles.
    """
    loads = np.asarray(loads, dtype=np.float64)
    if len(loads) < 3:
        raise SizeError(f"smoothness needs at least 3 slots, got {len(loads)}")
    second = 2.0 * loads[1:-1] - loads[:-2] - loads[2:]
    return float(np.sum(second**2))


def flattening_variance(loads: np.ndarray) -> float:
    """Population variance of a load profile."""
    return float(np.var(np.asarray(loads, dtype=np.float64)))


def consensus_spread(outputs: np.ndarray) -> float:
    """max - min of an output vector; zero exactly at consensus."""
    outputs = np.asarray(outputs, dtype=np.float64)
    return float(outputs.max() - outputs.min())


def build_report(s: Scenario, active: PhaseResult, reactive: PhaseResult) -> RunReport:
    """Assemble the run report from both finished phases.

    "with" metrics come from the final fleet state, "without" from the
    empty-fleet baseline (the grid profile itself); both pairs refer to
    the active power profile.
    """
    final_state = reactive.final_state
    final = aggregate_loads(s.grid, list(s.fleet), final_state)
    empty = FleetState(
        x=np.zeros((0, s.n_slots)), y=np.zeros((0, s.n_slots)), slack=np.zeros(0)
    )
    baseline = aggregate_loads(s.grid, [], empty)
    if s.fleet:
        soc = np.vstack(
            [soc_trajectory(pev, final_state.x[i]) for i, pev in enumerate(s.fleet)]
        )
    else:
        soc = np.zeros((0, s.n_slots + 1))
    return RunReport(
        soc_trajectories=soc,
        final_loads=final,
        baseline_loads=baseline,
        smoothness_with=smoothness(final.active),
        smoothness_without=smoothness(baseline.active),
        variance_with=flattening_variance(final.active),
        variance_without=flattening_variance(baseline.active),
        phase_results=(active, reactive),
    )
