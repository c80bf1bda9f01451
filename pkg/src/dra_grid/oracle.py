"""Brute-force equilibrium solver for desk-scale single-PEV instances.

Ground truth for the dynamics tests: instead of integrating the flow,
the rest point is characterized directly as "all consensus outputs
equal some level, and the strategies sum to the demand". The level is
found by an outer bisection; for each candidate level the per-slot
strategies are found by inner bisections (the consensus output is
continuous and strictly increasing in the slot's own strategy, from
-inf at the lower bound to +inf at the upper), swept to a fixed point
because neighbouring slots couple through the aggregate load.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constraints import active_bounds, barrier
from .dynamics import _run_active
from .errors import NoRoot, MultiRoot, SizeError
from .model import FleetState, GridProfile, PevSpec, Scenario, SimParams
from .payoff import AggregateLoads, active_payoff, default_epsilon

#: Bisection depth; 2**-80 interval reduction is beyond float64 anyway.
BISECT_ITERS = 80

MAX_SWEEPS = 400
DESK_SCALE_LIMIT = 6


@dataclass(frozen=True, eq=False)
class EquilibriumSolution:
    """Active-strategy rest point of one PEV.

    residual is the worst |output - consensus_value| over slots; it is
    reported, never hidden.
    """

    x_star: np.ndarray
    consensus_value: float
    residual: float


def _consensus_output(
    pev: PevSpec,
    grid: GridProfile,
    others: np.ndarray,
    mu: float,
    eta: float,
    eps: float,
    row: np.ndarray,
    k: int,
    v: float,
) -> float:
    """Output of slot k (1-based) with row[k-1] replaced by v."""
    trial = row.copy()
    trial[k - 1] = v
    active = grid.active_base + others + trial / pev.slot_widths
    loads = AggregateLoads(active=active, reactive=grid.reactive_base)
    bounds = active_bounds(pev, k, trial)
    return eps * barrier(v, bounds) - active_payoff(pev, k, v, loads, mu, eta)


def _slot_root(pev, grid, others, mu, eta, eps, row, k, level) -> float:
    """Strategy value where slot k's output reaches the given level.

    Clamped to the interval ends when the level is unreachable within
    float resolution (the outer bisection then moves the level).
    """
    bounds = active_bounds(pev, k, row)
    delta = 1e-13 * bounds.width
    lo, hi = bounds.lower + delta, bounds.upper - delta

    def f(v: float) -> float:
        return _consensus_output(pev, grid, others, mu, eta, eps, row, k, v) - level

    if f(lo) >= 0.0:
        return lo
    if f(hi) <= 0.0:
        return hi
    for _ in range(BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        if f(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _solve_rows_for_level(pev, grid, others, mu, eta, eps, x0, level) -> np.ndarray:
    """Gauss-Seidel sweeps of per-slot bisections to a fixed point."""
    row = x0.copy()
    n = len(row)
    scale = max(1.0, float(np.max(np.abs(row))))
    for _ in range(MAX_SWEEPS):
        worst = 0.0
        for k in range(1, n + 1):
            new = _slot_root(pev, grid, others, mu, eta, eps, row, k, level)
            worst = max(worst, abs(new - row[k - 1]))
            row[k - 1] = new
        scale = max(1.0, float(np.max(np.abs(row))))
        if worst <= 1e-13 * scale:
            break
    return row


def _check_single_root(pev, grid, others, mu, eta, eps, row, level) -> None:
    """Grid-scan every slot's output for extra crossings of the level."""
    for k in range(1, len(row) + 1):
        bounds = active_bounds(pev, k, row)
        delta = 1e-9 * bounds.width
        samples = np.linspace(bounds.lower + delta, bounds.upper - delta, 257)
        values = np.array(
            [_consensus_output(pev, grid, others, mu, eta, eps, row, k, v) for v in samples]
        )
        signs = np.sign(values - level)
        crossings = int(np.sum(signs[:-1] * signs[1:] < 0))
        if crossings > 1:
            raise MultiRoot(f"slot {k}: output crosses the consensus level {crossings} times")


def solve_single_pev(
    pev: PevSpec,
    grid: GridProfile,
    params: SimParams,
    others_fixed: np.ndarray | None = None,
) -> EquilibriumSolution:
    """Equilibrium of a single PEV against a fixed aggregate background.

    others_fixed is the other participants' active-power contribution
    per slot (W), treated as a constant inside the aggregate load.
    """
    n = pev.n_slots
    if n > DESK_SCALE_LIMIT:
        raise SizeError(f"brute-force solver is desk-scale only (K <= {DESK_SCALE_LIMIT}), got {n}")
    others = np.zeros(n) if others_fixed is None else np.asarray(others_fixed, dtype=np.float64)
    if others.shape != (n,):
        raise SizeError(f"others_fixed must have {n} entries")

    mu, eta = pev.commitment, params.eta
    demand = pev.demand
    x0 = np.full(n, demand / n)

    if params.epsilon is not None:
        eps = float(params.epsilon)
    else:
        active = grid.active_base + others + x0 / pev.slot_widths
        loads = AggregateLoads(active=active, reactive=grid.reactive_base)
        raw = np.array([active_payoff(pev, k, x0[k - 1], loads, mu, eta) for k in range(1, n + 1)])
        eps = default_epsilon(raw)

    def total_at(level: float) -> tuple[float, np.ndarray]:
        row = _solve_rows_for_level(pev, grid, others, mu, eta, eps, x0, level)
        return float(np.sum(row)), row

    out0 = np.array(
        [
            _consensus_output(pev, grid, others, mu, eta, eps, x0, k, x0[k - 1])
            for k in range(1, n + 1)
        ]
    )
    center = float(np.mean(out0))
    span = max(1.0, float(np.ptp(out0)))
    lo_level = hi_level = center
    lo_total, _ = total_at(center)
    hi_total = lo_total
    for _ in range(80):
        if lo_total <= demand <= hi_total:
            break
        if lo_total > demand:
            lo_level = center - span
            lo_total, _ = total_at(lo_level)
        if hi_total < demand:
            hi_level = center + span
            hi_total, _ = total_at(hi_level)
        span *= 2.0
    else:
        raise NoRoot("could not bracket the consensus level")

    row = x0
    for _ in range(BISECT_ITERS):
        mid = 0.5 * (lo_level + hi_level)
        total, row = total_at(mid)
        if total < demand:
            lo_level = mid
        else:
            hi_level = mid
    level = 0.5 * (lo_level + hi_level)
    _, row = total_at(level)

    _check_single_root(pev, grid, others, mu, eta, eps, row, level)
    outputs = np.array(
        [
            _consensus_output(pev, grid, others, mu, eta, eps, row, k, row[k - 1])
            for k in range(1, n + 1)
        ]
    )
    residual = float(np.max(np.abs(outputs - level)))
    return EquilibriumSolution(x_star=row, consensus_value=level, residual=residual)


def reference_integrate(s: Scenario, state: FleetState, h_fine: float) -> FleetState:
    """Fixed-step active-phase integration without backtracking.

    Cross-validates the adaptive main loop: same stopping rule, but the
    step length is supplied by the caller and a step that would leave
    the feasible box raises instead of shrinking.
    """
    result = _run_active(s, state, h_override=h_fine, backtrack=False)
    return result.final_state
