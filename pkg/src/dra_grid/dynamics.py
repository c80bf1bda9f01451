"""Consensus integration of the allocation flow.

Runs two phases per scenario: first the active-energy strategies evolve
until their consensus outputs agree per PEV, then (with the active
allocation frozen) the reactive strategies plus one slack node per PEV.
State moves along the negative graph Laplacian of the node outputs, so
per-PEV sums are conserved to rounding; a forward-Euler step with
per-PEV step halving keeps every variable strictly inside its feasible
interval.

Step length, barrier weight and stopping tolerance are normalized at
run start: the first step moves no strategy more than 1% of its
interval width, the step stays below a Gershgorin bound on the output
Jacobian (half the explicit-Euler stability limit), and the spread
tolerance is relative to the initial output spread.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels_numpy as npk
from . import backend as backend_mod
from .constraints import reactive_envelope
from .errors import RangeError, ShapeError, StepCollapse
from .graph import StrategyGraph, build_graph
from .model import FleetState, Scenario
from .payoff import default_epsilon

#: Refuse telemetry allocations beyond this many float64 entries.
MAX_RECORD_FLOATS = 30_000_000


@dataclass(frozen=True, eq=False)
class PhaseHistory:
    """Telemetry sampled every record_stride steps plus the final step."""

    steps: np.ndarray  # (M,) step indices
    spreads: np.ndarray  # (M, N) per-PEV output spread
    states: np.ndarray  # (M, N, K) active rows, or (M, N, K+1) [y | slack]


@dataclass(frozen=True, eq=False)
class PhaseResult:
    """Outcome of one consensus phase.

    converged is true iff every PEV's final output spread is at or
    below eff_tolerance; conservation_drift is reported either way.
    """

    final_state: FleetState
    steps_taken: int
    final_spread: np.ndarray  # (N,)
    conservation_drift: np.ndarray  # (N,)
    converged: bool
    eff_tolerance: float
    step_length: float
    epsilon: float
    history: PhaseHistory


@dataclass(frozen=True, eq=False)
class DriftReport:
    """Per-PEV conservation drift |sum x - demand| and |sum y + slack|."""

    active: np.ndarray
    reactive: np.ndarray


class _ActiveArrays:
    """Scenario fields repacked as plain float64 arrays for the kernels."""

    def __init__(self, s: Scenario):
        fleet = s.fleet
        k = s.n_slots
        if fleet:
            self.t = np.vstack([p.slot_widths for p in fleet])
            self.xstar = np.vstack([p.preferred_rates for p in fleet])
        else:
            self.t = np.ones((0, k))
            self.xstar = np.zeros((0, k))
        self.soc_init = np.array([p.soc_init for p in fleet])
        self.soc_lower = np.array([p.soc_lower for p in fleet])
        self.soc_upper = np.array([p.soc_upper for p in fleet])
        self.cap = self.t * np.array([p.charger_power for p in fleet])[:, None]
        self.active_base = np.asarray(s.grid.active_base, dtype=np.float64)


def consensus_velocity(outputs: np.ndarray, g: StrategyGraph) -> np.ndarray:
    """State velocity -L @ outputs of one PEV's strategy nodes.

    Entries sum to zero up to rounding, which is what conserves the
    per-PEV resource totals.
    """
    outputs = np.asarray(outputs, dtype=np.float64)
    if outputs.shape != (g.n_nodes,):
        raise ShapeError(f"outputs shape {outputs.shape} != ({g.n_nodes},)")
    return -(g.laplacian @ outputs)


def conservation_check(state: FleetState, s: Scenario) -> DriftReport:
    """Absolute drift of both conserved quantities, per PEV."""
    demand = np.array([p.demand for p in s.fleet])
    active = np.abs(np.sum(state.x, axis=1) - demand)
    reactive = np.abs(np.sum(state.y, axis=1) + state.slack)
    return DriftReport(active=active, reactive=reactive)


def _resolve_epsilon(s: Scenario, raw_outputs: np.ndarray) -> float:
    if s.params.epsilon is not None:
        return float(s.params.epsilon)
    return default_epsilon(raw_outputs)


def _step_bounds(u0: np.ndarray, widths: np.ndarray, lap_max: float, slope_bound: float) -> float:
    """First-step length: 1% of interval width, capped by stability."""
    h_stab = 1.0 / (lap_max * slope_bound)
    speed = np.abs(u0)
    moving = speed > 0.0
    if not np.any(moving):
        return h_stab
    h_width = float(np.min(0.01 * widths[moving] / speed[moving]))
    return min(h_width, h_stab)


def _alloc_records(max_steps: int, stride: int, n_pev: int, n_cols: int):
    n_rec_max = max_steps // stride + 2
    if n_rec_max * n_pev * n_cols > MAX_RECORD_FLOATS:
        raise RangeError(
            "telemetry would exceed the record budget; raise record_stride "
            f"(max_steps={max_steps}, record_stride={stride})"
        )
    return (
        np.zeros(n_rec_max, dtype=np.int64),
        np.zeros((n_rec_max, n_pev)),
        np.zeros((n_rec_max, n_pev, n_cols)),
    )


def _active_slope_bound(arr: _ActiveArrays, x: np.ndarray, eps: float, mu: float, eta: float) -> float:
    """Gershgorin bound on the active output Jacobian at state x."""
    lo, hi = npk.active_interval(x, arr.soc_init, arr.soc_lower, arr.soc_upper, arr.cap)
    barrier_slope = 1.0 / (x - lo) + 1.0 / (hi - x)
    inv_t = 1.0 / arr.t
    col = np.sum(inv_t, axis=0)
    col_prev = np.concatenate((col[:1], col[:-1]))
    col_next = np.concatenate((col[1:], col[-1:]))
    c_self = (1.0 - mu) + mu * eta + 2.0 * mu * (1.0 - eta)
    c_cross = mu * eta + 2.0 * mu * (1.0 - eta)
    rho = (
        c_self * inv_t
        + eps * barrier_slope
        + c_cross * (col - inv_t)
        + mu * (1.0 - eta) * (col_prev + col_next)
    )
    return float(np.max(rho))


def _empty_phase_result(state: FleetState, n_cols: int) -> PhaseResult:
    return PhaseResult(
        final_state=state.copy(),
        steps_taken=0,
        final_spread=np.zeros(0),
        conservation_drift=np.zeros(0),
        converged=True,
        eff_tolerance=0.0,
        step_length=0.0,
        epsilon=0.0,
        history=PhaseHistory(
            steps=np.zeros(1, dtype=np.int64),
            spreads=np.zeros((1, 0)),
            states=np.zeros((1, 0, n_cols)),
        ),
    )


def _run_active(
    s: Scenario,
    state: FleetState,
    *,
    graph: str = "ring",
    backend: str | None = None,
    h_override: float | None = None,
    backtrack: bool = True,
) -> PhaseResult:
    arr = _ActiveArrays(s)
    params = s.params
    mu, eta = s.mean_commitment, params.eta
    x = state.x.copy()
    n_pev, n_slot = x.shape
    if n_pev == 0:
        return _empty_phase_result(state, n_slot)

    g = build_graph(n_slot, graph)
    lap = g.laplacian
    lap_max = float(np.linalg.eigvalsh(lap).max())

    raw, lo, hi = npk.active_outputs(
        x, arr.t, arr.xstar, arr.soc_init, arr.soc_lower, arr.soc_upper, arr.cap,
        arr.active_base, mu, eta, 0.0,
    )
    eps = _resolve_epsilon(s, raw)
    out0, _, _ = npk.active_outputs(
        x, arr.t, arr.xstar, arr.soc_init, arr.soc_lower, arr.soc_upper, arr.cap,
        arr.active_base, mu, eta, eps,
    )
    spread0 = float(np.max(out0.max(axis=1) - out0.min(axis=1)))
    tol = params.tolerance * spread0

    if h_override is not None:
        h = float(h_override)
    else:
        u0 = -(out0 @ lap)
        slope = _active_slope_bound(arr, x, eps, mu, eta)
        h = params.step_size * _step_bounds(u0, hi - lo, lap_max, slope)

    rec_steps, rec_spreads, rec_states = _alloc_records(
        params.max_steps, params.record_stride, n_pev, n_slot
    )
    final_spread = np.zeros(n_pev)
    kern = backend_mod.resolve(backend)
    status, fail_i, fail_k, steps, converged, n_rec = kern.active_phase(
        x, arr.t, arr.xstar, arr.soc_init, arr.soc_lower, arr.soc_upper, arr.cap,
        arr.active_base, mu, eta, eps, lap, h, tol,
        params.max_steps, params.record_stride, backtrack,
        rec_steps, rec_spreads, rec_states, final_spread,
    )
    if status == npk.STATUS_COLLAPSE:
        raise StepCollapse(
            f"active step collapsed for pev {fail_i}, slot {fail_k} at step {steps}",
            pev=fail_i,
            slot=fail_k,
        )
    new_state = FleetState(x=x, y=state.y.copy(), slack=state.slack.copy())
    drift = conservation_check(new_state, s).active
    return PhaseResult(
        final_state=new_state,
        steps_taken=int(steps),
        final_spread=final_spread,
        conservation_drift=drift,
        converged=bool(converged),
        eff_tolerance=float(tol),
        step_length=float(h),
        epsilon=float(eps),
        history=PhaseHistory(
            steps=rec_steps[:n_rec].copy(),
            spreads=rec_spreads[:n_rec].copy(),
            states=rec_states[:n_rec].copy(),
        ),
    )


def run_active_phase(
    s: Scenario,
    state: FleetState,
    *,
    graph: str = "ring",
    backend: str | None = None,
) -> PhaseResult:
    """Integrate active strategies to output consensus.

    Aggregate loads are refreshed from the whole fleet once per step
    (synchronous snapshot), so the run is deterministic and independent
    of PEV ordering up to rounding.
    """
    return _run_active(s, state, graph=graph, backend=backend)


def step_active(s: Scenario, state: FleetState, h: float) -> FleetState:
    """One synchronous Euler step of the active flow (library-level).

    Per PEV, the largest halving of h (down to h / 2**20) that keeps
    every slot strictly inside its interval is applied; per-PEV energy
    sums are unchanged up to rounding.
    """
    arr = _ActiveArrays(s)
    params = s.params
    mu, eta = s.mean_commitment, params.eta
    x = state.x.copy()
    n_pev, n_slot = x.shape
    lap = build_graph(n_slot, "ring").laplacian

    raw, _, _ = npk.active_outputs(
        x, arr.t, arr.xstar, arr.soc_init, arr.soc_lower, arr.soc_upper, arr.cap,
        arr.active_base, mu, eta, 0.0,
    )
    eps = _resolve_epsilon(s, raw)
    out, _, _ = npk.active_outputs(
        x, arr.t, arr.xstar, arr.soc_init, arr.soc_lower, arr.soc_upper, arr.cap,
        arr.active_base, mu, eta, eps,
    )
    vel = -(out @ lap)
    for i in range(n_pev):
        hh = float(h)
        committed = False
        bad_k = -1
        for _ in range(npk.MAX_HALVINGS + 1):
            cand = x[i] + hh * vel[i]
            ok, bad_k = npk._row_feasible(
                cand, arr.soc_init[i], arr.soc_lower[i], arr.soc_upper[i], arr.cap[i]
            )
            if ok:
                x[i] = cand
                committed = True
                break
            hh *= 0.5
        if not committed:
            raise StepCollapse(
                f"active step collapsed for pev {i}, slot {bad_k}", pev=i, slot=bad_k
            )
    return FleetState(x=x, y=state.y.copy(), slack=state.slack.copy())


def run_reactive_phase(
    s: Scenario,
    state: FleetState,
    *,
    graph: str = "ring",
    backend: str | None = None,
) -> PhaseResult:
    """Integrate reactive strategies plus slack with active rows frozen.

    Consensus runs over K+1 nodes per PEV; the envelope intervals come
    from the frozen active allocation, so the feasible set is static.
    """
    params = s.params
    mu, eta = s.mean_commitment, params.eta
    n_pev, n_slot = state.x.shape
    if n_pev == 0:
        return _empty_phase_result(state, n_slot + 1)

    envs = [reactive_envelope(pev, state.x[i]) for i, pev in enumerate(s.fleet)]
    qbar = np.vstack([env.per_slot_limit for env in envs])
    qtot = np.array([env.total_capacity for env in envs])
    reactive_base = np.asarray(s.grid.reactive_base, dtype=np.float64)

    z = np.hstack([state.y.copy(), state.slack.copy()[:, None]])
    g = build_graph(n_slot + 1, graph)
    lap = g.laplacian
    lap_max = float(np.linalg.eigvalsh(lap).max())

    raw, lo, hi = npk.reactive_outputs(z, qbar, qtot, reactive_base, mu, eta, 0.0)
    eps = _resolve_epsilon(s, raw)
    out0, _, _ = npk.reactive_outputs(z, qbar, qtot, reactive_base, mu, eta, eps)
    spread0 = float(np.max(out0.max(axis=1) - out0.min(axis=1)))
    tol = params.tolerance * spread0

    barrier_slope = 1.0 / (z - lo) + 1.0 / (hi - z)
    c_self = (1.0 - mu) + mu * eta + 2.0 * mu * (1.0 - eta)
    c_cross = (mu * eta + 2.0 * mu * (1.0 - eta)) * (n_pev - 1)
    c_neigh = mu * (1.0 - eta) * 2.0 * n_pev
    slope = float(np.max(eps * barrier_slope) + c_self + c_cross + c_neigh)
    u0 = -(out0 @ lap)
    h = params.step_size * _step_bounds(u0, hi - lo, lap_max, slope)

    rec_steps, rec_spreads, rec_states = _alloc_records(
        params.max_steps, params.record_stride, n_pev, n_slot + 1
    )
    final_spread = np.zeros(n_pev)
    kern = backend_mod.resolve(backend)
    status, fail_i, fail_k, steps, converged, n_rec = kern.reactive_phase(
        z, qbar, qtot, reactive_base, mu, eta, eps, lap, h, tol,
        params.max_steps, params.record_stride, True,
        rec_steps, rec_spreads, rec_states, final_spread,
    )
    if status == npk.STATUS_COLLAPSE:
        raise StepCollapse(
            f"reactive step collapsed for pev {fail_i}, node {fail_k} at step {steps}",
            pev=fail_i,
            slot=fail_k,
        )
    new_state = FleetState(x=state.x.copy(), y=z[:, :n_slot].copy(), slack=z[:, n_slot].copy())
    drift = conservation_check(new_state, s).reactive
    return PhaseResult(
        final_state=new_state,
        steps_taken=int(steps),
        final_spread=final_spread,
        conservation_drift=drift,
        converged=bool(converged),
        eff_tolerance=float(tol),
        step_length=float(h),
        epsilon=float(eps),
        history=PhaseHistory(
            steps=rec_steps[:n_rec].copy(),
            spreads=rec_spreads[:n_rec].copy(),
            states=rec_states[:n_rec].copy(),
        ),
    )
