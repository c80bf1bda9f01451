"""Aggregate grid loads and the per-node outputs the dynamics equalize.

Two quantities exist per strategy node:

* the *payoff* as seen by the PEV owner: it falls with deviation from
  the preferred rate and with the aggregate load level (flattening) and
  curvature (smoothing);
* the *consensus output* integrated by the dynamics: the barrier-
  augmented marginal cost, i.e. epsilon * barrier - payoff. It rises
  with the node's own state, which makes equal outputs an attracting
  rest point of the Laplacian flow while the barrier term repels the
  interval ends.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constraints import BoundInterval, barrier
from .errors import ShapeError
from .model import FleetState, GridProfile, PevSpec

#: Barrier weight used when the initial payoffs are identically zero
#: (e.g. zero mean commitment starting on the preferred profile).
EPSILON_FLOOR = 1e-2


@dataclass(frozen=True, eq=False)
class AggregateLoads:
    """Total grid load per slot with the fleet connected (W / VAr)."""

    active: np.ndarray
    reactive: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "active", np.asarray(self.active, dtype=np.float64))
        object.__setattr__(self, "reactive", np.asarray(self.reactive, dtype=np.float64))


def aggregate_loads(grid: GridProfile, fleet: list[PevSpec], state: FleetState) -> AggregateLoads:
    """Baseline plus every PEV's contribution, slot by slot.

    Active strategies are energies, so each contributes x / t watts;
    reactive strategies are already powers.
    """
    k = grid.n_slots
    if state.x.shape != (len(fleet), k):
        raise ShapeError(f"state shape {state.x.shape} != ({len(fleet)}, {k})")
    active = grid.active_base.copy()
    reactive = grid.reactive_base.copy()
    for i, pev in enumerate(fleet):
        active += state.x[i] / pev.slot_widths
        reactive += state.y[i]
    return AggregateLoads(active=active, reactive=reactive)


def extended_load(loads: np.ndarray, k: int) -> tuple[float, float, float]:
    """(previous, current, next) load around 1-based slot k.

    The window ends replicate their edge value, so the second
    difference degrades to a first difference there.
    """
    loads = np.asarray(loads, dtype=np.float64)
    n = len(loads)
    prev = loads[k - 2] if k > 1 else loads[0]
    nxt = loads[k] if k < n else loads[n - 1]
    return float(prev), float(loads[k - 1]), float(nxt)


def second_difference(loads: np.ndarray, k: int) -> float:
    """2*L_k - L_{k-1} - L_{k+1} with edge replication, 1-based k."""
    prev, cur, nxt = extended_load(loads, k)
    return 2.0 * cur - prev - nxt


def active_payoff(
    pev: PevSpec,
    k: int,
    x_ik: float,
    loads: AggregateLoads,
    mean_mu: float,
    eta: float,
) -> float:
    """Owner payoff of active strategy k at value x_ik (1-based k).

    Penalizes deviation from the preferred rate (weight 1 - mu), the
    aggregate load level (mu * eta) and its discrete curvature
    (mu * (1 - eta)).
    """
    t_k = float(pev.slot_widths[k - 1])
    deviation = (x_ik - float(pev.preferred_rates[k - 1])) / t_k
    level = float(loads.active[k - 1])
    curvature = second_difference(loads.active, k)
    return -(1.0 - mean_mu) * deviation - mean_mu * eta * level - mean_mu * (1.0 - eta) * curvature


def reactive_payoff(
    k: int,
    y_ik: float,
    loads: AggregateLoads,
    mean_mu: float,
    eta: float,
) -> float:
    """Owner payoff of reactive strategy k at value y_ik (1-based k)."""
    level = float(loads.reactive[k - 1])
    curvature = second_difference(loads.reactive, k)
    return -(1.0 - mean_mu) * y_ik - mean_mu * eta * level - mean_mu * (1.0 - eta) * curvature


def modified_active_output(
    pev: PevSpec,
    k: int,
    x_ik: float,
    bounds: BoundInterval,
    loads: AggregateLoads,
    mean_mu: float,
    eta: float,
    epsilon: float,
) -> float:
    """Barrier-augmented payoff: active_payoff + epsilon * barrier."""
    return active_payoff(pev, k, x_ik, loads, mean_mu, eta) + epsilon * barrier(x_ik, bounds)


def modified_reactive_output(
    k: int,
    y_ik: float,
    bounds: BoundInterval,
    loads: AggregateLoads,
    mean_mu: float,
    eta: float,
    epsilon: float,
) -> float:
    """Barrier-augmented payoff: reactive_payoff + epsilon * barrier.

    The slack node has no payoff; its output is epsilon * barrier of
    the slack value over (-Q, Q).
    """
    return reactive_payoff(k, y_ik, loads, mean_mu, eta) + epsilon * barrier(y_ik, bounds)


def active_consensus_output(
    pev: PevSpec,
    k: int,
    x_ik: float,
    bounds: BoundInterval,
    loads: AggregateLoads,
    mean_mu: float,
    eta: float,
    epsilon: float,
) -> float:
    """Marginal-cost signal equalized by the active dynamics.

    epsilon * barrier - active_payoff: strictly increasing in the
    node's own state, -inf at the lower bound, +inf at the upper, so
    the Laplacian descent both equalizes interior costs and stays
    inside the box.
    """
    return epsilon * barrier(x_ik, bounds) - active_payoff(pev, k, x_ik, loads, mean_mu, eta)


def reactive_consensus_output(
    k: int,
    y_ik: float,
    bounds: BoundInterval,
    loads: AggregateLoads,
    mean_mu: float,
    eta: float,
    epsilon: float,
) -> float:
    """Marginal-cost signal equalized by the reactive dynamics."""
    return epsilon * barrier(y_ik, bounds) - reactive_payoff(k, y_ik, loads, mean_mu, eta)


def slack_consensus_output(s: float, bounds: BoundInterval, epsilon: float) -> float:
    """Slack node output: pure barrier (the slack carries no payoff)."""
    return epsilon * barrier(s, bounds)


def default_epsilon(payoff_values: np.ndarray) -> float:
    """Auto barrier weight: 1e-2 of the largest initial |payoff|.

    Keeps the barrier negligible away from the bounds at the problem's
    own scale; falls back to EPSILON_FLOOR when every payoff is zero.
    """
    scale = float(np.max(np.abs(payoff_values))) if len(payoff_values) else 0.0
    if scale == 0.0:
        return EPSILON_FLOOR
    return 1e-2 * scale
