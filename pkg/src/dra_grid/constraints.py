"""Feasible intervals for every strategy variable, plus the barrier.

Active-energy bounds couple the slots through the running
state-of-charge prefix sum, so they are recomputed from the current
strategy row on every evaluation. Reactive limits derive from the
charger's apparent-power circle at the frozen active strategies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CollapsedInterval, DomainError
from .model import PevSpec


@dataclass(frozen=True)
class BoundInterval:
    """Open feasible interval (lower, upper); collapse is an error."""

    lower: float
    upper: float

    def __post_init__(self):
        if not self.lower < self.upper:
            raise CollapsedInterval(f"interval [{self.lower}, {self.upper}] has no interior")

    @property
    def width(self) -> float:
        return self.upper - self.lower

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lower + self.upper)

    def contains(self, v: float) -> bool:
        return self.lower < v < self.upper


@dataclass(frozen=True, eq=False)
class ReactiveEnvelope:
    """Per-slot reactive limits q̄_k >= 0 (VAr) and their total Q."""

    per_slot_limit: np.ndarray
    total_capacity: float

    def __post_init__(self):
        object.__setattr__(
            self, "per_slot_limit", np.asarray(self.per_slot_limit, dtype=np.float64)
        )


def active_bounds(pev: PevSpec, k: int, x_row: np.ndarray) -> BoundInterval:
    """Feasible interval for the active strategy of slot k (1-based).

    The SoC accumulated over slots 1..k-1 is held fixed; slot k may
    then move the SoC anywhere inside [soc_lower, soc_upper] without
    exceeding the charger energy t_k * charger_power in either
    direction.
    """
    x_row = np.asarray(x_row, dtype=np.float64)
    prefix_excl = pev.soc_init + float(np.sum(x_row[:k])) - float(x_row[k - 1])
    cap = float(pev.slot_widths[k - 1]) * pev.charger_power
    lower = max(pev.soc_lower - prefix_excl, -cap)
    upper = min(pev.soc_upper - prefix_excl, cap)
    if not lower < upper:
        raise CollapsedInterval(
            f"slot {k}: active interval [{lower}, {upper}] collapsed "
            f"(accumulated SoC {prefix_excl:g} Wh leaves no room)"
        )
    return BoundInterval(lower, upper)


def reactive_envelope(pev: PevSpec, x_row: np.ndarray) -> ReactiveEnvelope:
    """Reactive power available per slot once the active rates are fixed.

    q̄_k = sqrt(charger_power^2 - (x_k / t_k)^2); the total capacity is
    the sum over the window.
    """
    x_row = np.asarray(x_row, dtype=np.float64)
    rates = x_row / pev.slot_widths
    if np.any(np.abs(rates) > pev.charger_power):
        worst = int(np.argmax(np.abs(rates)))
        raise DomainError(
            f"slot {worst + 1}: |active rate| {abs(rates[worst]):g} W exceeds "
            f"charger power {pev.charger_power:g} W"
        )
    limits = np.sqrt(np.maximum(pev.charger_power**2 - rates**2, 0.0))
    return ReactiveEnvelope(per_slot_limit=limits, total_capacity=float(np.sum(limits)))


def barrier(v: float, b: BoundInterval) -> float:
    """Log-ratio barrier: ln((v - lower) / (upper - v)).

    Strictly increasing on the open interval, zero at the midpoint,
    diverging to -inf/+inf at the ends. Added (scaled by epsilon) to
    the consensus outputs so the flow never exits the interval.
    """
    if not b.contains(v):
        raise DomainError(f"value {v} outside open interval ({b.lower}, {b.upper})")
    return math.log((v - b.lower) / (b.upper - v))


def barrier_slope(v: float, b: BoundInterval) -> float:
    """d barrier / dv; used for step-size safety estimates."""
    if not b.contains(v):
        raise DomainError(f"value {v} outside open interval ({b.lower}, {b.upper})")
    return 1.0 / (v - b.lower) + 1.0 / (b.upper - v)


def slack_bounds(env: ReactiveEnvelope) -> BoundInterval:
    """Symmetric interval (-Q, +Q) for the per-PEV reactive slack."""
    q = env.total_capacity
    if not q > 0:
        raise CollapsedInterval("reactive envelope has zero total capacity")
    return BoundInterval(-q, q)
