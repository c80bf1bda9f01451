"""Scenario-level domain types and their validation.

Unit conventions used throughout the package:

* energies in Wh (state of charge, per-slot active strategies),
* active power in W, reactive power in VAr,
* slot widths in hours.

A per-slot active strategy ``x`` delivers power ``x / t`` during its
slot; negative values mean the vehicle discharges into the grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InfeasibleDemand, RangeError, ShapeError


def _as_vector(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ShapeError(f"{name} must be one-dimensional, got shape {arr.shape}")
    return arr


@dataclass(frozen=True, eq=False)
class PevSpec:
    """One vehicle's charger limits, SoC targets and charging preferences.

    soc_* fields are energies in Wh, charger_power in W, slot_widths in
    hours, preferred_rates in Wh per slot. commitment is the owner's
    weighting of grid objectives against the preferred profile.
    """

    soc_init: float
    soc_target: float
    soc_upper: float
    soc_lower: float
    charger_power: float
    slot_widths: np.ndarray
    commitment: float
    preferred_rates: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "slot_widths", _as_vector(self.slot_widths, "slot_widths"))
        object.__setattr__(self, "preferred_rates", _as_vector(self.preferred_rates, "preferred_rates"))

    @property
    def n_slots(self) -> int:
        return len(self.slot_widths)

    @property
    def demand(self) -> float:
        """Net energy (Wh) the vehicle must exchange over the window."""
        return self.soc_target - self.soc_init

    def __eq__(self, other) -> bool:
        if not isinstance(other, PevSpec):
            return NotImplemented
        return (
            self.soc_init == other.soc_init
            and self.soc_target == other.soc_target
            and self.soc_upper == other.soc_upper
            and self.soc_lower == other.soc_lower
            and self.charger_power == other.charger_power
            and self.commitment == other.commitment
            and np.array_equal(self.slot_widths, other.slot_widths)
            and np.array_equal(self.preferred_rates, other.preferred_rates)
        )


@dataclass(frozen=True, eq=False)
class GridProfile:
    """Baseline transformer load per slot, absent any PEVs (W / VAr)."""

    active_base: np.ndarray
    reactive_base: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "active_base", _as_vector(self.active_base, "active_base"))
        object.__setattr__(self, "reactive_base", _as_vector(self.reactive_base, "reactive_base"))

    @property
    def n_slots(self) -> int:
        return len(self.active_base)

    def __eq__(self, other) -> bool:
        if not isinstance(other, GridProfile):
            return NotImplemented
        return np.array_equal(self.active_base, other.active_base) and np.array_equal(
            self.reactive_base, other.reactive_base
        )


@dataclass(frozen=True)
class SimParams:
    """Run-level knobs for the allocation dynamics.

    step_size and tolerance are dimensionless: the run normalizes them
    against the initial state (step length against interval widths and
    the output Jacobian, tolerance against the initial output spread).
    epsilon is the barrier weight; None means "auto-scale from the
    initial payoff magnitudes at run start".
    """

    eta: float = 0.8
    min_commitment: float = 0.0
    epsilon: float | None = None
    step_size: float = 1.0
    tolerance: float = 1e-6
    max_steps: int = 5_000_000
    record_stride: int = 100


@dataclass(eq=False)
class FleetState:
    """Mutable per-run state: active strategies x (N,K) in Wh, reactive
    strategies y (N,K) in VAr and one slack per PEV in VAr."""

    x: np.ndarray
    y: np.ndarray
    slack: np.ndarray

    def __post_init__(self):
        self.x = np.array(self.x, dtype=np.float64)
        self.y = np.array(self.y, dtype=np.float64)
        self.slack = np.array(self.slack, dtype=np.float64)
        if self.x.shape != self.y.shape or self.x.shape[0] != self.slack.shape[0]:
            raise ShapeError(
                f"inconsistent state shapes x{self.x.shape} y{self.y.shape} slack{self.slack.shape}"
            )

    def copy(self) -> "FleetState":
        return FleetState(self.x.copy(), self.y.copy(), self.slack.copy())

    def __eq__(self, other) -> bool:
        if not isinstance(other, FleetState):
            return NotImplemented
        return (
            np.array_equal(self.x, other.x)
            and np.array_equal(self.y, other.y)
            and np.array_equal(self.slack, other.slack)
        )


@dataclass(frozen=True, eq=False)
class Scenario:
    """A validated run configuration: grid profile, fleet and parameters.

    mean_commitment is derived (arithmetic mean of the fleet's
    commitments) and is fixed for the whole run.
    """

    grid: GridProfile
    fleet: tuple[PevSpec, ...]
    params: SimParams
    mean_commitment: float = field(default=float("nan"))

    def __post_init__(self):
        object.__setattr__(self, "fleet", tuple(self.fleet))

    @property
    def n_pevs(self) -> int:
        return len(self.fleet)

    @property
    def n_slots(self) -> int:
        return self.grid.n_slots

    def __eq__(self, other) -> bool:
        if not isinstance(other, Scenario):
            return NotImplemented
        return (
            self.grid == other.grid
            and self.fleet == other.fleet
            and self.params == other.params
            and self.mean_commitment == other.mean_commitment
        )


def _validate_pev(pev: PevSpec, index: int, min_commitment: float) -> None:
    tag = f"pev[{index}]"
    if not (pev.soc_lower < pev.soc_init <= pev.soc_upper):
        raise RangeError(f"{tag}: require soc_lower < soc_init <= soc_upper")
    if not (pev.soc_lower <= pev.soc_target <= pev.soc_upper):
        raise RangeError(f"{tag}: require soc_lower <= soc_target <= soc_upper")
    if not pev.charger_power > 0:
        raise RangeError(f"{tag}: charger_power must be > 0")
    if pev.n_slots < 1 or np.any(pev.slot_widths <= 0):
        raise RangeError(f"{tag}: every slot width must be > 0")
    if not (min_commitment <= pev.commitment < 1.0) or pev.commitment < 0:
        raise RangeError(
            f"{tag}: commitment {pev.commitment} outside [{max(min_commitment, 0.0)}, 1)"
        )
    if len(pev.preferred_rates) != pev.n_slots:
        raise ShapeError(
            f"{tag}: preferred_rates has {len(pev.preferred_rates)} entries, expected {pev.n_slots}"
        )
    capacity = float(np.sum(pev.slot_widths) * pev.charger_power)
    if abs(pev.demand) > capacity:
        raise InfeasibleDemand(
            f"{tag}: demand {pev.demand:+g} Wh exceeds window capacity {capacity:g} Wh"
        )


def _validate_params(p: SimParams) -> None:
    if not (0.0 <= p.eta <= 1.0):
        raise RangeError(f"eta {p.eta} outside [0, 1]")
    if not (0.0 <= p.min_commitment < 1.0):
        raise RangeError(f"min_commitment {p.min_commitment} outside [0, 1)")
    if p.epsilon is not None and not p.epsilon > 0:
        raise RangeError(f"epsilon {p.epsilon} must be > 0 (or omitted for auto)")
    if not p.step_size > 0:
        raise RangeError(f"step_size {p.step_size} must be > 0")
    if not p.tolerance > 0:
        raise RangeError(f"tolerance {p.tolerance} must be > 0")
    if p.max_steps < 1:
        raise RangeError(f"max_steps {p.max_steps} must be >= 1")
    if p.record_stride < 1:
        raise RangeError(f"record_stride {p.record_stride} must be >= 1")


def validate_scenario(raw: Scenario) -> Scenario:
    """Check every domain invariant of a scenario candidate.

    Returns a scenario with mean_commitment filled in. Validating an
    already-valid scenario returns an equal one. Raises RangeError /
    ShapeError / InfeasibleDemand naming the offending field.
    """
    _validate_params(raw.params)
    for i, pev in enumerate(raw.fleet):
        _validate_pev(pev, i, raw.params.min_commitment)

    grid = raw.grid
    if grid.n_slots < 2:
        raise ShapeError(f"grid profile needs at least 2 slots, got {grid.n_slots}")
    if len(grid.reactive_base) != grid.n_slots:
        raise ShapeError("active_base and reactive_base lengths differ")
    if not (np.all(np.isfinite(grid.active_base)) and np.all(np.isfinite(grid.reactive_base))):
        raise RangeError("grid profile entries must be finite")
    for i, pev in enumerate(raw.fleet):
        if pev.n_slots != grid.n_slots:
            raise ShapeError(
                f"pev[{i}] has {pev.n_slots} slots but the grid profile has {grid.n_slots}"
            )

    # empty fleet = baseline-only run; the mean commitment is then unused
    mean_mu = float(np.mean([pev.commitment for pev in raw.fleet])) if raw.fleet else 0.0
    return replace(raw, mean_commitment=mean_mu)


def init_fleet_state(s: Scenario) -> FleetState:
    """Feasible initial allocation: uniform active split, zero reactive.

    x[i, k] = demand / K for every slot; if that violates a slot's
    feasible interval the slot is pinned to the interval midpoint and
    the residual is spread equally over the remaining slots. y and the
    slacks start at zero, which satisfies reactive conservation exactly.
    """
    from .constraints import active_bounds  # local import to avoid a cycle

    n, k = s.n_pevs, s.n_slots
    x = np.zeros((n, k))
    for i, pev in enumerate(s.fleet):
        demand = pev.demand
        row = np.full(k, demand / k)
        pinned = np.zeros(k, dtype=bool)
        for _ in range(k + 1):
            _force_exact_sum(row, pinned, demand)
            bad = False
            for j in range(k):
                iv = active_bounds(pev, j + 1, row)
                if not (iv.lower < row[j] < iv.upper):
                    row[j] = 0.5 * (iv.lower + iv.upper)
                    pinned[j] = True
                    bad = True
            if not bad:
                break
        else:
            raise InfeasibleDemand(f"pev[{i}]: no feasible initial allocation found")
        _force_exact_sum(row, pinned, demand)
        for j in range(k):
            iv = active_bounds(pev, j + 1, row)
            if not (iv.lower < row[j] < iv.upper):
                raise InfeasibleDemand(f"pev[{i}]: no feasible initial allocation found")
        x[i] = row
    return FleetState(x=x, y=np.zeros((n, k)), slack=np.zeros(n))


def _force_exact_sum(row: np.ndarray, pinned: np.ndarray, demand: float) -> None:
    """Nudge unpinned slots so that np.sum(row) == demand exactly."""
    free = np.nonzero(~pinned)[0]
    if len(free) == 0:
        return
    residual = demand - float(np.sum(row))
    row[free] += residual / len(free)
    for _ in range(4):
        residual = demand - float(np.sum(row))
        if residual == 0.0:
            return
        row[free[-1]] += residual
