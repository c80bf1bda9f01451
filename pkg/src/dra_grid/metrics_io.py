"""Scenario files, result persistence and the mu/eta sweep harness.

Scenario documents are JSON with top-level keys:

* ``grid`` (explicit ``active_base`` / ``reactive_base`` arrays, W/VAr)
  or ``baseline`` (synthetic generator: a constant level plus one step
  perturbation over a slot range, see :func:`generate_baseline`),
* ``pevs``: array of PevSpec fields,
* ``params``: optional SimParams fields.

Results are CSV (strategies, SoC, loads, sweep cells) plus a
``report.json`` with every run scalar. All numbers are written with 9
significant digits so repeated runs produce byte-identical files.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .dynamics import PhaseResult, run_active_phase, run_reactive_phase
from .errors import DraGridError, ParseError
from .metrics import RunReport, build_report
from .model import (
    GridProfile,
    PevSpec,
    Scenario,
    SimParams,
    init_fleet_state,
    validate_scenario,
)

THREADS_ENV_VAR = "DRA_GRID_THREADS"

DEFAULT_MU_VALUES = (0.0, 0.25, 0.5, 0.75)
DEFAULT_ETA_VALUES = (0.0, 0.2, 0.5, 0.8, 1.0)


@dataclass(frozen=True, eq=False)
class SweepGrid:
    """Per-cell run summaries over a mu x eta grid."""

    mu_values: tuple[float, ...]
    eta_values: tuple[float, ...]
    smoothness_with: np.ndarray  # (len(mu), len(eta))
    variance_with: np.ndarray
    converged: np.ndarray  # bool
    final_x: np.ndarray  # (len(mu), len(eta), N, K) final strategies, NaN on failure


def _fmt(v: float) -> str:
    return f"{float(v):.9g}"


def _require(doc: dict, key: str, where: str):
    if key not in doc:
        raise ParseError(f"{where}: missing required field {key!r}")
    return doc[key]


def generate_baseline(spec: dict) -> GridProfile:
    """Synthetic baseline: constant level plus one step perturbation.

    Fields: slots, level (W), step (W), step_start/step_end (1-based,
    inclusive), optional reactive_level / reactive_step (VAr, default
    0). This stands in for measured transformer data, which the bundled
    scenarios do not include.
    """
    if spec.get("kind") != "step":
        raise ParseError(f"baseline: unknown kind {spec.get('kind')!r} (expected 'step')")
    slots = int(_require(spec, "slots", "baseline"))
    level = float(_require(spec, "level", "baseline"))
    step = float(spec.get("step", 0.0))
    start = int(spec.get("step_start", 1))
    end = int(spec.get("step_end", 0))
    r_level = float(spec.get("reactive_level", 0.0))
    r_step = float(spec.get("reactive_step", 0.0))
    active = np.full(slots, level)
    reactive = np.full(slots, r_level)
    for k in range(start, end + 1):
        if 1 <= k <= slots:
            active[k - 1] += step
            reactive[k - 1] += r_step
    return GridProfile(active_base=active, reactive_base=reactive)


def _parse_pev(doc: dict, index: int) -> PevSpec:
    where = f"pevs[{index}]"
    try:
        return PevSpec(
            soc_init=float(_require(doc, "soc_init", where)),
            soc_target=float(_require(doc, "soc_target", where)),
            soc_upper=float(_require(doc, "soc_upper", where)),
            soc_lower=float(_require(doc, "soc_lower", where)),
            charger_power=float(_require(doc, "charger_power", where)),
            slot_widths=_require(doc, "slot_widths", where),
            commitment=float(_require(doc, "commitment", where)),
            preferred_rates=_require(doc, "preferred_rates", where),
        )
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{where}: {exc}") from exc


def _parse_params(doc: dict) -> SimParams:
    known = {
        "eta", "min_commitment", "epsilon", "step_size",
        "tolerance", "max_steps", "record_stride",
    }
    unknown = set(doc) - known
    if unknown:
        raise ParseError(f"params: unknown fields {sorted(unknown)}")
    kwargs = dict(doc)
    if "max_steps" in kwargs:
        kwargs["max_steps"] = int(kwargs["max_steps"])
    if "record_stride" in kwargs:
        kwargs["record_stride"] = int(kwargs["record_stride"])
    try:
        return SimParams(**kwargs)
    except TypeError as exc:
        raise ParseError(f"params: {exc}") from exc


def parse_scenario(doc: dict) -> Scenario:
    """Build and validate a Scenario from a parsed JSON document."""
    if not isinstance(doc, dict):
        raise ParseError("scenario document must be a JSON object")
    if "grid" in doc and "baseline" in doc:
        raise ParseError("give either 'grid' or 'baseline', not both")
    if "grid" in doc:
        gdoc = doc["grid"]
        grid = GridProfile(
            active_base=_require(gdoc, "active_base", "grid"),
            reactive_base=_require(gdoc, "reactive_base", "grid"),
        )
    elif "baseline" in doc:
        grid = generate_baseline(doc["baseline"])
    else:
        raise ParseError("scenario: missing 'grid' or 'baseline'")
    pevs = _require(doc, "pevs", "scenario")
    if not isinstance(pevs, list):
        raise ParseError("scenario: 'pevs' must be an array")
    fleet = tuple(_parse_pev(p, i) for i, p in enumerate(pevs))
    params = _parse_params(doc.get("params", {}))
    return validate_scenario(Scenario(grid=grid, fleet=fleet, params=params))


def load_scenario(path: str | Path) -> Scenario:
    """Parse and validate a scenario JSON file."""
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
    return parse_scenario(doc)


def serialize_scenario(s: Scenario) -> dict:
    """Scenario as a JSON-ready dict (explicit grid form)."""
    return {
        "grid": {
            "active_base": list(s.grid.active_base),
            "reactive_base": list(s.grid.reactive_base),
        },
        "pevs": [
            {
                "soc_init": p.soc_init,
                "soc_target": p.soc_target,
                "soc_upper": p.soc_upper,
                "soc_lower": p.soc_lower,
                "charger_power": p.charger_power,
                "slot_widths": list(p.slot_widths),
                "commitment": p.commitment,
                "preferred_rates": list(p.preferred_rates),
            }
            for p in s.fleet
        ],
        "params": {
            "eta": s.params.eta,
            "min_commitment": s.params.min_commitment,
            "epsilon": s.params.epsilon,
            "step_size": s.params.step_size,
            "tolerance": s.params.tolerance,
            "max_steps": s.params.max_steps,
            "record_stride": s.params.record_stride,
        },
    }


def save_scenario(s: Scenario, path: str | Path) -> None:
    Path(path).write_text(json.dumps(serialize_scenario(s), indent=2, sort_keys=True) + "\n")


def bundled_scenario_path(name: str) -> Path:
    """Path of a scenario shipped with the package (see scenarios/)."""
    if not name.endswith(".json"):
        name += ".json"
    candidate = resources.files("dra_grid").joinpath("scenarios", name)
    if not candidate.is_file():
        raise FileNotFoundError(f"no bundled scenario named {name!r}")
    return Path(str(candidate))


def bundled_scenario(name: str) -> Scenario:
    return load_scenario(bundled_scenario_path(name))


def run_scenario(
    s: Scenario, *, graph: str = "ring", backend: str | None = None
) -> RunReport:
    """Both phases end to end: init, active consensus, reactive consensus."""
    state = init_fleet_state(s)
    active = run_active_phase(s, state, graph=graph, backend=backend)
    reactive = run_reactive_phase(s, active.final_state, graph=graph, backend=backend)
    return build_report(s, active, reactive)


def _phase_dict(r: PhaseResult) -> dict:
    return {
        "steps_taken": r.steps_taken,
        "converged": r.converged,
        "epsilon": r.epsilon,
        "step_length": r.step_length,
        "eff_tolerance": r.eff_tolerance,
        "final_spread": list(r.final_spread),
        "conservation_drift": list(r.conservation_drift),
    }


def report_dict(s: Scenario, report: RunReport) -> dict:
    active, reactive = report.phase_results
    return {
        "converged": active.converged and reactive.converged,
        "n_pevs": s.n_pevs,
        "n_slots": s.n_slots,
        "mean_commitment": s.mean_commitment,
        "eta": s.params.eta,
        "smoothness_with": report.smoothness_with,
        "smoothness_without": report.smoothness_without,
        "variance_with": report.variance_with,
        "variance_without": report.variance_without,
        "final_soc_Wh": [float(v) for v in report.soc_trajectories[:, -1]],
        "active_phase": _phase_dict(active),
        "reactive_phase": _phase_dict(reactive),
    }


def write_outputs(s: Scenario, report: RunReport, out_dir: str | Path) -> None:
    """strategies.csv, soc.csv, loads.csv and report.json into out_dir."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    state = report.phase_results[1].final_state
    n, k = state.x.shape

    lines = ["pev,slot,x_Wh,y_VAr"]
    for i in range(n):
        for j in range(k):
            lines.append(f"{i + 1},{j + 1},{_fmt(state.x[i, j])},{_fmt(state.y[i, j])}")
    (out / "strategies.csv").write_text("\n".join(lines) + "\n")

    header = "pev," + ",".join(f"soc_{j}_Wh" for j in range(k + 1))
    lines = [header]
    for i in range(n):
        row = ",".join(_fmt(v) for v in report.soc_trajectories[i])
        lines.append(f"{i + 1},{row}")
    (out / "soc.csv").write_text("\n".join(lines) + "\n")

    lines = ["slot,baseline_W,with_dra_W,baseline_VAr,with_dra_VAr"]
    for j in range(k):
        lines.append(
            f"{j + 1},{_fmt(report.baseline_loads.active[j])},{_fmt(report.final_loads.active[j])},"
            f"{_fmt(report.baseline_loads.reactive[j])},{_fmt(report.final_loads.reactive[j])}"
        )
    (out / "loads.csv").write_text("\n".join(lines) + "\n")

    (out / "report.json").write_text(
        json.dumps(report_dict(s, report), indent=2, sort_keys=True) + "\n"
    )


def run_command(
    scenario_path: str | Path,
    out_dir: str | Path,
    *,
    graph: str = "ring",
    backend: str | None = None,
) -> int:
    """Run one scenario and persist results; 0 converged, 2 not, 1 error."""
    import sys

    try:
        s = load_scenario(scenario_path)
        report = run_scenario(s, graph=graph, backend=backend)
        write_outputs(s, report, out_dir)
    except (OSError, DraGridError) as exc:
        print(f"dra-grid: error: {exc}", file=sys.stderr)
        return 1
    active, reactive = report.phase_results
    return 0 if (active.converged and reactive.converged) else 2


def _override(s: Scenario, mu: float, eta: float) -> Scenario:
    fleet = tuple(replace(p, commitment=mu) for p in s.fleet)
    params = replace(s.params, eta=eta)
    return validate_scenario(Scenario(grid=s.grid, fleet=fleet, params=params))


def run_sweep(
    s: Scenario,
    mu_values=DEFAULT_MU_VALUES,
    eta_values=DEFAULT_ETA_VALUES,
    *,
    graph: str = "ring",
    backend: str | None = None,
) -> SweepGrid:
    """Run the scenario once per (mu, eta) cell.

    Cells are independent; DRA_GRID_THREADS caps how many run at once.
    A failed cell is recorded as non-converged with NaN metrics.
    """
    mus = tuple(sorted(float(v) for v in mu_values))
    etas = tuple(sorted(float(v) for v in eta_values))
    shape = (len(mus), len(etas))
    smooth = np.full(shape, np.nan)
    var = np.full(shape, np.nan)
    conv = np.zeros(shape, dtype=bool)
    final_x = np.full(shape + (s.n_pevs, s.n_slots), np.nan)

    def cell(idx):
        a, b = idx
        try:
            cs = _override(s, mus[a], etas[b])
            report = run_scenario(cs, graph=graph, backend=backend)
        except DraGridError:
            return a, b, np.nan, np.nan, False, None
        ok = report.phase_results[0].converged and report.phase_results[1].converged
        return (
            a, b, report.smoothness_with, report.variance_with, ok,
            report.phase_results[1].final_state.x,
        )

    indices = [(a, b) for a in range(len(mus)) for b in range(len(etas))]
    threads = max(1, int(os.environ.get(THREADS_ENV_VAR, "1")))
    if threads == 1:
        results = [cell(idx) for idx in indices]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(cell, indices))
    for a, b, sm, va, ok, fx in results:
        smooth[a, b] = sm
        var[a, b] = va
        conv[a, b] = ok
        if fx is not None:
            final_x[a, b] = fx
    return SweepGrid(
        mu_values=mus,
        eta_values=etas,
        smoothness_with=smooth,
        variance_with=var,
        converged=conv,
        final_x=final_x,
    )


def write_sweep(grid: SweepGrid, out_dir: str | Path) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lines = ["mu,eta,smoothness_with,variance_with,converged"]
    for a, mu in enumerate(grid.mu_values):
        for b, eta in enumerate(grid.eta_values):
            lines.append(
                f"{_fmt(mu)},{_fmt(eta)},{_fmt(grid.smoothness_with[a, b])},"
                f"{_fmt(grid.variance_with[a, b])},{str(bool(grid.converged[a, b])).lower()}"
            )
    (out / "sweep.csv").write_text("\n".join(lines) + "\n")


def sweep_command(
    scenario_path: str | Path,
    mu_values,
    eta_values,
    out_dir: str | Path,
    *,
    graph: str = "ring",
    backend: str | None = None,
) -> int:
    """Sweep the scenario over the grid; 0 all converged, 2 some not, 1 error."""
    import sys

    try:
        s = load_scenario(scenario_path)
        grid = run_sweep(s, mu_values, eta_values, graph=graph, backend=backend)
        write_sweep(grid, out_dir)
    except (OSError, DraGridError) as exc:
        print(f"dra-grid: error: {exc}", file=sys.stderr)
        return 1
    return 0 if bool(np.all(grid.converged)) else 2
