"""dra-grid command line interface.

Subcommands:

* ``run <scenario> -o <dir>``: integrate both phases, write CSV/JSON.
* ``sweep <scenario> --mu ... --eta ... -o <dir>``: one run per cell.
* ``report <dir>``: pretty-print a previously written report.json.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .metrics_io import DEFAULT_ETA_VALUES, DEFAULT_MU_VALUES, run_command, sweep_command


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dra-grid",
        description="Distributed resource allocation for PEV fleet charging",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one scenario and write results")
    run_p.add_argument("scenario", help="scenario JSON file")
    run_p.add_argument("-o", "--output", required=True, help="output directory")
    run_p.add_argument(
        "--graph",
        choices=["ring", "complete"],
        default="ring",
        help="per-PEV strategy graph topology (default: ring)",
    )
    run_p.add_argument(
        "--backend",
        choices=["numba", "numpy", "auto"],
        default=None,
        help="kernel backend (default: DRA_GRID_BACKEND or auto)",
    )

    sweep_p = sub.add_parser("sweep", help="run a scenario over a mu/eta grid")
    sweep_p.add_argument("scenario", help="scenario JSON file")
    sweep_p.add_argument("-o", "--output", required=True, help="output directory")
    sweep_p.add_argument(
        "--mu", nargs="+", type=float, default=list(DEFAULT_MU_VALUES),
        help="commitment values (default: %(default)s)",
    )
    sweep_p.add_argument(
        "--eta", nargs="+", type=float, default=list(DEFAULT_ETA_VALUES),
        help="smoothing-factor values (default: %(default)s)",
    )
    sweep_p.add_argument("--graph", choices=["ring", "complete"], default="ring")
    sweep_p.add_argument("--backend", choices=["numba", "numpy", "auto"], default=None)

    report_p = sub.add_parser("report", help="pretty-print report.json from a run directory")
    report_p.add_argument("directory", help="directory written by 'run'")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "run":
        return run_command(args.scenario, args.output, graph=args.graph, backend=args.backend)
    if args.command == "sweep":
        return sweep_command(
            args.scenario, args.mu, args.eta, args.output,
            graph=args.graph, backend=args.backend,
        )
    if args.command == "report":
        path = Path(args.directory) / "report.json"
        try:
            doc = json.loads(path.read_text())
        except OSError as exc:
            print(f"dra-grid: error: {exc}", file=sys.stderr)
            return 1
        print(json.dumps(doc, indent=2, sort_keys=True))
        return 0
    return 1


if __name__ == "__main__":
    sys.exit(main())
