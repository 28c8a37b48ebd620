"""railbench command line: ``sweep``, ``evaluate`` and ``report``.

Exit codes: 0 success, 1 usage error, 2 data error (bad config, CSV, report
or I/O failure), 3 internal error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

from ._io import atomic_write_text
from .dataset import DatasetParseError, Grid, parse_values, read_csv, sweep, write_csv
from .models import FAMILIES, FAMILY_ORDER
from .pipeline import CvReport, default_grids, nested_cv, nonnested_cv
from .report import (
    baseline_rows,
    best_per_kpi,
    format_comparison,
    format_table,
    render_svg,
    result_rows,
    table_csv,
)
from .sim import ConfigError, SimConfig, load_config

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3
SEED_ENV = "RAILBENCH_SEED"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def resolve_seed(flag: int | None, default: int = 0) -> int:
    if flag is not None:
        return flag
    env = os.environ.get(SEED_ENV)
    if env is not None and env.strip():
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"{SEED_ENV}={env!r} is not an integer") from None
    return default


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="railbench", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("sweep", help="simulate the HOM x TTT grid and write the KPI CSV")
    p.add_argument("--config", help="key=value scenario file (SimConfig field names)")
    p.add_argument("--out", default="dataset.csv", help="output CSV path (default: %(default)s)")
    p.add_argument("--hom", help="comma-separated HOM values in dB (default: 0 to 16 step 0.5)")
    p.add_argument("--ttt", help="comma-separated TTT values in ms (default: the 16 standard values)")
    p.add_argument("--seed", type=int, help=f"base seed (falls back to ${SEED_ENV}, then the config)")
    p.add_argument("--duration", type=float, help="override sim_duration in seconds")
    p.add_argument("--workers", type=int, default=1, help="parallel processes, 0 = all cores (default: 1)")

    p = sub.add_parser("evaluate", help="nested and/or non-nested CV of the regressor families")
    p.add_argument("dataset", help="CSV with header HOM,TTT,L,T,CDR,RLF,SE,HOPP,HOP")
    p.add_argument("--scheme", choices=("nested", "non-nested", "both"), default="both")
    p.add_argument("--families", help=f"comma-separated subset of {','.join(FAMILY_ORDER)}")
    p.add_argument("--seed", type=int, help=f"fold seed (falls back to ${SEED_ENV}, then 0)")
    p.add_argument("--out", default="report.json",
                   help="report JSON path; with --scheme both, .nested/.non-nested is inserted before the suffix")
    p.add_argument("--grids", choices=("default", "fast"), default="default",
                   help="hyperparameter grid preset (default: %(default)s)")
    p.add_argument("--outer-k", type=int, default=6)
    p.add_argument("--inner-k", type=int, default=4)
    p.add_argument("--k", type=int, default=10, help="folds of the non-nested scheme")
    p.add_argument("--csv", help="also write the tables as CSV to this path prefix")
    p.add_argument("--n-jobs", type=int, default=1, help="parallel family evaluations (joblib)")

    p = sub.add_parser("report", help="tables and best-method SVG charts from report JSONs")
    p.add_argument("reports", nargs="*", help="CvReport JSON files")
    p.add_argument("--baseline", action="store_true", help="show published values next to ours")
    p.add_argument("--svg", help="SVG output path; '-mae'/'-mse' is appended to the stem per metric")
    p.add_argument("--metric", choices=("mae", "mse", "both"), default="both")
    return parser


def _report_paths(out: str, schemes) -> dict[str, Path]:
    out = Path(out)
    if len(schemes) == 1:
        return {schemes[0]: out}
    return {s: out.with_name(f"{out.stem}.{s}{out.suffix or '.json'}") for s in schemes}


def cmd_sweep(args) -> int:
    config = load_config(args.config) if args.config else SimConfig()
    seed = resolve_seed(args.seed, config.seed)
    changes = {"seed": seed}
    if args.duration is not None:
        changes["sim_duration"] = args.duration
    config = config.replace(**changes)
    grid = Grid(*(parse_values(v) if v else d for v, d in
                  ((args.hom, Grid().hom_values), (args.ttt, Grid().ttt_values))))
    # fail on bad grid values before spending time simulating
    for _, _, hom, ttt in grid.cells():
        config.replace(hom=hom, ttt=ttt)
    out = Path(args.out)
    if not out.parent.is_dir():
        raise OSError(f"output directory does not exist: {out.parent}")
    start = time.perf_counter()
    data = sweep(grid, config, workers=args.workers or None)
    write_csv(data, out)
    print(f"wrote {len(data)} rows to {out} in {time.perf_counter() - start:.1f} s")
    return EXIT_OK


def _parse_families(spec: str | None) -> list[str]:
    if not spec:
        return list(FAMILY_ORDER)
    names = [s.strip().lower() for s in spec.split(",") if s.strip()]
    unknown = [n for n in names if n not in FAMILIES]
    if unknown:
        raise UsageError(f"unknown families: {', '.join(unknown)} (known: {', '.join(FAMILY_ORDER)})")
    return names


def cmd_evaluate(args) -> int:
    families = _parse_families(args.families)
    seed = resolve_seed(args.seed)
    data = read_csv(args.dataset)
    grids = default_grids(families, args.grids)
    schemes = ["non-nested", "nested"] if args.scheme == "both" else [args.scheme]
    paths = _report_paths(args.out, schemes)
    reports = []
    for scheme in schemes:
        start = time.perf_counter()
        if scheme == "nested":
            rep = nested_cv(grids, data, outer_k=args.outer_k, inner_k=args.inner_k, seed=seed, n_jobs=args.n_jobs)
        else:
            rep = nonnested_cv(grids, data, k=args.k, seed=seed, n_jobs=args.n_jobs)
        atomic_write_text(paths[scheme], rep.to_json())
        print(f"{scheme}: {len(families)} families in {time.perf_counter() - start:.1f} s -> {paths[scheme]}")
        for fam, reason in rep.disqualified.items():
            print(f"  {fam} disqualified: {reason}", file=sys.stderr)
        reports.append(rep)
    for metric in ("mae", "mse"):
        rows = result_rows(reports, metric)
        print()
        print(format_table(rows, metric), end="")
        if args.csv:
            atomic_write_text(f"{args.csv}.{metric}.csv", table_csv(rows))
    return EXIT_OK


def cmd_report(args) -> int:
    if not args.reports:
        raise UsageError("report needs at least one report JSON")
    reports = []
    for path in args.reports:
        try:
            reports.append(CvReport.from_json(Path(path).read_text()))
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise ValueError(f"{path}: malformed report ({exc})") from None
    metrics = ["mae", "mse"] if args.metric == "both" else [args.metric]
    for metric in metrics:
        rows = result_rows(reports, metric)
        print(format_table(rows, metric), end="")
        if args.baseline:
            print()
            print(format_comparison(rows, metric), end="")
        print()
        if args.svg:
            svg_path = Path(args.svg)
            if len(metrics) > 1:
                svg_path = svg_path.with_name(f"{svg_path.stem}-{metric}{svg_path.suffix or '.svg'}")
            paper_best = best_per_kpi(baseline_rows(metric)) if args.baseline else None
            atomic_write_text(svg_path, render_svg(best_per_kpi(rows), metric, paper_best))
            print(f"wrote {svg_path}")
    return EXIT_OK


COMMANDS = {"sweep": cmd_sweep, "evaluate": cmd_evaluate, "report": cmd_report}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"railbench: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, DatasetParseError, OSError, ValueError) as exc:
        print(f"railbench: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001
        print(f"railbench: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
