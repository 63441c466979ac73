"""Command-line entry point.

Subcommands::

    simulate   write one replicate cell's MA and TM cohorts as long-format CSV
    estimate   run the estimators on a cohort CSV
    scenario   run a full simulation study (results.csv and summary.csv)
    aggregate  summarise a results CSV
    plotdata   write replicate-averaged figure series
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import pandas as pd

from .catalog import load_catalog
from .cohort import TimeGrid, read_cohorts, write_cohorts
from .harness import (
    ESTIMATE_COLUMNS,
    RESULT_COLUMNS,
    ScenarioConfig,
    aggregate,
    emit_plot_data,
    estimate_cohorts,
    load_config,
    run_scenario,
    simulate_cell,
)

log = logging.getLogger("upcoding_rmtl")

EXPORT_COLUMNS = ["scenario", "replicate", "period", "group", "hcc", "estimator", "time", "value", "variance"]


def _floats(text):
    return tuple(float(x) for x in text.split(",") if x.strip())


def _ints(text):
    return tuple(int(x) for x in text.split(",") if x.strip())


def _add_config_flags(p):
    p.add_argument("--config", help="INI file with a [scenario] section; flags override it")
    p.add_argument("--scenario", type=int, choices=(1, 2))
    p.add_argument("--n", type=int, help="individuals per group")
    p.add_argument("--replicates", type=int)
    p.add_argument("--monitoring-periods", type=int)
    p.add_argument("--time-points-per-period", type=int)
    p.add_argument("--ma-degrees", type=_floats, help="comma-separated MA upcoding degrees")
    p.add_argument("--tm-degree", type=float)
    p.add_argument("--undercoding-levels", type=_floats, help="comma-separated TM undercoding levels")
    p.add_argument("--ltfu-per-timepoint", type=float)
    p.add_argument("--target-hcc", type=int)
    p.add_argument("--reference-events", type=_ints, help="comma-separated HCCs")
    p.add_argument("--selection", choices=("exact", "bernoulli"))
    p.add_argument("--split", choices=("uniform", "quota"))
    p.add_argument("--risk-set", choices=("fixed", "period"))
    p.add_argument("--tau", type=float)
    p.add_argument("--seed", type=int, dest="base_seed")


_CONFIG_FIELDS = ("scenario", "n", "replicates", "monitoring_periods", "time_points_per_period", "ma_degrees",
                  "tm_degree", "undercoding_levels", "ltfu_per_timepoint", "target_hcc", "reference_events",
                  "selection", "split", "risk_set", "tau", "base_seed")


def _config(args) -> ScenarioConfig:
    overrides = {k: getattr(args, k) for k in _CONFIG_FIELDS}
    if args.config:
        return load_config(args.config, **overrides)
    return ScenarioConfig(**{k: v for k, v in overrides.items() if v is not None})


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(args):
    config = _config(args)
    degree = config.ma_degrees[0] if args.degree is None else args.degree
    level = config.undercoding_levels[0] if args.undercoding is None else args.undercoding
    cell = simulate_cell(config, args.replicate, level, degree)
    path = _out_dir(args) / "cohorts.csv"
    write_cohorts(path, cell.ma, cell.tm)
    log.info("wrote %s (n=%d per group, degree %s, undercoding %s)", path, config.n, degree, level)


def cmd_estimate(args):
    grid = TimeGrid(args.monitoring_periods, args.time_points_per_period)
    cohorts = read_cohorts(args.cohorts, grid)
    if set(cohorts) != {0, 1}:
        raise SystemExit(f"{args.cohorts}: need rows for both group 1 and group 0")
    catalog = load_catalog()
    for c in cohorts.values():
        c.validate(catalog)
    rows = estimate_cohorts(cohorts[1], cohorts[0], args.target_hcc, epsilon=args.epsilon,
                            risk_set=args.risk_set, tau=args.tau, catalog=catalog)
    df = pd.DataFrame(rows, columns=ESTIMATE_COLUMNS)
    df.insert(0, "replicate", args.replicate)
    df.insert(0, "scenario", args.scenario)
    for col in ("period", "group", "hcc"):
        df[col] = df[col].astype("Int64")
    path = _out_dir(args) / "estimates.csv"
    df[EXPORT_COLUMNS].to_csv(path, index=False)
    log.info("wrote %d estimates to %s", len(df), path)


def cmd_scenario(args):
    config = _config(args)
    out = _out_dir(args)
    (out / "config.ini").write_text(config.to_ini())
    results = run_scenario(config, threads=args.threads)
    results.to_csv(out / "results.csv", index=False)
    aggregate(results).to_csv(out / "summary.csv", index=False)
    log.info("wrote %d result rows to %s", len(results), out)


def _read_results(path) -> pd.DataFrame:
    df = pd.read_csv(path, dtype={c: "Int64" for c in ("scenario", "replicate", "period", "group", "hcc")},
                     float_precision="round_trip")
    missing = set(RESULT_COLUMNS) - set(df.columns)
    if missing:
        raise SystemExit(f"{path}: missing columns {sorted(missing)}")
    return df


def cmd_aggregate(args):
    summary = aggregate(_read_results(args.results))
    path = _out_dir(args) / "summary.csv"
    summary.to_csv(path, index=False)
    log.info("wrote %s", path)


def cmd_plotdata(args):
    results = _read_results(args.results)
    out = _out_dir(args)
    for kind in args.kind:
        emit_plot_data(results, kind, out / f"plot_{kind}.csv", degree=args.degree)
        log.info("wrote %s", out / f"plot_{kind}.csv")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="upcoding-rmtl", description="Competing-risks RMTL coding-intensity study tools")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write one cell's simulated cohorts")
    _add_config_flags(p)
    p.add_argument("--degree", type=float, help="MA upcoding degree (default: first of --ma-degrees)")
    p.add_argument("--undercoding", type=float, help="TM undercoding level (default: first level)")
    p.add_argument("--replicate", type=int, default=0)
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="run the estimators on a cohort CSV")
    p.add_argument("cohorts", help="long-format cohort CSV with groups 1 and 0")
    p.add_argument("--target-hcc", type=int, default=238)
    p.add_argument("--epsilon", type=float, help="underreporting shift for the adjusted contrast")
    p.add_argument("--monitoring-periods", type=int, default=2)
    p.add_argument("--time-points-per-period", type=int, default=4)
    p.add_argument("--risk-set", choices=("fixed", "period"), default="fixed")
    p.add_argument("--tau", type=float)
    p.add_argument("--scenario", type=int, default=0, help="label for the scenario column")
    p.add_argument("--replicate", type=int, default=0, help="label for the replicate column")
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("scenario", help="run a full simulation study")
    _add_config_flags(p)
    p.add_argument("--threads", type=int, default=1, help="worker processes")
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_scenario)

    p = sub.add_parser("aggregate", help="summarise a results CSV")
    p.add_argument("results")
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_aggregate)

    p = sub.add_parser("plotdata", help="write figure series from a results CSV")
    p.add_argument("results")
    p.add_argument("--kind", nargs="+", choices=("cif", "psi", "deci"), default=["cif", "psi", "deci"])
    p.add_argument("--degree", type=float, help="MA degree for the cif series (default: largest)")
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_plotdata)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        args.func(args)
    except (ValueError, KeyError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
