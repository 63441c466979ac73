"""Replicate orchestration, aggregation and plot-ready summaries.

Every ``(replicate, undercoding level, MA degree)`` cell simulates two
independent baselines, undercodes the comparison group, applies
loss-to-follow-up, upcodes both groups period by period and runs every
estimator. Random streams are keyed by the replicate and the cell's grid
values, so any cell can be re-run on its own.
"""

from __future__ import annotations

import functools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from ..catalog import HccCatalog, load_catalog, severity_set_of
from ..cohort import Cohort
from ..estimators import (
    build_event_table,
    cumulative_incidence,
    deci_dagger,
    epsilon_hat,
    omega_hat,
    psi_hat,
    psi_m_hat,
    psi_star_hat,
    rmtl,
)
from ..simulate import (
    RngStream,
    UpcodeSpec,
    apply_ltfu,
    apply_undercoding,
    apply_upcoding,
    load_cooccurrence,
    sample_baseline,
)
from .config import ScenarioConfig

__all__ = [
    "RESULT_COLUMNS",
    "ESTIMATE_COLUMNS",
    "SUMMARY_COLUMNS",
    "ScenarioError",
    "SimulatedCell",
    "simulate_cell",
    "estimate_cohorts",
    "run_cell",
    "run_scenario",
    "aggregate",
    "emit_plot_data",
]

ESTIMATE_COLUMNS = ["period", "group", "hcc", "estimator", "time", "value", "variance"]
RESULT_COLUMNS = ["scenario", "replicate", "period", "undercoding_level", "upcoding_degree",
                  "group", "hcc", "estimator", "time", "value", "variance"]
CELL_KEYS = ["scenario", "period", "undercoding_level", "upcoding_degree", "group", "hcc", "estimator", "time"]
SUMMARY_COLUMNS = CELL_KEYS + ["replicates", "mean", "sd", "mean_variance"]

PLOT_COLUMNS = {
    "cif": ["time", "group", "period", "undercoding", "F_hat"],
    "psi": ["degree", "period", "undercoding", "psi_hat"],
    "deci": ["undercoding", "degree", "period", "deci"],
}

# stream components within a cell
_MA_BASE, _TM_BASE, _TM_UNDER, _MA_LTFU, _TM_LTFU = range(5)
_MA_UP, _TM_UP, _RECORD = 100, 200, 300


class ScenarioError(RuntimeError):
    pass


@functools.lru_cache(maxsize=None)
def _catalog() -> HccCatalog:
    return load_catalog()


@functools.lru_cache(maxsize=None)
def _table(path):
    return load_cooccurrence(path, _catalog())


def _grid_key(x: float) -> int:
    return int(round(x * 1_000_000))


@dataclass(frozen=True)
class SimulatedCell:
    """Cohorts of one replicate cell.

    ``records[m]`` is the comparison group's reference-code record for
    period ``m``; ``records[0]`` is the undercoded baseline itself.
    """

    ma: Cohort
    tm: Cohort
    records: tuple


def simulate_cell(config: ScenarioConfig, replicate: int, undercoding: float, degree: float) -> SimulatedCell:
    catalog, table, grid = _catalog(), _table(config.cooccurrence_path), config.grid
    key = (replicate, _grid_key(undercoding), _grid_key(degree))

    def rng(component):
        return RngStream(config.base_seed, key + (component,)).generator()

    ma = sample_baseline(table, config.n, rng(_MA_BASE), group=1, grid=grid)
    baseline_tm = sample_baseline(table, config.n, rng(_TM_BASE), group=0, grid=grid)
    tm = apply_undercoding(baseline_tm, undercoding, rng(_TM_UNDER))
    records = [tm] + [
        apply_undercoding(baseline_tm, undercoding, rng(_RECORD + m)) for m in range(1, grid.n_periods + 1)
    ]
    ma = apply_ltfu(ma, config.ltfu_per_timepoint, rng(_MA_LTFU))
    tm = apply_ltfu(tm, config.ltfu_per_timepoint, rng(_TM_LTFU))

    for m in range(1, grid.n_periods + 1):
        points = tuple(int(t) for t in grid.period_indices(m))
        for group_degree, component in ((degree, _MA_UP), (config.tm_degree, _TM_UP)):
            spec = UpcodeSpec(config.target_hcc, config.upcoding_mode, group_degree, points,
                              config.selection, config.split)
            if component == _MA_UP:
                ma = apply_upcoding(ma, spec, catalog, rng(component + m))
            else:
                tm = apply_upcoding(tm, spec, catalog, rng(component + m))
    return SimulatedCell(ma, tm, tuple(records))


def estimate_cohorts(
    ma: Cohort,
    tm: Cohort,
    target: int,
    periods=None,
    records=None,
    reference_events=(),
    epsilon: float | None = None,
    risk_set: str = "fixed",
    tau: float | None = None,
    clamp_shift: bool = False,
    catalog: HccCatalog | None = None,
) -> list[tuple]:
    """Run every estimator on a pair of group cohorts.

    Returns rows in :data:`ESTIMATE_COLUMNS` order. The shift for the
    adjusted contrast comes from ``records`` and ``reference_events`` when
    given, else from ``epsilon`` (no adjusted rows when both are absent).
    """
    catalog = catalog or _catalog()
    grid = ma.grid
    periods = list(range(1, grid.n_periods + 1)) if periods is None else list(periods)
    sset = severity_set_of(catalog, target)
    s_target = sset.index(target)
    na = pd.NA
    rows = []
    prev_psi = prev_star = None
    for m in periods:
        curves = {}
        for g, cohort in ((1, ma), (0, tm)):
            curve = cumulative_incidence(build_event_table(cohort, sset, m, risk_set))
            curves[g] = curve
            for s, hcc in enumerate(sset.members, start=1):
                var = curve.variance(s)
                for i, t in enumerate(curve.times):
                    rows.append((m, g, hcc, "F_hat", float(t), curve.cif[s - 1, i], var[i]))
        mu = {}
        for g in (1, 0):
            for s, hcc in enumerate(sset.members, start=1):
                est = rmtl(curves[g], s=s, tau=tau, period=m)
                rows.append((m, g, hcc, "mu", np.nan, est.value, est.variance))
                if s == s_target:
                    mu[g] = est
        psi = psi_hat(mu[1], mu[0])
        rows.append((m, na, target, "psi", np.nan, psi.value, psi.variance))

        eps = None
        if records is not None:
            e = epsilon_hat(records[m - 1], records[m], reference_events, catalog)
            rows.append((m, 0, na, "epsilon", np.nan, e.value, e.variance))
            eps = e.value
        elif epsilon is not None:
            eps = float(epsilon)
        star = None
        if eps is not None:
            star = psi_star_hat(curves[1], curves[0], eps, tau=tau, s=s_target, clamp=clamp_shift, period=m)
            rows.append((m, na, target, "psi_star", np.nan, star.value, star.variance))

        if prev_psi is not None and prev_psi.period == m - 1:
            d = psi_m_hat(psi, prev_psi)
            rows.append((m, na, target, "psi_M", np.nan, d.value, d.variance))
            if star is not None and prev_star is not None:
                d = psi_m_hat(star, prev_star)
                rows.append((m, na, target, "psi_M_star", np.nan, d.value, d.variance))
        prev_psi, prev_star = psi, star

        if sset.k >= 2:
            om = omega_hat(curves[1], curves[0], tau=tau, period=m)
            rows.append((m, na, target, "omega", np.nan, om.value, om.variance))
        dd = deci_dagger(ma, tm, grid.period_end(m))
        rows.append((m, na, na, "deci", np.nan, dd.value, dd.variance))
    return rows


def run_cell(config: ScenarioConfig, replicate: int, undercoding: float, degree: float) -> list[tuple]:
    """Simulate and estimate one cell; rows follow :data:`RESULT_COLUMNS`."""
    try:
        cell = simulate_cell(config, replicate, undercoding, degree)
        rows = estimate_cohorts(
            cell.ma,
            cell.tm,
            config.target_hcc,
            records=cell.records,
            reference_events=config.reference_events,
            risk_set=config.risk_set,
            tau=config.tau,
            clamp_shift=config.clamp_shift,
        )
    except Exception as e:
        raise ScenarioError(
            f"scenario {config.scenario}, replicate {replicate}, undercoding {undercoding}, degree {degree}: {e}"
        ) from e
    head = (config.scenario, replicate)
    return [head + r[:1] + (undercoding, degree) + r[1:] for r in rows]


def _run_task(args):
    return run_cell(*args)


def _frame(rows) -> pd.DataFrame:
    df = pd.DataFrame(rows, columns=RESULT_COLUMNS)
    for col in ("scenario", "replicate", "period", "group", "hcc"):
        df[col] = df[col].astype("Int64")
    for col in ("undercoding_level", "upcoding_degree", "time", "value", "variance"):
        df[col] = df[col].astype(float)
    return df


def run_scenario(config: ScenarioConfig, threads: int = 1, replicates=None) -> pd.DataFrame:
    """Run every cell of ``config`` and return the tidy result table.

    Rows are ordered by cell, then replicate, whatever the execution order,
    so output is identical for any ``threads``. ``replicates`` selects a
    subset of replicate indices.
    """
    reps = range(config.replicates) if replicates is None else list(replicates)
    tasks = [(config, r, u, d) for u, d in config.cells() for r in reps]
    if threads > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(_run_task, tasks, chunksize=max(1, len(tasks) // (4 * threads))))
    else:
        chunks = [_run_task(t) for t in tasks]
    return _frame([row for chunk in chunks for row in chunk])


def aggregate(results: pd.DataFrame) -> pd.DataFrame:
    """Per-cell mean, replicate standard deviation and mean analytic variance."""
    if results.empty:
        raise ValueError("no results to aggregate")
    # fixed summation order, so replicate ordering cannot change the floats
    ordered = results.sort_values(["replicate"] + CELL_KEYS, kind="mergesort", na_position="first")
    g = ordered.groupby(CELL_KEYS, dropna=False, sort=True)
    out = g.agg(replicates=("value", "size"), mean=("value", "mean"), sd=("value", "std"),
                mean_variance=("variance", "mean")).reset_index()
    out["sd"] = out["sd"].fillna(0.0)
    return out[SUMMARY_COLUMNS]


def _require(results: pd.DataFrame, estimator: str) -> pd.DataFrame:
    sub = results[results["estimator"] == estimator]
    if sub.empty:
        raise ValueError(f"results contain no {estimator!r} rows")
    return sub


def emit_plot_data(results: pd.DataFrame, kind: str, path=None, degree=None, hcc=None) -> pd.DataFrame:
    """Replicate-averaged series for one figure type, optionally written to ``path``.

    ``cif`` uses the target HCC (or ``hcc``) at ``degree`` (default: the
    largest MA degree); ``psi`` and ``deci`` cover every cell.
    """
    if kind not in PLOT_COLUMNS:
        raise ValueError(f"unknown plot kind {kind!r}; choose from {sorted(PLOT_COLUMNS)}")
    if kind == "cif":
        sub = _require(results, "F_hat")
        if hcc is None:
            hcc = int(_require(results, "psi")["hcc"].iloc[0])
        degree = sub["upcoding_degree"].max() if degree is None else degree
        sub = sub[(sub["hcc"] == hcc) & np.isclose(sub["upcoding_degree"], degree)]
        if sub.empty:
            raise ValueError(f"no F_hat rows for HCC{hcc} at degree {degree}")
        out = sub.groupby(["time", "group", "period", "undercoding_level"], sort=True)["value"].mean().reset_index()
        out = out.rename(columns={"undercoding_level": "undercoding", "value": "F_hat"})
    else:
        sub = _require(results, "psi" if kind == "psi" else "deci")
        keys = ["upcoding_degree", "period", "undercoding_level"]
        if kind == "deci":
            keys = ["undercoding_level", "upcoding_degree", "period"]
        out = sub.groupby(keys, sort=True)["value"].mean().reset_index()
        out = out.rename(columns={"undercoding_level": "undercoding", "upcoding_degree": "degree",
                                  "value": "psi_hat" if kind == "psi" else "deci"})
    out = out[PLOT_COLUMNS[kind]]
    if path is not None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        out.to_csv(path, index=False)
    return out
