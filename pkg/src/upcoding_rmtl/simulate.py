"""Labeled coding-data simulator.

Baseline cohorts are drawn from a weighted table of co-occurring HCC sets and
then transformed: dataset-wide undercoding, any-available or severity-based
upcoding split across reporting times, and loss-to-follow-up censoring. Every
transformation is a pure function of its input cohort and random stream.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from .catalog import HccCatalog, severity_set_of
from .cohort import Cohort, TimeGrid

__all__ = [
    "RngStream",
    "as_generator",
    "CooccurrenceTable",
    "load_cooccurrence",
    "UpcodeSpec",
    "sample_baseline",
    "apply_undercoding",
    "apply_upcoding",
    "apply_ltfu",
]

BUNDLED_TABLE = "cooccurrence_synthetic.csv"


@dataclass(frozen=True)
class RngStream:
    """Reproducible random stream keyed by a seed and a stream id.

    ``stream_id`` may be an int or a tuple of ints (e.g. ``(cell, replicate)``);
    distinct ids give statistically independent streams.
    """

    seed: int
    stream_id: int | tuple = 0

    def generator(self) -> np.random.Generator:
        key = self.stream_id if isinstance(self.stream_id, tuple) else (self.stream_id,)
        return np.random.Generator(np.random.PCG64(np.random.SeedSequence(self.seed, spawn_key=key)))


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngStream):
        return rng.generator()
    if rng is None or isinstance(rng, (int, np.integer, np.random.SeedSequence)):
        return np.random.default_rng(rng)
    raise TypeError(f"cannot build a random generator from {rng!r}")


def _check_proportion(p, name):
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {p}")


@dataclass(frozen=True)
class CooccurrenceTable:
    """Unique co-occurring HCC sets with respondent counts used as weights."""

    sets: tuple[tuple[int, ...], ...]
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if len(self.sets) == 0:
            raise ValueError("co-occurrence table is empty")
        if len(w) != len(self.sets):
            raise ValueError("one weight per HCC set is required")
        if (w <= 0).any() or not np.isfinite(w).all():
            raise ValueError("weights must be positive and finite")
        object.__setattr__(self, "sets", tuple(tuple(sorted(int(h) for h in s)) for s in self.sets))
        object.__setattr__(self, "weights", w)

    def validate(self, catalog: HccCatalog) -> "CooccurrenceTable":
        for s in self.sets:
            catalog.validate_set(s)
        return self

    def probabilities(self) -> np.ndarray:
        return self.weights / self.weights.sum()

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["hcc_set", "weight"])
        for s, wt in zip(self.sets, self.weights):
            w.writerow([";".join(map(str, s)), int(wt) if float(wt).is_integer() else wt])
        return buf.getvalue()


def load_cooccurrence(path: str | Path | None = None, catalog: HccCatalog | None = None) -> CooccurrenceTable:
    """Read an ``hcc_set,weight`` CSV; ``None`` loads the bundled synthetic table."""
    if path is None:
        text = resources.files("upcoding_rmtl.data").joinpath(BUNDLED_TABLE).read_text()
        source = BUNDLED_TABLE
    else:
        text = Path(path).read_text()
        source = str(path)
    reader = csv.reader(io.StringIO(text))
    if [h.strip() for h in next(reader, [])] != ["hcc_set", "weight"]:
        raise ValueError(f"{source}: expected header 'hcc_set,weight'")
    sets, weights = [], []
    for row in reader:
        if not row:
            continue
        try:
            sets.append(tuple(int(h.strip().upper().removeprefix("HCC")) for h in row[0].split(";") if h.strip()))
            weights.append(float(row[1]))
        except (ValueError, IndexError):
            raise ValueError(f"{source}:{reader.line_num}: malformed row {row!r}") from None
    table = CooccurrenceTable(tuple(sets), np.asarray(weights))
    return table.validate(catalog) if catalog is not None else table


def sample_baseline(
    table: CooccurrenceTable, n: int, rng=None, group: int = 1, grid: TimeGrid | None = None
) -> Cohort:
    """Draw ``n`` individuals' baseline HCC sets with probability proportional to weight.

    Baseline codes are prevalent and carry time index 0; nobody is censored.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    gen = as_generator(rng)
    sizes = np.array([len(s) for s in table.sets], dtype=np.int64)
    flat = np.array([h for s in table.sets for h in s], dtype=np.int16)
    starts = np.concatenate([[0], np.cumsum(sizes)[:-1]])

    idx = gen.choice(len(sizes), size=n, p=table.probabilities())
    per = sizes[idx]
    total = int(per.sum())
    person = np.repeat(np.arange(n, dtype=np.int32), per)
    within = np.arange(total) - np.repeat(np.cumsum(per) - per, per)
    hcc = flat[np.repeat(starts[idx], per) + within]
    return Cohort(
        n=n,
        person=person,
        hcc=hcc,
        time=np.zeros(total, dtype=np.int16),
        group=group,
        grid=grid or TimeGrid(),
    )


def apply_undercoding(cohort: Cohort, p: float, rng=None) -> Cohort:
    """Delete ``round(p * codes)`` coded diagnoses chosen uniformly across the dataset."""
    _check_proportion(p, "undercoding proportion")
    k = round(p * cohort.n_codes)
    if k == 0:
        return cohort
    drop = as_generator(rng).choice(cohort.n_codes, size=k, replace=False)
    keep = np.ones(cohort.n_codes, dtype=bool)
    keep[drop] = False
    return cohort.with_codes(cohort.person[keep], cohort.hcc[keep], cohort.time[keep])


def apply_ltfu(cohort: Cohort, p_per_timepoint: float, rng=None, time_points: Sequence[int] | None = None) -> Cohort:
    """Right-censor ``round(p * uncensored)`` individuals at each time point.

    Censoring is absorbing: an individual censored at ``t`` keeps codes at or
    before ``t`` and receives none afterwards.
    """
    _check_proportion(p_per_timepoint, "loss-to-follow-up proportion")
    if time_points is None:
        time_points = range(1, cohort.grid.horizon + 1)
    gen = as_generator(rng)
    censor = cohort.censor_time.copy()
    for t in sorted(time_points):
        at_risk = np.flatnonzero(censor >= t)
        k = round(p_per_timepoint * len(at_risk))
        if k:
            censor[gen.choice(at_risk, size=k, replace=False)] = t
    keep = cohort.time <= censor[cohort.person]
    return cohort.with_codes(cohort.person[keep], cohort.hcc[keep], cohort.time[keep], censor)


@dataclass(frozen=True)
class UpcodeSpec:
    """Upcoding of ``target`` to ``degree`` of the eligible pool over ``time_points``.

    ``selection`` is ``"exact"`` (``round(degree * pool)`` individuals drawn
    without replacement) or ``"bernoulli"`` (each eligible individual selected
    independently with probability ``degree``). ``split`` is ``"uniform"``
    (each selected individual gets a uniformly drawn time point) or
    ``"quota"`` (equal counts per time point, remainder at random).
    """

    target: int
    mode: str = "any_available"
    degree: float = 0.0
    time_points: tuple[int, ...] = (1, 2, 3, 4)
    selection: str = "exact"
    split: str = "uniform"

    def __post_init__(self):
        if self.mode not in ("any_available", "severity_based"):
            raise ValueError(f"unknown upcoding mode {self.mode!r}")
        if self.selection not in ("exact", "bernoulli"):
            raise ValueError(f"unknown selection {self.selection!r}")
        if self.split not in ("uniform", "quota"):
            raise ValueError(f"unknown split {self.split!r}")
        _check_proportion(self.degree, "upcoding degree")
        if len(self.time_points) == 0:
            raise ValueError("at least one time point is required")
        object.__setattr__(self, "time_points", tuple(sorted(int(t) for t in self.time_points)))


def _eligible(cohort: Cohort, spec: UpcodeSpec, catalog: HccCatalog) -> tuple[np.ndarray, tuple[int, ...]]:
    start = spec.time_points[0]
    uncensored = cohort.censor_time >= start
    if spec.mode == "any_available":
        blocked = {spec.target} | catalog.excluded_by(spec.target)
        has = np.zeros(cohort.n, dtype=bool)
        has[cohort.person[np.isin(cohort.hcc, list(blocked))]] = True
        return np.flatnonzero(uncensored & ~has), ()
    sset = severity_set_of(catalog, spec.target)
    if sset.k < 2:
        raise ValueError(f"severity-based upcoding needs competing events; HCC{spec.target} has none")
    lower = sset.members[: sset.index(spec.target) - 1]
    if not lower:
        raise ValueError(f"HCC{spec.target} is the least severe member of {sset.members}")
    sel = np.isin(cohort.hcc, lower) & (cohort.time < start)
    holder = np.zeros(cohort.n, dtype=bool)
    holder[cohort.person[sel]] = True
    return np.flatnonzero(uncensored & holder), lower


def apply_upcoding(cohort: Cohort, spec: UpcodeSpec, catalog: HccCatalog, rng=None) -> Cohort:
    """Upcode ``spec.target`` in a share of the eligible pool.

    Eligibility is evaluated at the first of ``spec.time_points``:
    any-available upcoding targets uncensored individuals with no code that
    excludes the target; severity-based upcoding targets uncensored
    individuals currently coded with a lower-severity member, whose code is
    replaced by the target. Selected individuals censored before their drawn
    time point are left unchanged.
    """
    if spec.target not in catalog:
        raise KeyError(f"HCC{spec.target} is not in the catalog")
    if spec.time_points[0] < 1 or spec.time_points[-1] > cohort.grid.horizon:
        raise ValueError(f"time points {spec.time_points} outside 1..{cohort.grid.horizon}")
    pool, lower = _eligible(cohort, spec, catalog)
    if spec.degree == 0 or len(pool) == 0:
        return cohort

    gen = as_generator(rng)
    if spec.selection == "exact":
        chosen = gen.choice(pool, size=round(spec.degree * len(pool)), replace=False)
    else:
        chosen = pool[gen.random(len(pool)) < spec.degree]
    if len(chosen) == 0:
        return cohort

    tp = np.asarray(spec.time_points, dtype=np.int16)
    if spec.split == "uniform":
        when = gen.choice(tp, size=len(chosen))
    else:
        base, extra = divmod(len(chosen), len(tp))
        quota = np.full(len(tp), base)
        quota[gen.choice(len(tp), size=extra, replace=False)] += 1
        when = gen.permutation(np.repeat(tp, quota))

    ok = cohort.censor_time[chosen] >= when
    chosen, when = chosen[ok], when[ok]

    person, hcc, time = cohort.person, cohort.hcc, cohort.time
    if lower:
        hit = np.zeros(cohort.n, dtype=bool)
        hit[chosen] = True
        keep = ~(hit[person] & np.isin(hcc, lower))
        person, hcc, time = person[keep], hcc[keep], time[keep]
    return cohort.with_codes(
        np.concatenate([person, chosen.astype(np.int32)]),
        np.concatenate([hcc, np.full(len(chosen), spec.target, dtype=np.int16)]),
        np.concatenate([time, when.astype(np.int16)]),
    )
