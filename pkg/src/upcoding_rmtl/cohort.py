"""Fixed-population coding data shared by the simulator and the estimators.

A cohort stores coded diagnoses in long (coordinate) form: one entry per
``(individual, HCC)`` with the integer time index of its first coding. Time
index 0 holds prevalent baseline codes; monitoring period ``m`` (1-based)
covers the indices ``(m - 1) * P + 1 .. m * P`` for ``P`` reporting times per
period.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import pandas as pd

from .catalog import HccCatalog, SeveritySet

__all__ = ["NEVER", "TimeGrid", "Cohort", "CohortError", "read_cohorts", "write_cohorts"]

# censor_time for individuals never lost to follow-up
NEVER = np.iinfo(np.int32).max
# HCC numbers are below this bound (V28 tops out at 463)
_HCC_SPACE = 1024

COHORT_COLUMNS = ["individual_id", "group", "hcc", "coded_time", "censor_time"]


class CohortError(ValueError):
    pass


@dataclass(frozen=True)
class TimeGrid:
    """Discrete reporting grid: ``n_periods`` periods of ``points_per_period`` times.

    ``spacing`` is the width between consecutive reporting times, used as the
    interval weight in restricted-mean sums.
    """

    n_periods: int = 2
    points_per_period: int = 4
    spacing: float = 1.0

    def __post_init__(self):
        if self.n_periods < 1 or self.points_per_period < 1:
            raise CohortError("time grid needs at least one period and one time point")
        if not self.spacing > 0:
            raise CohortError("spacing must be positive")

    @property
    def horizon(self) -> int:
        return self.n_periods * self.points_per_period

    def check_period(self, period: int) -> None:
        if not 1 <= period <= self.n_periods:
            raise CohortError(f"period {period} outside 1..{self.n_periods}")

    def period_start(self, period: int) -> int:
        self.check_period(period)
        return (period - 1) * self.points_per_period + 1

    def period_end(self, period: int) -> int:
        self.check_period(period)
        return period * self.points_per_period

    def period_indices(self, period: int) -> np.ndarray:
        return np.arange(self.period_start(period), self.period_end(period) + 1)

    def local_times(self) -> np.ndarray:
        """Reporting times measured from the period origin."""
        return self.spacing * np.arange(1, self.points_per_period + 1, dtype=float)

    def default_tau(self) -> float:
        # one interval past the last report, so last-report events carry area
        return self.spacing * (self.points_per_period + 1)


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Cohort:
    """Immutable cohort of ``n`` individuals in one group.

    Parameters
    ----------
    n : int
        Number of individuals; ids are ``0 .. n-1``.
    person, hcc, time : array-like
        Parallel arrays with one entry per coded ``(individual, HCC)``.
    censor_time : array-like of shape (n,), optional
        Last time index each individual is observed; :data:`NEVER` if never
        lost to follow-up.
    group : int
        1 for the Medicare Advantage-like group, 0 for the comparison group.
    """

    n: int
    person: np.ndarray
    hcc: np.ndarray
    time: np.ndarray
    censor_time: np.ndarray = None
    group: int = 1
    grid: TimeGrid = field(default_factory=TimeGrid)

    def __post_init__(self):
        if self.n < 1:
            raise CohortError("a cohort needs at least one individual")
        object.__setattr__(self, "person", _frozen(self.person, np.int32))
        object.__setattr__(self, "hcc", _frozen(self.hcc, np.int16))
        object.__setattr__(self, "time", _frozen(self.time, np.int16))
        ct = np.full(self.n, NEVER, dtype=np.int32) if self.censor_time is None else self.censor_time
        object.__setattr__(self, "censor_time", _frozen(ct, np.int32))
        if not (len(self.person) == len(self.hcc) == len(self.time)):
            raise CohortError("person, hcc and time must have equal length")
        if self.censor_time.shape != (self.n,):
            raise CohortError("censor_time must have one entry per individual")
        if self.group not in (0, 1):
            raise CohortError("group must be 0 or 1")

    @property
    def n_codes(self) -> int:
        return len(self.person)

    def with_codes(self, person, hcc, time, censor_time=None) -> "Cohort":
        return replace(
            self,
            person=person,
            hcc=hcc,
            time=time,
            censor_time=self.censor_time if censor_time is None else censor_time,
        )

    def coded(self, hcc: int, by: int | None = None) -> np.ndarray:
        """Boolean mask of individuals coded with ``hcc`` (at or before ``by``)."""
        sel = self.hcc == hcc
        if by is not None:
            sel &= self.time <= by
        out = np.zeros(self.n, dtype=bool)
        out[self.person[sel]] = True
        return out

    def state(self, members) -> tuple[np.ndarray, np.ndarray]:
        """Per-individual coded member of ``members`` and its time.

        Returns ``(s, t)`` where ``s`` is the 1-based position in ``members``
        (0 when none is coded) and ``t`` the coding time (-1 when none).
        """
        lut = np.zeros(_HCC_SPACE, dtype=np.int16)
        lut[np.asarray(tuple(members), dtype=np.int64)] = np.arange(1, len(tuple(members)) + 1)
        s_entry = lut[self.hcc]
        sel = s_entry > 0
        s = np.zeros(self.n, dtype=np.int16)
        t = np.full(self.n, -1, dtype=np.int32)
        s[self.person[sel]] = s_entry[sel]
        t[self.person[sel]] = self.time[sel]
        return s, t

    def counts(self, by: int | None = None) -> np.ndarray:
        """Number of coded HCCs per individual (at or before ``by``)."""
        sel = slice(None) if by is None else self.time <= by
        return np.bincount(self.person[sel], minlength=self.n)

    def validate(self, catalog: HccCatalog | None = None) -> "Cohort":
        """Check cohort invariants; return ``self`` so calls can chain."""
        if self.n_codes:
            if self.person.min() < 0 or self.person.max() >= self.n:
                raise CohortError("person ids outside 0..n-1")
            if self.time.min() < 0 or self.time.max() > self.grid.horizon:
                raise CohortError(f"coded times outside 0..{self.grid.horizon}")
            key = self.person.astype(np.int64) * _HCC_SPACE + self.hcc
            if len(np.unique(key)) != len(key):
                raise CohortError("an individual is coded twice with the same HCC")
            late = self.time > self.censor_time[self.person]
            if late.any():
                i = int(np.flatnonzero(late)[0])
                raise CohortError(
                    f"individual {self.person[i]} coded with HCC{self.hcc[i]} at "
                    f"{self.time[i]} after censoring at {self.censor_time[self.person[i]]}"
                )
        if catalog is not None:
            unknown = set(np.unique(self.hcc).tolist()) - set(catalog.codes)
            if unknown:
                raise CohortError(f"HCCs not in catalog: {sorted(unknown)}")
            for a, b in catalog.exclusion_pairs():
                both = np.intersect1d(self.person[self.hcc == a], self.person[self.hcc == b])
                if both.size:
                    raise CohortError(
                        f"individual {both[0]} coded with both HCC{a} and HCC{b}, "
                        "which are mutually exclusive"
                    )
        return self

    def check_severity_set(self, sset: SeveritySet) -> None:
        sel = np.isin(self.hcc, np.asarray(sset.members))
        p = self.person[sel]
        if len(np.unique(p)) != len(p):
            raise CohortError(f"individual coded with two members of {sset.members}")

    def to_frame(self) -> pd.DataFrame:
        """Long format: one row per code, plus one blank row per uncoded individual."""
        ct = np.where(self.censor_time == NEVER, -1, self.censor_time)
        coded = pd.DataFrame(
            {
                "individual_id": self.person.astype(np.int64),
                "group": self.group,
                "hcc": pd.array(self.hcc, dtype="Int64"),
                "coded_time": pd.array(self.time, dtype="Int64"),
                "censor_time": ct[self.person],
            }
        )
        bare = np.setdiff1d(np.arange(self.n), self.person)
        empty = pd.DataFrame(
            {
                "individual_id": bare.astype(np.int64),
                "group": self.group,
                "hcc": pd.array([pd.NA] * len(bare), dtype="Int64"),
                "coded_time": pd.array([pd.NA] * len(bare), dtype="Int64"),
                "censor_time": ct[bare],
            }
        )
        df = pd.concat([coded, empty], ignore_index=True)
        df["censor_time"] = df["censor_time"].astype("Int64").mask(df["censor_time"] < 0)
        return df.sort_values(["individual_id", "hcc"], kind="mergesort").reset_index(drop=True)

    @classmethod
    def from_frame(cls, df: pd.DataFrame, group: int, grid: TimeGrid | None = None) -> "Cohort":
        df = df[df["group"] == group]
        if df.empty:
            raise CohortError(f"no rows for group {group}")
        ids, person = np.unique(df["individual_id"].to_numpy(), return_inverse=True)
        censor = np.full(len(ids), NEVER, dtype=np.int32)
        ct = pd.to_numeric(df["censor_time"]).to_numpy(dtype=float)
        has = ~np.isnan(ct)
        censor[person[has]] = ct[has].astype(np.int32)
        hcc = pd.to_numeric(df["hcc"]).to_numpy(dtype=float)
        coded = ~np.isnan(hcc)
        return cls(
            n=len(ids),
            person=person[coded],
            hcc=hcc[coded].astype(np.int16),
            time=pd.to_numeric(df["coded_time"]).to_numpy(dtype=float)[coded].astype(np.int16),
            censor_time=censor,
            group=group,
            grid=grid or TimeGrid(),
        )


def write_cohorts(path: str | Path, *cohorts: Cohort) -> None:
    frames = [c.to_frame() for c in cohorts]
    pd.concat(frames, ignore_index=True)[COHORT_COLUMNS].to_csv(path, index=False)


def read_cohorts(path: str | Path, grid: TimeGrid | None = None) -> dict[int, Cohort]:
    df = pd.read_csv(path, dtype={"hcc": "Int64", "coded_time": "Int64", "censor_time": "Int64"})
    missing = set(COHORT_COLUMNS) - set(df.columns)
    if missing:
        raise CohortError(f"{path}: missing columns {sorted(missing)}")
    return {int(g): Cohort.from_frame(df, int(g), grid) for g in sorted(df["group"].unique())}
