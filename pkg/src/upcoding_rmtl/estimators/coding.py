"""Coding-intensity quantities that do not use event times.

Both variances here are heuristics: the persistence-based underreporting
estimate uses the between-event spread of persistence, and the count ratio
uses the delta method for a ratio of independent means.
"""

from __future__ import annotations

import warnings

import numpy as np

from ..catalog import HccCatalog
from ..cohort import Cohort
from .rmtl import Estimate

__all__ = ["persistence", "epsilon_hat", "deci_dagger"]


def persistence(previous: Cohort, current: Cohort, hcc: int) -> tuple[float, int]:
    """Share of ``current`` coders of ``hcc`` also coded in ``previous``, and the coder count."""
    now = current.coded(hcc)
    count = int(now.sum())
    if count == 0:
        return float("nan"), 0
    return float((now & previous.coded(hcc)).sum() / count), count


def epsilon_hat(previous: Cohort, current: Cohort, reference_events, catalog: HccCatalog | None = None) -> Estimate:
    """Underreporting proportion from reference-event persistence.

    Parameters
    ----------
    previous, current : Cohort
        Coding records of the same individuals in periods ``m - 1`` and ``m``.
    reference_events : sequence of int
        HCCs without competing events that are expected to persist.
    catalog : HccCatalog, optional
        When given, reference events with competing events are rejected.

    Returns
    -------
    Estimate
        ``1 - mean persistence``. The variance is the sample variance of the
        per-event persistences over ``h``; with a single event it falls back
        to the binomial variance of that persistence.
    """
    if previous.n != current.n:
        raise ValueError("period records must cover the same individuals")
    refs = [int(h) for h in reference_events]
    if not refs:
        raise ValueError("at least one reference event is required")
    if catalog is not None:
        bad = [h for h in refs if catalog.excluded_by(h)]
        if bad:
            raise ValueError(f"reference events must not have competing events: {bad}")

    q, counts = [], []
    for h in refs:
        value, count = persistence(previous, current, h)
        if count == 0:
            warnings.warn(f"reference event HCC{h} has no coders in the current period; skipped", RuntimeWarning)
            continue
        q.append(value)
        counts.append(count)
    if not q:
        raise ValueError("no reference event has coders in the current period")

    q = np.asarray(q)
    h = len(q)
    if h > 1:
        var = q.var(ddof=1) / h
    else:
        var = q[0] * (1 - q[0]) / counts[0]
    return Estimate(1.0 - q.mean(), var)


def deci_dagger(cohort_g1: Cohort, cohort_g0: Cohort, period_end: int) -> Estimate:
    """Ratio of mean coded-HCC counts per individual, coded at or before ``period_end``."""
    a = cohort_g1.counts(by=period_end).astype(float)
    b = cohort_g0.counts(by=period_end).astype(float)
    ma, mb = a.mean(), b.mean()
    if mb == 0:
        raise ZeroDivisionError("comparison group has no coded HCCs")
    va = a.var(ddof=1) / len(a) if len(a) > 1 else 0.0
    vb = b.var(ddof=1) / len(b) if len(b) > 1 else 0.0
    ratio = ma / mb
    return Estimate(ratio, va / mb**2 + ratio**2 * vb / mb**2)
