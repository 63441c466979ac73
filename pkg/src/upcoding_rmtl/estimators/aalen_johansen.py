r"""Event tables and the event-specific cumulative incidence estimator.

For subtype :math:`s` at reporting time :math:`t_i`, with :math:`d_{s,i}` events,
:math:`d_i = \sum_s d_{s,i}` and :math:`r_i` at risk,

.. math::

    \hat\theta_s(t_i) = \hat S(t_i^-) \frac{d_{s,i}}{r_i}, \qquad
    \hat S(t_i^-) = \prod_{t_l < t_i} \left(1 - \frac{d_l}{r_l}\right), \qquad
    \hat F_s(t) = \sum_{t_i \le t} \hat\theta_s(t_i).

Increment covariances follow the first-order delta method with multinomial
hazard estimates. Writing :math:`G_i = \sum_{t_l < t_i} d_l / (r_l (r_l - d_l))`
(Greenwood's sum) and :math:`j \le i`,

.. math::

    \widehat{\mathrm{cov}}(\hat\theta_a(t_j), \hat\theta_b(t_i))
    = \hat\theta_a(t_j)\hat\theta_b(t_i)\left(G_j - \frac{1}{r_j}
      + \frac{[a = b,\ i = j]}{d_{a,j}}\right),

which for :math:`a = b, i = j` is
:math:`\hat\theta^2 ((r - d_s)/(d_s r) + G)`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ..catalog import SeveritySet
from ..cohort import Cohort
from .validation import check_event_data

__all__ = [
    "EmptyRiskSetError",
    "UndefinedHazardError",
    "EventTable",
    "CifCurve",
    "event_table",
    "build_event_table",
    "event_specific_hazard",
    "cumulative_incidence",
    "CumulativeIncidence",
]


class EmptyRiskSetError(ValueError):
    pass


class UndefinedHazardError(ZeroDivisionError):
    pass


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class EventTable:
    """Counts at each reporting time of one group and monitoring period.

    ``events[s - 1, i]`` is :math:`d_{s,i}`; ``censored[i]`` counts
    individuals leaving without an event at ``times[i]`` (after that time's
    events); ``at_risk[i]`` is :math:`r_i`.
    """

    times: np.ndarray
    events: np.ndarray
    censored: np.ndarray
    at_risk: np.ndarray
    tau: float
    members: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "times", _frozen(self.times))
        object.__setattr__(self, "events", _frozen(np.atleast_2d(self.events), np.int64))
        object.__setattr__(self, "censored", _frozen(self.censored, np.int64))
        object.__setattr__(self, "at_risk", _frozen(self.at_risk, np.int64))
        T = len(self.times)
        if self.events.shape[1] != T or self.censored.shape != (T,) or self.at_risk.shape != (T,):
            raise ValueError("event table arrays disagree on the number of times")
        if T and np.any(np.diff(self.times) <= 0):
            raise ValueError("reporting times must be strictly increasing")
        if (self.events < 0).any() or (self.censored < 0).any() or (self.at_risk < 0).any():
            raise ValueError("event table counts must be non-negative")
        exits = self.events.sum(axis=0) + self.censored
        if (exits > self.at_risk).any():
            raise ValueError("more exits than individuals at risk")
        if T > 1 and not np.array_equal(self.at_risk[1:], self.at_risk[:-1] - exits[:-1]):
            raise ValueError("risk sets must satisfy r[i+1] = r[i] - d[i] - c[i]")
        if self.members and len(self.members) != self.k:
            raise ValueError("one member label per subtype is required")

    @property
    def k(self) -> int:
        return self.events.shape[0]

    @property
    def d(self) -> np.ndarray:
        """All-subtype event counts :math:`d_i`."""
        return self.events.sum(axis=0)


def event_table(time, event, times=None, n_subtypes=None, tau=None, members=()) -> EventTable:
    """Tabulate individual ``(time, event)`` records on a reporting grid.

    Every record counts in the initial risk set. ``times`` defaults to the
    distinct observed times and must contain every observed time; ``tau``
    defaults to the last reporting time.
    """
    time, event = check_event_data(time, event)
    grid = np.unique(time) if times is None else np.asarray(times, dtype=float)
    idx = np.searchsorted(grid, time)
    if (idx >= len(grid)).any() or not np.array_equal(grid[np.minimum(idx, len(grid) - 1)], time):
        raise ValueError("observed times must lie on the reporting grid")
    k = int(n_subtypes) if n_subtypes is not None else max(int(event.max()), 1)
    if event.max() > k:
        raise ValueError(f"event codes exceed the {k} declared subtypes")
    T = len(grid)
    hit = event > 0
    d = np.bincount((event[hit] - 1) * T + idx[hit], minlength=k * T).reshape(k, T)
    c = np.bincount(idx[~hit], minlength=T)
    exits = d.sum(axis=0) + c
    r = len(time) - np.concatenate([[0], np.cumsum(exits)[:-1]])
    return EventTable(grid, d, c, r, float(grid[-1] if tau is None else tau), tuple(members))


def build_event_table(cohort: Cohort, sset: SeveritySet, period: int, risk_set: str = "fixed") -> EventTable:
    """Incident-coding event table for one severity set and monitoring period.

    Times are measured from the period origin, so the period's reporting
    times are ``spacing * (1..P)`` and ``tau`` is one spacing past the last.
    Individuals censored before the period starts are excluded, as are
    individuals whose code for the set is prevalent. With ``risk_set="fixed"``
    a code is prevalent when it was present at baseline (time index 0), so
    the population at risk stays fixed across periods and individuals coded
    in an earlier period remain in the denominator without further events.
    With ``risk_set="period"`` any code before the period start is
    prevalent. Within the period, coding of any member removes the
    individual from the risk set.
    """
    if risk_set not in ("fixed", "period"):
        raise ValueError(f"unknown risk_set rule {risk_set!r}")
    grid = cohort.grid
    start, end = grid.period_start(period), grid.period_end(period)
    s, t = cohort.state(sset.members)
    censor = cohort.censor_time.astype(np.int64)

    prevalent = (s > 0) & ((t == 0) if risk_set == "fixed" else (t < start))
    observed = censor >= start
    keep = observed & ~prevalent
    if not keep.any():
        raise EmptyRiskSetError(f"no individuals at risk at the start of period {period}")

    s, t, censor = s[keep], t[keep], censor[keep]
    incident = (s > 0) & (t >= start) & (t <= end)
    when = np.where(incident, t, np.minimum(censor, end))
    event = np.where(incident, s, 0)
    local = grid.local_times()
    return event_table(
        local[when - start],
        event,
        times=local,
        n_subtypes=sset.k,
        tau=grid.default_tau(),
        members=sset.members,
    )


def event_specific_hazard(table: EventTable, t, s: int = 1) -> float:
    """:math:`d_{s,i} / r_i` at reporting time ``t``."""
    i = np.searchsorted(table.times, t)
    if i >= len(table.times) or table.times[i] != t:
        raise KeyError(f"{t} is not a reporting time of this table")
    if not 1 <= s <= table.k:
        raise KeyError(f"subtype {s} outside 1..{table.k}")
    r = table.at_risk[i]
    if r == 0:
        raise UndefinedHazardError(f"nobody at risk at t={t}")
    return table.events[s - 1, i] / r


@dataclass(frozen=True, eq=False)
class CifCurve:
    """Cumulative incidence of every subtype with its joint covariance.

    ``cif[s - 1, i]`` is :math:`\\hat F_s(t_i)`; ``cif_cov[a, b, i, j]`` is
    :math:`\\widehat{\\mathrm{cov}}(\\hat F_{a+1}(t_i), \\hat F_{b+1}(t_j))`;
    ``theta`` and ``theta_cov`` hold the increments and their covariance;
    ``survival[i]`` is the overall Kaplan-Meier estimate just after ``t_i``.
    """

    times: np.ndarray
    theta: np.ndarray
    theta_cov: np.ndarray
    cif: np.ndarray
    cif_cov: np.ndarray
    survival: np.ndarray
    tau: float
    members: tuple = field(default=())

    @property
    def k(self) -> int:
        return self.cif.shape[0]

    def variance(self, s: int = 1) -> np.ndarray:
        """:math:`\\widehat{\\mathrm{var}}(\\hat F_s(t_i))` at every reporting time."""
        return np.diagonal(self.cif_cov[s - 1, s - 1]).copy()

    def subtype(self, s) -> int:
        """Resolve an HCC label (when ``members`` is set) or index to ``1..k``."""
        if self.members and int(s) in self.members:
            return self.members.index(int(s)) + 1
        if isinstance(s, (int, np.integer)) and 1 <= s <= self.k:
            return int(s)
        raise KeyError(f"unknown subtype {s!r}")

    def at(self, t, s: int = 1) -> np.ndarray:
        """Right-continuous step evaluation of :math:`\\hat F_s` at ``t``."""
        t = np.asarray(t, dtype=float)
        i = np.searchsorted(self.times, t, side="right")
        padded = np.concatenate([[0.0], self.cif[s - 1]])
        return padded[i]


def cumulative_incidence(table: EventTable) -> CifCurve:
    """Aalen-Johansen cumulative incidence curves with delta-method covariance.

    Times with nobody at risk contribute no increment, so curves stay flat
    after the risk set is exhausted.
    """
    d_s = table.events.astype(float)
    d = d_s.sum(axis=0)
    r = table.at_risk.astype(float)
    live = r > 0
    inv_r = np.divide(1.0, r, out=np.zeros_like(r), where=live)

    overall = d * inv_r
    surv_after = np.cumprod(1.0 - overall)
    surv_before = np.concatenate([[1.0], surv_after[:-1]])
    theta = surv_before * d_s * inv_r

    # Greenwood terms where everyone has an event only multiply zero increments
    gw_ok = live & (r > d)
    gw = np.divide(d, r * (r - d), out=np.zeros_like(r), where=gw_ok)
    G = np.concatenate([[0.0], np.cumsum(gw)[:-1]])

    T, k = len(r), table.k
    first = np.minimum.outer(np.arange(T), np.arange(T))
    rel = G[first] - inv_r[first]
    theta_cov = theta[:, None, :, None] * theta[None, :, None, :] * rel[None, None]
    own = surv_before**2 * d_s * inv_r**2
    for a in range(k):
        theta_cov[a, a][np.diag_indices(T)] += own[a]

    L = np.tril(np.ones((T, T)))
    cif_cov = np.einsum("ij,abjl,ml->abim", L, theta_cov, L)
    return CifCurve(
        times=table.times,
        theta=theta,
        theta_cov=theta_cov,
        cif=np.cumsum(theta, axis=1),
        cif_cov=cif_cov,
        survival=surv_after,
        tau=table.tau,
        members=table.members,
    )


class CumulativeIncidence(BaseEstimator):
    """Event-specific cumulative incidence estimator for discrete reporting times.

    Parameters
    ----------
    times : array-like, optional
        Reporting grid. Defaults to the distinct observed times.
    tau : float, optional
        End of the monitoring period, used by :meth:`rmtl`. Defaults to the
        last reporting time.

    Attributes
    ----------
    table_ : EventTable
    curve_ : CifCurve
    times_ : ndarray of shape (T,)
    cumulative_incidence_ : ndarray of shape (k, T)
    variance_ : ndarray of shape (k, T)
    survival_ : ndarray of shape (T,)
    """

    def __init__(self, times=None, tau=None):
        self.times = times
        self.tau = tau

    def fit(self, time, event, n_subtypes=None):
        """Fit on ``time`` and ``event`` (0 = censored, ``s`` = subtype)."""
        self.table_ = event_table(time, event, times=self.times, n_subtypes=n_subtypes, tau=self.tau)
        self.curve_ = cumulative_incidence(self.table_)
        self.times_ = self.curve_.times
        self.cumulative_incidence_ = self.curve_.cif
        self.variance_ = np.stack([self.curve_.variance(s) for s in range(1, self.curve_.k + 1)])
        self.survival_ = self.curve_.survival
        return self

    def predict(self, t):
        """Step-function :math:`\\hat F_s(t)` for every subtype, shape (k, len(t))."""
        check_is_fitted(self, "curve_")
        t = np.atleast_1d(t)
        return np.stack([self.curve_.at(t, s) for s in range(1, self.curve_.k + 1)])

    def rmtl(self, s: int = 1, tau=None):
        from .rmtl import rmtl

        check_is_fitted(self, "curve_")
        return rmtl(self.curve_, s=s, tau=tau)
