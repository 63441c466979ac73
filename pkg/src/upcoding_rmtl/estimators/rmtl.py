r"""Restricted mean time lost and the cross-group contrasts built on it.

On the grid :math:`t_0 = 0 < t_1 < \dots < t_T` with :math:`\hat F_s(t_0) = 0`,

.. math::

    \hat\mu_s(\tau) = \sum_{t_i < \tau} (\min(t_{i+1}, \tau) - t_i)\, \hat F_s(t_i),

so the variance is the quadratic form :math:`w^\top \hat\Sigma_F w` in the
interval weights.
"""

from __future__ import annotations

import warnings
from collections import Counter
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .aalen_johansen import CifCurve, cumulative_incidence, event_table
from .validation import check_event_data, check_proportion

__all__ = [
    "diagnostics",
    "GridMismatchError",
    "Estimate",
    "rmtl_weights",
    "rmtl",
    "rmtl_covariance",
    "psi_hat",
    "psi_star_hat",
    "psi_m_hat",
    "omega_hat",
    "RMTLContrast",
]

# counts of degenerate variance sums clamped to zero
diagnostics: Counter = Counter()

NEGATIVE_TOLERANCE = 1e-12


class GridMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class Estimate:
    """Point estimate with an analytic variance.

    ``support`` records the reporting times and ``tau`` behind an RMTL-based
    estimate so contrasts can refuse mismatched grids; ``period`` records the
    monitoring period for cross-period contrasts.
    """

    value: float
    variance: float
    support: tuple | None = None
    period: int | None = None

    def __post_init__(self):
        v = float(self.variance)
        if v < 0:
            diagnostics["variance_clamped"] += 1
            if v < -NEGATIVE_TOLERANCE:
                diagnostics["variance_clamped_large"] += 1
            v = 0.0
        object.__setattr__(self, "value", float(self.value))
        object.__setattr__(self, "variance", v)

    @property
    def se(self) -> float:
        return float(np.sqrt(self.variance))


def _support(curve: CifCurve, tau: float) -> tuple:
    return (tuple(float(t) for t in curve.times), float(tau))


def rmtl_weights(times, tau) -> np.ndarray:
    """Interval weights :math:`\\min(t_{i+1}, \\tau) - t_i` for ``t_i < tau``, zero otherwise."""
    times = np.asarray(times, dtype=float)
    if len(times) == 0 or tau < times[0]:
        raise ValueError(f"tau={tau} lies before the first reporting time")
    nxt = np.minimum(np.append(times[1:], np.inf), tau)
    return np.where(times < tau, nxt - times, 0.0)


def rmtl(curve: CifCurve, s: int = 1, tau=None, shift: float = 0.0, clamp: bool = False, period=None) -> Estimate:
    """Restricted mean time lost to subtype ``s`` up to ``tau``.

    ``shift`` adds a constant to :math:`\\hat F_s` at every reporting time,
    which leaves the variance unchanged. Shifted values above 1 trigger a
    warning and are capped at 1 only when ``clamp`` is set.
    """
    tau = curve.tau if tau is None else float(tau)
    s = curve.subtype(s)
    w = rmtl_weights(curve.times, tau)
    F = curve.cif[s - 1] + shift
    if shift and (F[w > 0] > 1).any():
        warnings.warn(
            f"shifted cumulative incidence exceeds 1 (max {F[w > 0].max():.4f})"
            + ("; capping at 1" if clamp else ""),
            RuntimeWarning,
            stacklevel=2,
        )
        if clamp:
            F = np.minimum(F, 1.0)
    C = curve.cif_cov[s - 1, s - 1]
    return Estimate(float(w @ F), float(w @ C @ w), _support(curve, tau), period)


def rmtl_covariance(curve: CifCurve, a: int, b: int, tau=None) -> float:
    """Covariance of :math:`\\hat\\mu_a(\\tau)` and :math:`\\hat\\mu_b(\\tau)` from one cohort."""
    tau = curve.tau if tau is None else float(tau)
    w = rmtl_weights(curve.times, tau)
    return float(w @ curve.cif_cov[curve.subtype(a) - 1, curve.subtype(b) - 1] @ w)


def _check_support(a: Estimate, b: Estimate) -> None:
    if a.support is not None and b.support is not None and a.support != b.support:
        raise GridMismatchError(f"estimates on different grids: {a.support} vs {b.support}")


def psi_hat(mu_g1: Estimate, mu_g0: Estimate) -> Estimate:
    """Cross-group RMTL difference for independent groups."""
    _check_support(mu_g1, mu_g0)
    if mu_g1.period != mu_g0.period:
        raise GridMismatchError(f"groups from different periods: {mu_g1.period} vs {mu_g0.period}")
    return Estimate(mu_g1.value - mu_g0.value, mu_g1.variance + mu_g0.variance, mu_g1.support, mu_g1.period)


def psi_star_hat(
    curve_g1: CifCurve,
    curve_g0: CifCurve,
    epsilon: float,
    tau=None,
    s: int = 1,
    clamp: bool = False,
    period=None,
) -> Estimate:
    """Cross-group RMTL difference with the comparison curve shifted by ``epsilon``."""
    check_proportion(epsilon, "epsilon")
    mu1 = rmtl(curve_g1, s=s, tau=tau, period=period)
    mu0 = rmtl(curve_g0, s=s, tau=tau, shift=epsilon, clamp=clamp, period=period)
    return psi_hat(mu1, mu0)


def psi_m_hat(psi_m: Estimate, psi_prev: Estimate) -> Estimate:
    """Change in a cross-group contrast between sequential monitoring periods.

    Works for both the unadjusted and the shifted contrasts; component
    estimates are treated as uncorrelated.
    """
    if psi_m.period is not None and psi_prev.period is not None and psi_m.period != psi_prev.period + 1:
        raise ValueError(f"periods {psi_prev.period} and {psi_m.period} are not sequential")
    period = psi_m.period
    return Estimate(psi_m.value - psi_prev.value, psi_m.variance + psi_prev.variance, None, period)


def _omega_group(curve: CifCurve, tau) -> Estimate:
    if curve.k < 2:
        raise ValueError("severity contrast needs at least two severity levels")
    k = curve.k
    mu_k = rmtl(curve, s=k, tau=tau)
    mu_1 = rmtl(curve, s=1, tau=tau)
    cov = rmtl_covariance(curve, k, 1, tau)
    return Estimate(mu_k.value - mu_1.value, mu_k.variance + mu_1.variance - 2 * cov, mu_k.support)


def omega_hat(curve_g1: CifCurve, curve_g0: CifCurve, tau=None, period=None) -> Estimate:
    """Cross-group difference of most-severe minus least-severe RMTL.

    Each curve carries all severity levels of one group, least severe first.
    """
    if curve_g1.k != curve_g0.k:
        raise GridMismatchError("groups disagree on the number of severity levels")
    w1 = _omega_group(curve_g1, tau)
    w0 = _omega_group(curve_g0, tau)
    _check_support(w1, w0)
    return Estimate(w1.value - w0.value, w1.variance + w0.variance, w1.support, period)


class RMTLContrast(BaseEstimator):
    """Two-group restricted mean time lost contrast.

    Parameters
    ----------
    tau : float, optional
        Restriction time. Defaults to the last reporting time.
    subtype : int, default=1
        Event subtype whose RMTL is compared.
    epsilon : float, default=0.0
        Underreporting shift applied to the comparison group (``group == 0``).
    times : array-like, optional
        Shared reporting grid. Defaults to the distinct observed times.

    Attributes
    ----------
    curves_ : dict of {0, 1} to CifCurve
    mu_ : dict of {0, 1} to Estimate
    psi_ : Estimate
    omega_ : Estimate or None
        Severity contrast, available when more than one subtype is observed.
    """

    def __init__(self, tau=None, subtype=1, epsilon=0.0, times=None):
        self.tau = tau
        self.subtype = subtype
        self.epsilon = epsilon
        self.times = times

    def fit(self, time, event, group, n_subtypes=None):
        time, event, group = check_event_data(time, event, group)
        if set(np.unique(group)) != {0, 1}:
            raise ValueError("both groups 0 and 1 must be present")
        grid = np.unique(time) if self.times is None else np.asarray(self.times, dtype=float)
        k = n_subtypes or max(int(event.max()), 1)
        tau = grid[-1] if self.tau is None else self.tau
        self.curves_ = {
            g: cumulative_incidence(event_table(time[group == g], event[group == g], grid, k, tau)) for g in (0, 1)
        }
        self.mu_ = {g: rmtl(self.curves_[g], s=self.subtype) for g in (0, 1)}
        self.psi_ = psi_star_hat(self.curves_[1], self.curves_[0], self.epsilon, s=self.subtype)
        self.omega_ = omega_hat(self.curves_[1], self.curves_[0]) if k >= 2 else None
        return self

    def predict(self, t=None):
        """Contrast value; with ``t``, the cross-group difference of :math:`\\hat F` at ``t``."""
        check_is_fitted(self, "psi_")
        if t is None:
            return self.psi_.value
        t = np.atleast_1d(t)
        return self.curves_[1].at(t, self.subtype) - self.curves_[0].at(t, self.subtype)
