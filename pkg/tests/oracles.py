"""Independent reference implementations used only by the tests."""

from fractions import Fraction

import numpy as np


def random_event_data(rng, n_max=50, k_max=3, t_max=6, censor_p=0.3):
    n = int(rng.integers(1, n_max + 1))
    k = int(rng.integers(1, k_max + 1))
    time = rng.integers(1, t_max + 1, size=n).astype(float)
    event = rng.integers(1, k + 1, size=n)
    event[rng.random(n) < censor_p] = 0
    return time, event, k


def brute_force_aalen_johansen(time, event, k):
    """Exact multistate product integral over per-individual enumeration.

    State 0 is event-free, state ``s`` is absorbed by subtype ``s``. Returns
    the distinct times and a ``(k, T)`` list of Fractions for P(state s by t).
    """
    times = sorted(set(float(t) for t in time))
    p = [Fraction(1)] + [Fraction(0)] * k
    out = [[] for _ in range(k)]
    for t in times:
        at_risk = sum(1 for ti in time if ti >= t)
        d = [sum(1 for ti, ei in zip(time, event) if ti == t and ei == s) for s in range(1, k + 1)]
        # transition matrix I + dA applied to the row vector p
        step = [Fraction(ds, at_risk) for ds in d]
        alive = p[0]
        p = [alive * (1 - sum(step))] + [p[s + 1] + alive * step[s] for s in range(k)]
        for s in range(k):
            out[s].append(p[s + 1])
    return np.array(times), out


def kaplan_meier(time, event):
    """All-cause survival just after each distinct time."""
    times = np.unique(time)
    s, out = 1.0, []
    for t in times:
        r = np.sum(time >= t)
        d = np.sum((time == t) & (event > 0))
        s *= 1 - d / r
        out.append(s)
    return times, np.array(out)


def cif_from_hazards(h):
    """Cumulative incidence from a ``(k, T)`` array of event-specific hazards."""
    surv = np.concatenate([[1.0], np.cumprod(1 - h.sum(axis=0))[:-1]])
    return np.cumsum(surv * h, axis=1)


def delta_method_cif_cov(d, r):
    """Delta-method covariance of the stacked curves, by numerical Jacobian.

    Hazards at each time are multinomial proportions with covariance
    ``(diag(h) - h h') / r``, independent across times. The curves are
    multilinear in each hazard, so central differences are exact up to
    rounding. Returns a ``(k, k, T, T)`` array.
    """
    d = np.asarray(d, dtype=float)
    r = np.asarray(r, dtype=float)
    k, T = d.shape
    h = np.divide(d, r, out=np.zeros_like(d), where=r > 0)
    m = k * T
    sigma = np.zeros((m, m))
    for i in range(T):
        if r[i] == 0:
            continue
        hi = h[:, i]
        idx = np.arange(k) * T + i
        sigma[np.ix_(idx, idx)] = (np.diag(hi) - np.outer(hi, hi)) / r[i]
    step = 1e-6
    J = np.zeros((m, m))
    flat = h.ravel()
    for j in range(m):
        up, dn = flat.copy(), flat.copy()
        up[j] += step
        dn[j] -= step
        J[:, j] = (cif_from_hazards(up.reshape(k, T)) - cif_from_hazards(dn.reshape(k, T))).ravel() / (2 * step)
    cov = J @ sigma @ J.T
    return cov.reshape(k, T, k, T).transpose(0, 2, 1, 3)


def step_integral(times, values, tau):
    """Exact area under a right-continuous step function starting at 0 on [0, tau)."""
    area, knots = 0.0, list(times) + [np.inf]
    for i, t in enumerate(times):
        if t >= tau:
            break
        area += (min(knots[i + 1], tau) - t) * values[i]
    return area
