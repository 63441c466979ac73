"""Input checks shared by the estimators."""

import numbers

import numpy as np
from sklearn.utils.validation import check_consistent_length


def check_event_data(time, event, group=None):
    """Validate discrete competing-risks data.

    Parameters
    ----------
    time : array-like of shape (n,)
        Observed time (event or censoring), non-negative and finite.
    event : array-like of shape (n,)
        0 for censored, ``s`` in ``1..k`` for an event of subtype ``s``.
    group : array-like of shape (n,), optional
        Group labels, each 0 or 1.

    Returns
    -------
    time, event[, group] : ndarray
    """
    time = np.asarray(time, dtype=float).ravel()
    event = np.asarray(event).ravel()
    arrays = [time, event] if group is None else [time, event, np.asarray(group).ravel()]
    check_consistent_length(*arrays)
    if time.size == 0:
        raise ValueError("no observations")
    if not np.isfinite(time).all() or (time < 0).any():
        raise ValueError("times must be finite and non-negative")
    if not np.issubdtype(event.dtype, np.integer):
        if not np.all(np.mod(event, 1) == 0):
            raise ValueError("event codes must be integers")
        event = event.astype(np.int64)
    if (event < 0).any():
        raise ValueError("event codes must be 0 (censored) or positive subtypes")
    if group is None:
        return time, event
    group = arrays[2]
    if not np.isin(group, (0, 1)).all():
        raise ValueError("group labels must be 0 or 1")
    return time, event, group.astype(np.int64)


def check_proportion(value, name):
    if not isinstance(value, numbers.Real) or not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must be a number in [0, 1], got {value!r}")
    return float(value)
