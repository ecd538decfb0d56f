"""Least-squares rate fits in log-log coordinates."""

import numpy as np

from .errors import InvalidParameterError


def fit_rate(h, errors):
    """Slope and coefficient of determination of ``log(errors)`` against ``log(h)``."""
    h = np.asarray(h, dtype=float)
    e = np.asarray(errors, dtype=float)
    if h.size != e.size or h.size < 3:
        raise InvalidParameterError("rate fit needs at least three (h, error) pairs")
    if np.any(h <= 0) or np.any(e <= 0) or not np.all(np.isfinite(e)):
        raise InvalidParameterError("rate fit needs positive, finite values")
    x, y = np.log(h), np.log(e)
    if np.ptp(x) == 0:
        raise InvalidParameterError("rate fit needs distinct h values")
    slope, icpt = np.polyfit(x, y, 1)
    resid = y - (slope * x + icpt)
    ss = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss if ss > 0 else 1.0
    return float(slope), float(r2)
