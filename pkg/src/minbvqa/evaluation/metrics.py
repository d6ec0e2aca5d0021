"""Correlation criteria: Pearson (PLCC, raw) and Spearman (SRCC).

Undefined correlations (zero variance on either side) come back as NaN with
a :class:`DegenerateCorrelationWarning`; aggregation code skips NaNs.
"""

from __future__ import annotations

import math
import warnings

import numpy as np
from scipy.stats import rankdata


class DegenerateCorrelationWarning(RuntimeWarning):
    pass


def _pair(a, b) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.size} vs {b.size}")
    if a.size < 2:
        raise ValueError("correlation needs at least 2 samples")
    return a, b


def pearson(a, b) -> float:
    a, b = _pair(a, b)
    da, db = a - a.mean(), b - b.mean()
    saa, sbb = float(da @ da), float(db @ db)
    if saa == 0.0 or sbb == 0.0:
        warnings.warn("zero variance: correlation undefined", DegenerateCorrelationWarning, stacklevel=2)
        return math.nan
    r = float(da @ db) / math.sqrt(saa * sbb)
    return max(-1.0, min(1.0, r))


def average_ranks(x) -> np.ndarray:
    """1-based ranks; tied values share the mean of their positions."""
    return rankdata(np.asarray(x, dtype=np.float64).ravel(), method="average")


def srcc(predictions, targets) -> float:
    p, t = _pair(predictions, targets)
    return pearson(average_ranks(p), average_ranks(t))


def plcc(predictions, targets) -> float:
    """Raw Pearson correlation, without the logistic mapping."""
    return pearson(predictions, targets)
