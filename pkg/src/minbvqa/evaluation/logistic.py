"""Monotone four-parameter logistic mapping of predictions onto MOS.

    f(x) = (b1 - b2) / (1 + exp(-(x - b3) / |b4|)) + b2

fitted by Levenberg-Marquardt (Marquardt-scaled damping) from
``b1 = max(y), b2 = min(y), b3 = mean(x), b4 = std(x) / 4``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .metrics import pearson

MAX_ITER = 1000
REL_TOL = 1e-10


def logistic4(x, params) -> np.ndarray:
    b1, b2, b3, b4 = params
    z = (np.asarray(x, dtype=np.float64) - b3) / abs(b4)
    return (b1 - b2) * 0.5 * (1.0 + np.tanh(0.5 * z)) + b2


def logistic4_jacobian(x, params) -> np.ndarray:
    b1, b2, b3, b4 = params
    s = abs(b4)
    z = (np.asarray(x, dtype=np.float64) - b3) / s
    g = 0.5 * (1.0 + np.tanh(0.5 * z))
    dg = g * (1.0 - g)
    amp = b1 - b2
    return np.column_stack([
        g,
        1.0 - g,
        -amp * dg / s,
        -amp * dg * z / s * math.copysign(1.0, b4),
    ])


@dataclass
class LogisticFit:
    params: tuple[float, float, float, float]
    iterations: int
    residual: float  # final sum of squared residuals
    converged: bool
    fallback: bool = False
    notes: list[str] = field(default_factory=list)

    def __call__(self, x) -> np.ndarray:
        return logistic4(x, self.params)

    def to_dict(self) -> dict:
        return {"params": [float(p) for p in self.params], "iterations": self.iterations,
                "residual": float(self.residual), "converged": self.converged, "fallback": self.fallback}


def fit_logistic(x, y, max_iter: int = MAX_ITER, tol: float = REL_TOL) -> LogisticFit:
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    sx = x.std()
    if sx == 0.0:
        raise ValueError("predictions have zero variance")
    # own loop rather than MINPACK: its results were not bit-identical across
    # repeated calls, which report determinism needs
    theta = np.array([y.max(), y.min(), x.mean(), sx / 4.0])
    r = y - logistic4(x, theta)
    sse = float(r @ r)
    lam = 1e-3
    floor = 1e-28 * max(float(np.sum((y - y.mean()) ** 2)), 1e-300)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        if sse <= floor:
            converged = True
            break
        J = logistic4_jacobian(x, theta)
        A = J.T @ J
        g = J.T @ r
        diag = np.diag(A).copy()
        diag[diag == 0.0] = 1.0
        improved = False
        while lam < 1e16:
            try:
                step = np.linalg.solve(A + lam * np.diag(diag), g)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            cand = theta + step
            if cand[3] == 0.0 or not np.all(np.isfinite(cand)):
                lam *= 10.0
                continue
            r_new = y - logistic4(x, cand)
            sse_new = float(r_new @ r_new)
            if np.isfinite(sse_new) and sse_new < sse:
                rel = (sse - sse_new) / sse
                theta, r, sse = cand, r_new, sse_new
                lam = max(lam / 10.0, 1e-12)
                improved = True
                break
            lam *= 10.0
        if not improved:
            converged = True  # no descent direction left at any damping
            break
        if rel < tol:
            converged = True
            break
    return LogisticFit(tuple(float(v) for v in theta), it, sse, converged)


def _affine_sse(x: np.ndarray, y: np.ndarray) -> float:
    A = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    r = y - A @ coef
    return float(r @ r)


def plcc_with_logistic(predictions, targets) -> tuple[float, LogisticFit | None]:
    """PLCC after 4PL mapping. Returns ``(nan, None)`` for constant predictions.

    Falls back to the raw Pearson correlation (``fit.fallback = True``) when
    the fitted curve does worse than a straight line or than no mapping.
    """
    x = np.asarray(predictions, dtype=np.float64).ravel()
    y = np.asarray(targets, dtype=np.float64).ravel()
    if x.size != y.size:
        raise ValueError("length mismatch")
    if x.size < 5:
        raise ValueError("logistic mapping needs at least 5 samples")
    if y.std() == 0.0:
        raise ValueError("targets have zero variance")
    if x.std() == 0.0:
        return pearson(x, y), None
    raw = pearson(x, y)
    fit = fit_logistic(x, y)
    mapped = logistic4(x, fit.params)
    value = pearson(mapped, y) if mapped.std() > 0 else math.nan
    if not math.isfinite(value):
        fit.notes.append("mapped predictions degenerate")
    elif fit.residual > _affine_sse(x, y) * (1 + 1e-12):
        fit.notes.append("fit worse than affine baseline")
    elif value < raw:
        fit.notes.append("fit lowers correlation")
    if fit.notes:
        fit.fallback = True
        return raw, fit
    return value, fit
