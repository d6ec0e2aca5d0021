"""Training losses on video-level predictions with analytic gradients.

All functions return ``(loss, d loss / d predictions)``.

* ``L1``: mean absolute error.
* ``L2``: mean squared error.
* ``PLCC``: ``(1 - r) / 2`` with ``r`` the Pearson correlation.
* ``SOFT_SRCC``: ``(1 - r(softrank(p), softrank(t))) / 2``. Both vectors are
  z-scored first, then ``softrank_i(v) = 1 + sum_{j != i} sigmoid((v_i - v_j) / h)``.

Constant predictions make both correlation losses flat: the loss is 0.5 and
the gradient is zero.
"""

from __future__ import annotations

import numpy as np

LOSSES = ("PLCC", "L1", "L2", "SOFT_SRCC")
DEFAULT_TEMPERATURE = 0.1


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _centered_norm(v):
    c = v - v.mean()
    return c, float(np.sqrt(c @ c))


def pearson_and_grad(u: np.ndarray, v: np.ndarray) -> tuple[float, np.ndarray]:
    """Pearson ``r(u, v)`` and ``dr/du``; ``(0, 0)`` if ``u`` is constant."""
    uc, nu = _centered_norm(u)
    vc, nv = _centered_norm(v)
    if nv == 0.0:
        raise ValueError("targets have zero variance")
    if nu == 0.0:
        return 0.0, np.zeros_like(u)
    r = float(uc @ vc) / (nu * nv)
    return r, vc / (nu * nv) - r * uc / nu ** 2


def soft_rank(v: np.ndarray, h: float) -> np.ndarray:
    s = _sigmoid((v[:, None] - v[None, :]) / h)
    np.fill_diagonal(s, 0.0)
    return 1.0 + s.sum(axis=1)


def _zscore(v: np.ndarray):
    sd = v.std()
    return ((v - v.mean()) / sd if sd > 0 else np.zeros_like(v)), sd


def plcc_loss(p, t):
    r, dr = pearson_and_grad(p, t)
    return 0.5 * (1.0 - r), -0.5 * dr


def soft_srcc_loss(p, t, h: float = DEFAULT_TEMPERATURE):
    zt, st = _zscore(t)
    if st == 0.0:
        raise ValueError("targets have zero variance")
    if p.std() == 0.0:
        return 0.5, np.zeros_like(p)
    z, sd = _zscore(p)
    u = soft_rank(z, h)
    r, du = pearson_and_grad(u, soft_rank(zt, h))
    d = _sigmoid((z[:, None] - z[None, :]) / h)
    d = d * (1.0 - d)
    np.fill_diagonal(d, 0.0)
    dz = (du * d.sum(axis=1) - d @ du) / h
    # back through the z-score
    dp = (dz - dz.mean() - z * np.mean(dz * z)) / sd
    return 0.5 * (1.0 - r), -0.5 * dp


def loss_value_and_gradient(predictions, targets, kind: str = "PLCC",
                            temperature: float = DEFAULT_TEMPERATURE) -> tuple[float, np.ndarray]:
    p = np.asarray(predictions, dtype=np.float64).ravel()
    t = np.asarray(targets, dtype=np.float64).ravel()
    if p.shape != t.shape:
        raise ValueError(f"length mismatch: {p.size} vs {t.size}")
    n = p.size
    if kind == "L1":
        diff = p - t
        return float(np.abs(diff).mean()), np.sign(diff) / n
    if kind == "L2":
        diff = p - t
        return float(np.mean(diff ** 2)), 2.0 * diff / n
    if n < 2:
        raise ValueError(f"{kind} loss needs at least 2 samples")
    if kind == "PLCC":
        return plcc_loss(p, t)
    if kind == "SOFT_SRCC":
        return soft_srcc_loss(p, t, temperature)
    raise ValueError(f"unknown loss {kind!r}; expected one of {LOSSES}")
