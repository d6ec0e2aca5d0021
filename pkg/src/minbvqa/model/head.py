"""Linear quality regressor over per-key-frame features, plus temporal pooling."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..features.extract import FeatureRecord

POOLINGS = ("SIMPLE_AVERAGE", "LEARNED_CONV")


def reflect_index(k: int, pad: int) -> np.ndarray:
    """Source index of every position of a reflect-padded length-``k`` sequence."""
    if k == 1:
        return np.zeros(k + 2 * pad, dtype=np.int64)
    period = 2 * (k - 1)
    j = np.mod(np.arange(-pad, k + pad), period)
    return np.where(j < k, j, period - j)


def pooling_operator(k: int, kernel_size: int) -> np.ndarray:
    """``(kernel_size, k)`` matrix ``A`` with ``pooled = w @ A @ scores``.

    Row ``m`` averages, over output positions ``i``, the padded input at
    ``i + m``; so the convolve-then-average pooling is linear in both the
    kernel ``w`` and the scores.
    """
    pad = kernel_size // 2
    idx = reflect_index(k, pad)
    a = np.zeros((kernel_size, k))
    for m in range(kernel_size):
        np.add.at(a[m], idx[m:m + k], 1.0 / k)
    return a


def pool_scores(scores, pooling: str = "SIMPLE_AVERAGE", kernel=None) -> float:
    s = np.asarray(scores, dtype=np.float64).ravel()
    if s.size < 1:
        raise ValueError("need at least one score")
    if pooling == "SIMPLE_AVERAGE":
        return float(s.mean())
    if pooling != "LEARNED_CONV":
        raise ValueError(f"unknown pooling {pooling!r}")
    w = np.asarray(kernel, dtype=np.float64)
    if w.ndim != 1 or w.size % 2 == 0:
        raise ValueError("convolution kernel must be 1-D with odd length")
    return float(w @ pooling_operator(s.size, w.size) @ s)


@dataclass
class RegressionHead:
    beta: np.ndarray
    bias: float
    mean: np.ndarray
    scale: np.ndarray
    use_temporal: bool = False
    pooling: str = "SIMPLE_AVERAGE"
    kernel: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.beta = np.asarray(self.beta, dtype=np.float64)
        self.mean = np.asarray(self.mean, dtype=np.float64)
        self.scale = np.asarray(self.scale, dtype=np.float64)
        if self.kernel is not None:
            self.kernel = np.asarray(self.kernel, dtype=np.float64)
        if not (self.beta.shape == self.mean.shape == self.scale.shape) or self.beta.ndim != 1:
            raise ValueError("beta, mean and scale must be vectors of one length")
        if not np.all(np.isfinite(self.beta)) or not np.isfinite(self.bias):
            raise ValueError("non-finite head parameters")
        if np.any(self.scale <= 0):
            raise ValueError("standardization scale must be positive")
        if self.pooling not in POOLINGS:
            raise ValueError(f"unknown pooling {self.pooling!r}")
        if self.pooling == "LEARNED_CONV" and (self.kernel is None or self.kernel.size % 2 == 0):
            raise ValueError("LEARNED_CONV pooling needs an odd-length kernel")

    @property
    def dim(self) -> int:
        return self.beta.size

    def standardize(self, x: np.ndarray) -> np.ndarray:
        return (x - self.mean) / self.scale

    def features_of(self, record: FeatureRecord) -> np.ndarray:
        if self.use_temporal and record.temporal is None:
            raise ValueError(f"{record.video_id}: head expects temporal features")
        x = record.matrix(self.use_temporal)
        if x.shape[1] != self.dim:
            raise ValueError(f"{record.video_id}: feature dimension {x.shape[1]} != head dimension {self.dim}")
        return x

    def score_frames(self, record: FeatureRecord) -> np.ndarray:
        return self.standardize(self.features_of(record)) @ self.beta + self.bias

    def score(self, record: FeatureRecord) -> float:
        return pool_scores(self.score_frames(record), self.pooling, self.kernel)

    def predict(self, records) -> np.ndarray:
        return np.array([self.score(r) for r in records])

    def to_dict(self) -> dict:
        return {
            "beta": self.beta.tolist(),
            "bias": float(self.bias),
            "mean": self.mean.tolist(),
            "scale": self.scale.tolist(),
            "use_temporal": self.use_temporal,
            "pooling": self.pooling,
            "kernel": None if self.kernel is None else self.kernel.tolist(),
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RegressionHead":
        return cls(d["beta"], float(d["bias"]), d["mean"], d["scale"], bool(d["use_temporal"]),
                   d["pooling"], d.get("kernel"), dict(d.get("meta", {})))

    def save(self, path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return path

    @classmethod
    def load(cls, path) -> "RegressionHead":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def standardization(rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-dimension mean and population std; constant dimensions get scale 1."""
    mean = rows.mean(axis=0)
    scale = rows.std(axis=0)
    return mean, np.where(scale > 0, scale, 1.0)
