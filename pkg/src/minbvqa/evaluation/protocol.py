"""Random-split evaluation protocol, dataset aggregation and cross-dataset tests."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from ..features.extract import FeatureRecord
from ..model.head import RegressionHead
from ..model.train import TrainConfig, train_head
from .logistic import plcc_with_logistic
from .metrics import pearson, srcc

logger = logging.getLogger(__name__)

N_SPLITS = 10


@dataclass
class Partition:
    train: list[str]
    val: list[str]
    test: list[str]


@dataclass
class SplitPlan:
    seed: int
    partitions: list[Partition]

    def to_dict(self) -> dict:
        return {"seed": self.seed, "partitions": [vars(p) for p in self.partitions]}


def split_sizes(n: int) -> tuple[int, int, int]:
    """6:2:2 with the remainder going to the training set."""
    held = n // 5
    return n - 2 * held, held, held


def make_splits(ids, seed: int, n_splits: int = N_SPLITS) -> SplitPlan:
    ids = list(ids)
    if len(ids) < 5:
        raise ValueError("need at least 5 ids to split 6:2:2")
    if len(set(ids)) != len(ids):
        raise ValueError("ids must be unique")
    n_train, n_val, _ = split_sizes(len(ids))
    rng = np.random.default_rng(seed)
    parts = []
    for _ in range(n_splits):
        perm = [ids[i] for i in rng.permutation(len(ids))]
        parts.append(Partition(perm[:n_train], perm[n_train:n_train + n_val], perm[n_train + n_val:]))
    return SplitPlan(seed, parts)


def lower_median(values) -> float:
    """Order-statistic median (lower one for even counts), NaNs skipped."""
    v = sorted(x for x in values if x is not None and math.isfinite(x))
    if not v:
        return math.nan
    return v[(len(v) - 1) // 2]


@dataclass
class SplitResult:
    split: int
    srcc: float
    plcc: float
    logistic: dict | None = None
    status: str = "ok"
    best_epoch: int | None = None

    def to_dict(self) -> dict:
        return dict(vars(self))


@dataclass
class EvalReport:
    dataset: str
    variant: str
    n_videos: int
    splits: list[SplitResult] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    @property
    def completed(self) -> list[SplitResult]:
        return [s for s in self.splits if s.status == "ok"]

    @property
    def median_srcc(self) -> float:
        return lower_median(s.srcc for s in self.completed)

    @property
    def median_plcc(self) -> float:
        return lower_median(s.plcc for s in self.completed)

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "variant": self.variant,
            "n_videos": self.n_videos,
            "median_srcc": self.median_srcc,
            "median_plcc": self.median_plcc,
            "completed_splits": len(self.completed),
            "failed_splits": len(self.splits) - len(self.completed),
            "splits": [s.to_dict() for s in self.splits],
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        splits = [SplitResult(**s) for s in d.get("splits", [])]
        return cls(d["dataset"], d["variant"], int(d["n_videos"]), splits, dict(d.get("meta", {})))


def evaluate_predictions(pred, mos) -> tuple[float, float, dict | None]:
    s = srcc(pred, mos)
    if len(pred) >= 5:
        p, fit = plcc_with_logistic(pred, mos)
        return s, p, None if fit is None else fit.to_dict()
    return s, pearson(pred, mos), None


def run_protocol(records: dict[str, FeatureRecord], mos: dict[str, float], plan: SplitPlan,
                 train_config: TrainConfig = TrainConfig(), use_temporal: bool = False,
                 pooling: str = "SIMPLE_AVERAGE", kernel_size: int = 5,
                 dataset: str = "dataset", variant: str = "custom") -> EvalReport:
    """Train on each partition's training set, select on its validation set,
    and score the selected head on its test set."""
    report = EvalReport(dataset, variant, len(records))
    for k, part in enumerate(plan.partitions):
        try:
            head, log = train_head(
                [records[i] for i in part.train], [mos[i] for i in part.train],
                [records[i] for i in part.val], [mos[i] for i in part.val],
                train_config, use_temporal, pooling, kernel_size)
            pred = head.predict([records[i] for i in part.test])
            s, p, fit = evaluate_predictions(pred, [mos[i] for i in part.test])
            report.splits.append(SplitResult(k, s, p, fit, best_epoch=log.best_epoch))
        except Exception as exc:  # one bad split must not sink the others
            logger.warning("split %d failed: %s", k, exc)
            report.splits.append(SplitResult(k, math.nan, math.nan, None, status=f"failed: {exc}"))
    return report


def weighted_average(reports: list[EvalReport]) -> dict[str, float]:
    """Per-metric average of the median results, weighted by dataset size."""
    out = {}
    for metric in ("median_srcc", "median_plcc"):
        pairs = [(r.n_videos, getattr(r, metric)) for r in reports if math.isfinite(getattr(r, metric))]
        total = sum(n for n, _ in pairs)
        out[metric.replace("median_", "")] = sum(n * m for n, m in pairs) / total if total else math.nan
    return out


def weighted_mean(values, sizes) -> float:
    values = np.asarray(values, dtype=np.float64)
    sizes = np.asarray(sizes, dtype=np.float64)
    return float(np.sum(sizes * values) / np.sum(sizes))


def cross_dataset_eval(head: RegressionHead, records: dict[str, FeatureRecord], mos: dict[str, float],
                       dataset: str = "target", variant: str = "custom") -> EvalReport:
    """Score a trained head on a whole target dataset; nothing is refitted."""
    ids = list(records)
    pred = head.predict([records[i] for i in ids])
    s, p, fit = evaluate_predictions(pred, [mos[i] for i in ids])
    return EvalReport(dataset, variant, len(ids), [SplitResult(0, s, p, fit)], {"cross_dataset": True})
