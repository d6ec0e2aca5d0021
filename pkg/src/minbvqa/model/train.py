"""Minibatch Adam training of the regression head on frozen features."""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from ..evaluation.metrics import srcc
from ..features.extract import FeatureRecord
from .head import RegressionHead, pooling_operator, standardization
from .losses import DEFAULT_TEMPERATURE, LOSSES, loss_value_and_gradient

logger = logging.getLogger(__name__)


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    """Defaults follow the full-scale recipe (Adam, lr 1e-5, batch 8, PLCC, decay x0.1
    after 10 epochs); desk-scale runs on frozen features use a larger rate."""

    loss: str = "PLCC"
    lr: float = 1e-5
    batch_size: int = 8
    epochs: int = 30
    decay_factor: float = 0.1
    decay_epochs: tuple[int, ...] = (10,)
    seed: int = 0
    temperature: float = DEFAULT_TEMPERATURE
    init_std: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.loss not in LOSSES:
            raise ValueError(f"unknown loss {self.loss!r}")
        if self.loss in ("PLCC", "SOFT_SRCC") and self.batch_size < 2:
            raise ValueError("correlation losses need batch_size >= 2")
        if self.batch_size < 1 or self.epochs < 1 or self.lr <= 0:
            raise ValueError("batch_size, epochs and lr must be positive")
        object.__setattr__(self, "decay_epochs", tuple(int(e) for e in self.decay_epochs))

    def lr_at(self, epoch: int) -> float:
        return self.lr * self.decay_factor ** sum(epoch >= e for e in self.decay_epochs)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["decay_epochs"] = list(self.decay_epochs)
        return d


@dataclass
class TrainLog:
    epochs: list[dict] = field(default_factory=list)
    best_epoch: int = -1
    best_val_srcc: float = -math.inf
    flat_batches: int = 0
    skipped_batches: int = 0  # constant-target batches under correlation losses
    beta_trajectory: list[np.ndarray] = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {"epochs": self.epochs, "best_epoch": self.best_epoch,
                "best_val_srcc": self.best_val_srcc, "flat_batches": self.flat_batches,
                "skipped_batches": self.skipped_batches}


def _pooled_design(records, use_temporal: bool, mean, scale, kernel_size: int) -> np.ndarray:
    """``(n, m, D)``: for each video, the pooling operator applied to its
    standardized features. Video score = ``w @ (M @ beta + bias)``."""
    out = []
    for r in records:
        x = (r.matrix(use_temporal) - mean) / scale
        a = pooling_operator(x.shape[0], kernel_size) if kernel_size > 1 else np.full((1, x.shape[0]), 1.0 / x.shape[0])
        out.append(a @ x)
    return np.stack(out)


def _batches(rng: np.random.Generator, n: int, size: int) -> list[np.ndarray]:
    perm = rng.permutation(n)
    batches = [perm[i:i + size] for i in range(0, n, size)]
    # a trailing singleton would make correlation losses undefined
    if len(batches) > 1 and batches[-1].size < 2:
        batches[-2] = np.concatenate([batches[-2], batches.pop()])
    return batches


def train_head(train: list[FeatureRecord], train_mos, val: list[FeatureRecord], val_mos,
               config: TrainConfig = TrainConfig(), use_temporal: bool = False,
               pooling: str = "SIMPLE_AVERAGE", kernel_size: int = 5,
               keep_trajectory: bool = False) -> tuple[RegressionHead, TrainLog]:
    """Fit ``beta``, bias (and kernel for learned pooling) with Adam.

    The head with the best validation SRCC over all epochs is returned.
    """
    y = np.asarray(train_mos, dtype=np.float64)
    y_val = np.asarray(val_mos, dtype=np.float64)
    if len(train) != y.size or len(val) != y_val.size:
        raise ValueError("features and MOS lengths differ")
    if y.size < 2:
        raise ValueError("need at least two training videos")
    if use_temporal and any(r.temporal is None for r in list(train) + list(val)):
        raise ValueError("temporal variant requested but some records lack temporal features")

    rows = np.concatenate([r.matrix(use_temporal) for r in train])
    mean, scale = standardization(rows)
    learned = pooling == "LEARNED_CONV"
    ks = kernel_size if learned else 1
    if learned and ks % 2 == 0:
        raise ValueError("kernel_size must be odd")
    M = _pooled_design(train, use_temporal, mean, scale, ks)

    # separate streams: adding feature dimensions must not reshuffle batches
    init_rng = np.random.default_rng([config.seed, 0])
    rng = np.random.default_rng([config.seed, 1])
    d = rows.shape[1]
    beta = init_rng.normal(0.0, config.init_std, size=d)
    bias = float(y.mean()) if config.loss in ("L1", "L2") else 0.0
    w = np.zeros(ks)
    w[ks // 2] = 1.0

    params = [beta, np.array([bias]), w]
    m1 = [np.zeros_like(p) for p in params]
    m2 = [np.zeros_like(p) for p in params]
    step = 0

    def make_head(b, c, k) -> RegressionHead:
        return RegressionHead(b.copy(), float(c[0]), mean, scale, use_temporal, pooling,
                              k.copy() if learned else None,
                              {"train_config": config.to_dict(), "seed": config.seed})

    log = TrainLog()
    best = make_head(*params)
    for epoch in range(config.epochs):
        lr = config.lr_at(epoch)
        losses = []
        for idx in _batches(rng, y.size, config.batch_size):
            beta, bias_v, w = params
            frame_level = M[idx] @ beta + bias_v[0]  # (b, m)
            pred = frame_level @ w
            if config.loss in ("PLCC", "SOFT_SRCC"):
                if np.ptp(y[idx]) == 0.0:
                    log.skipped_batches += 1
                    continue
                if np.ptp(pred) == 0.0:
                    log.flat_batches += 1
            loss, g = loss_value_and_gradient(pred, y[idx], config.loss, config.temperature)
            if not math.isfinite(loss) or not np.all(np.isfinite(g)):
                raise TrainingError(f"non-finite loss at epoch {epoch}: loss={loss}, "
                                    f"|beta|={np.linalg.norm(beta):.3g}, lr={lr}")
            losses.append(loss)
            grads = [
                np.einsum("b,bmd,m->d", g, M[idx], w),
                np.array([g.sum() * w.sum()]),
                g @ frame_level if learned else np.zeros_like(w),
            ]
            step += 1
            for p, gr, a, v in zip(params, grads, m1, m2):
                a *= config.beta1
                a += (1 - config.beta1) * gr
                v *= config.beta2
                v += (1 - config.beta2) * gr ** 2
                a_hat = a / (1 - config.beta1 ** step)
                v_hat = v / (1 - config.beta2 ** step)
                p -= lr * a_hat / (np.sqrt(v_hat) + config.eps)
        if keep_trajectory:
            log.beta_trajectory.append(params[0].copy())
        head = make_head(*params)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            val_srcc = srcc(head.predict(val), y_val) if len(val) >= 2 else math.nan
        log.epochs.append({"epoch": epoch, "lr": lr, "train_loss": float(np.mean(losses)) if losses else math.nan, "val_srcc": val_srcc})
        if math.isfinite(val_srcc) and val_srcc > log.best_val_srcc:
            log.best_val_srcc, log.best_epoch, best = val_srcc, epoch, head
    if log.best_epoch < 0:
        logger.warning("validation SRCC never defined; returning final head")
        best = make_head(*params)
        log.best_epoch = config.epochs - 1
    if log.flat_batches:
        logger.warning("%d minibatches had constant predictions (flat correlation loss)", log.flat_batches)
    best.meta["best_epoch"] = log.best_epoch
    return best, log
