"""Correlation losses and training the linear head on frozen features.

Run: python3 demos/03_losses_and_training.py
"""

import numpy as np

from minbvqa.evaluation import plcc_with_logistic, srcc
from minbvqa.features import FeatureRecord
from minbvqa.model import TrainConfig, loss_value_and_gradient, train_head

rng = np.random.default_rng(0)
t = rng.normal(size=8)

# PLCC loss ignores scale and offset, flips under negation.
for label, p in [("p = t", t), ("p = 3t + 7", 3 * t + 7), ("p = -t", -t)]:
    print(f"PLCC loss, {label:11s}: {loss_value_and_gradient(p, t, 'PLCC')[0]:.6f}")

# The soft rank loss approaches the hard rank criterion as h shrinks.
p = t + rng.normal(scale=0.8, size=8)
print("\n(1 - SRCC)/2 =", round((1 - srcc(p, t)) / 2, 6))
for h in (1.0, 0.1, 0.01, 1e-4):
    print(f"  soft rank loss at h={h:g}: {loss_value_and_gradient(p, t, 'SOFT_SRCC', h)[0]:.6f}")

# A toy dataset: 120 videos with 4 key frames each, 6 features of which
# only the first carries the score.
signal = rng.normal(size=120)
records = []
for i, s in enumerate(signal):
    x = rng.normal(scale=0.5, size=(4, 6))
    x[:, 0] += s
    records.append(FeatureRecord(f"v{i}", x))
mos = 50 + 10 * signal

cfg = TrainConfig(lr=0.01, epochs=60, decay_epochs=(40,))
head, log = train_head(records[:80], mos[:80], records[80:100], mos[80:100], cfg)
pred = head.predict(records[100:])
print(f"\nbest validation SRCC {log.best_val_srcc:.3f} at epoch {log.best_epoch}")
print("weights:", np.round(head.beta, 3))
print(f"test SRCC {srcc(pred, mos[100:]):.3f}")

# PLCC training leaves the scale free, so raw predictions are not on the
# MOS scale; the 4-parameter logistic mapping takes care of that.
plcc, fit = plcc_with_logistic(pred, mos[100:])
print(f"prediction range {pred.min():.2f}..{pred.max():.2f}, MOS range {mos[100:].min():.1f}..{mos[100:].max():.1f}")
print(f"PLCC after logistic mapping {plcc:.3f}, parameters {np.round(fit.params, 3)}")
