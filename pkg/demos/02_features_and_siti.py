"""Toy quality features and SI/TI on synthetic distortions.

Run: python3 demos/02_features_and_siti.py
"""

import numpy as np

from minbvqa.features import ToySpatialBackend, ToyTemporalBackend, compute_siti, spatial_features, temporal_features
from minbvqa.features.backends import SPATIAL_TOY_CHANNELS, TEMPORAL_TOY_CHANNELS
from minbvqa.ingest import VideoAsset
from minbvqa.synthetic import SyntheticSpec, render

spatial, temporal = ToySpatialBackend(), ToyTemporalBackend()

# Blur lowers every sharpness-related coordinate.
print("spatial features, blur level 0 / 0.5 / 1:")
rows = [spatial_features(render(SyntheticSpec(seed=1, kind="blur", level=lv))[0], spatial)
        for lv in (0.0, 0.5, 1.0)]
for name, values in zip(SPATIAL_TOY_CHANNELS, np.array(rows).T):
    print(f"  {name:16s}", np.round(values, 4))

# Flicker is invisible to a single frame but not to a chunk.
print("\nflicker level vs features:")
for lv in (0.0, 0.3, 0.6, 0.9):
    frames = render(SyntheticSpec(seed=1, kind="flicker", level=lv))
    s = spatial_features(frames[0], spatial)
    t = temporal_features(frames[:8], temporal)
    print(f"  level {lv}: mean luma {s[0]:.3f}, "
          + ", ".join(f"{n} {v:.4f}" for n, v in zip(TEMPORAL_TOY_CHANNELS, t)))

# SI/TI place each clip on the usual "detail vs motion" plane. TI is the
# std of the frame difference, so a uniform brightness shift (flicker)
# scores zero: TI sees motion, not flicker.
print("\nSI / TI (max over frames):")
for kind in ("blur", "noise", "flicker"):
    for lv in (0.0, 1.0):
        frames = render(SyntheticSpec(seed=2, kind=kind, level=lv))
        d = compute_siti(VideoAsset.from_array(frames, fps=10))
        print(f"  {kind:8s} level {lv}: SI {d.si:7.2f}  TI {d.ti:6.2f}")
