"""Deterministic synthetic video corpus with known quality ordering.

Every video is built from a static textured "content" frame drawn from
``seed`` and one distortion at ``level`` in [0, 1]:

* ``blur``: Gaussian blur, sigma = ``BLUR_SIGMA * level``, same on every frame.
* ``noise``: one fixed white-noise field, std = ``NOISE_STD * level``, same on every frame.
* ``flicker``: integer luma offset ``+-round(FLICKER_AMPLITUDE * level)`` that
  alternates sign frame to frame (starting sign drawn from ``seed``). Each
  frame on its own is a clean frame shifted in brightness; subtracting the
  offset recovers the clean frame exactly.
* ``mixed``: all three at the same level.

The ground-truth score is ``mos = 100 * (1 - level ** 1.2)``, so level 0 maps
to the top of the 0..100 scale and the score falls strictly with level.

Clean content is confined to [50, 205] so the flicker offset never clips.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import cv2
import numpy as np

from .ingest import ManifestEntry, write_manifest

KINDS = ("blur", "noise", "flicker", "mixed")
MOS_MAX = 100.0
BLUR_SIGMA = 2.5
NOISE_STD = 25.0
FLICKER_AMPLITUDE = 40.0
CONTENT_RANGE = (50.0, 205.0)


def synthetic_mos(level: float) -> float:
    return MOS_MAX * (1.0 - float(level) ** 1.2)


@dataclass(frozen=True)
class SyntheticSpec:
    seed: int
    kind: str
    level: float
    duration: float = 4.0
    fps: float = 10.0
    width: int = 64
    height: int = 64

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown distortion kind {self.kind!r}; expected one of {KINDS}")
        if not 0.0 <= self.level <= 1.0:
            raise ValueError(f"level must be in [0, 1], got {self.level}")
        if self.duration <= 0 or self.fps <= 0 or self.width < 1 or self.height < 1:
            raise ValueError("duration, fps, width and height must be positive")

    @property
    def frame_count(self) -> int:
        return max(1, int(round(self.duration * self.fps)))

    @property
    def mos(self) -> float:
        return synthetic_mos(self.level)


def content_frame(seed: int, height: int, width: int) -> np.ndarray:
    """Clean float RGB frame in CONTENT_RANGE, a smooth random texture."""
    rng = np.random.default_rng([seed, 0])
    texture = cv2.GaussianBlur(rng.standard_normal((height, width)), (0, 0), 1.2,
                               borderType=cv2.BORDER_REFLECT)
    texture /= texture.std() + 1e-12
    base = rng.uniform(90.0, 165.0)
    tint = rng.uniform(-15.0, 15.0, size=3)
    rgb = base + 28.0 * texture[..., None] + tint
    return np.clip(rgb, *CONTENT_RANGE)


def flicker_offsets(spec: SyntheticSpec) -> np.ndarray:
    """Per-frame integer luma offsets (zeros unless the kind flickers)."""
    n = spec.frame_count
    if spec.kind not in ("flicker", "mixed"):
        return np.zeros(n, dtype=np.int16)
    sign = 1 if np.random.default_rng([spec.seed, 2]).random() < 0.5 else -1
    amp = int(round(FLICKER_AMPLITUDE * spec.level))
    return (sign * amp * (-1) ** np.arange(n)).astype(np.int16)


def render(spec: SyntheticSpec) -> np.ndarray:
    """Frames of ``spec`` as an ``(N, H, W, 3)`` uint8 array."""
    frame = content_frame(spec.seed, spec.height, spec.width)
    if spec.kind in ("blur", "mixed") and spec.level > 0:
        frame = cv2.GaussianBlur(frame, (0, 0), BLUR_SIGMA * spec.level, borderType=cv2.BORDER_REFLECT)
    if spec.kind in ("noise", "mixed") and spec.level > 0:
        noise = np.random.default_rng([spec.seed, 1]).standard_normal(frame.shape[:2])
        frame = frame + NOISE_STD * spec.level * noise[..., None]
    clean = np.clip(np.floor(frame + 0.5), 0, 255).astype(np.int16)
    offsets = flicker_offsets(spec)
    frames = clean[None] + offsets[:, None, None, None]
    return np.clip(frames, 0, 255).astype(np.uint8)


def grid_specs(kinds=("blur", "noise", "flicker"), levels: int = 10, per_level: int = 10,
               seed: int = 0, **video) -> list[SyntheticSpec]:
    """``len(kinds) * levels * per_level`` specs with levels evenly spaced on [0, 1].

    Content seeds are shared across kinds, so each kind sees the same scenes.
    """
    out = []
    for kind in kinds:
        for li, level in enumerate(np.linspace(0.0, 1.0, levels)):
            for r in range(per_level):
                out.append(SyntheticSpec(seed=seed * 1_000_003 + li * per_level + r, kind=kind,
                                         level=float(level), **video))
    return out


def video_id(index: int, spec: SyntheticSpec) -> str:
    return f"syn{index:05d}_{spec.kind}_{spec.level:.4f}_{spec.seed}"


def generate_synthetic_dataset(specs: list[SyntheticSpec], out_dir, manifest_name: str = "manifest.csv") -> Path:
    out_dir = Path(out_dir)
    (out_dir / "videos").mkdir(parents=True, exist_ok=True)
    entries = []
    for i, spec in enumerate(specs):
        vid = video_id(i, spec)
        path = out_dir / "videos" / f"{vid}.npy"
        frames = render(spec)
        with open(path, "wb") as fh:
            np.save(fh, frames, allow_pickle=False)
        entries.append(ManifestEntry(vid, path, spec.mos, spec.width, spec.height, float(spec.fps), frames.shape[0]))
    return write_manifest(entries, out_dir / manifest_name)
