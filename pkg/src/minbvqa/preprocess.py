"""Spatiotemporal downsampling of a raw video into key frames and chunks.

Key frame ``i`` is source frame ``floor(R / R_a * (0.5 + i))`` for
``i < K = max(1, floor(N * R_a / R))``, resized so the shorter side is
``L_s``. Each key frame optionally owns a ``T``-frame chunk centred on it
(stride ``tau``), resized to ``L_t x L_t``. When ``R_b < R_a`` only a
subset of chunks is computed and the rest are broadcast from the nearest
computed one.

Frame rates are turned into exact rationals through their decimal repr
(``29.97 -> 2997/100``) so the floor never depends on binary rounding.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from .ingest import VideoAsset


@dataclass(frozen=True)
class PreprocessConfig:
    r_a: float = 1.0
    r_b: float = 0.5
    l_s: int = 448
    l_t: int = 224
    t: int = 32
    tau: int = 1

    def __post_init__(self):
        for name in ("r_a", "r_b", "l_s", "l_t", "t", "tau"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)!r}")
        if self.r_b > self.r_a:
            raise ValueError(f"r_b ({self.r_b}) must not exceed r_a ({self.r_a})")
        if self.l_t >= self.l_s:
            raise ValueError(f"l_t ({self.l_t}) must be smaller than l_s ({self.l_s})")
        for name in ("l_s", "l_t", "t", "tau"):
            if int(getattr(self, name)) != getattr(self, name):
                raise ValueError(f"{name} must be an integer")

    def to_dict(self) -> dict:
        return {k: (float(v) if k.startswith("r_") else int(v)) for k, v in asdict(self).items()}

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()


def as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    return Fraction(repr(float(x)))


def key_frame_count(n: int, fps, r_a) -> int:
    k = (n * as_fraction(r_a)) // as_fraction(fps)
    return max(1, int(k))


def select_key_frame_indices(n: int, fps, r_a) -> list[int]:
    if n < 1:
        raise ValueError("frame count must be >= 1")
    ratio = as_fraction(fps) / as_fraction(r_a)
    k = key_frame_count(n, fps, r_a)
    p, q = ratio.numerator, ratio.denominator
    # floor(p/q * (2i+1)/2) in exact integer arithmetic
    odd = 2 * np.arange(k, dtype=np.int64) + 1
    idx = (p * odd) // (2 * q)
    return np.minimum(idx, n - 1).tolist()


def extract_chunk_indices(center: int, n: int, t: int, tau: int) -> list[int]:
    offsets = tau * (np.arange(t) - t // 2)
    return np.clip(center + offsets, 0, n - 1).tolist()


def plan_chunks(k: int, r_a, r_b) -> dict[int, int | None]:
    """Map each key frame to ``None`` (chunk computed) or the key frame it borrows from.

    A chunk is computed wherever ``floor(i * R_b / R_a)`` advances; the
    remaining key frames take the nearest computed one, earlier on ties.
    """
    step = as_fraction(r_b) / as_fraction(r_a)
    computed = [i for i in range(k) if i == 0 or (i * step) // 1 > ((i - 1) * step) // 1]
    plan: dict[int, int | None] = {}
    for i in range(k):
        if i in computed:
            plan[i] = None
        else:
            plan[i] = min(computed, key=lambda c: (abs(c - i), c))
    return plan


# ---------------------------------------------------------------------------
# resizing


def _round_half_away(x: np.ndarray) -> np.ndarray:
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def _axis_weights(n_in: int, n_out: int):
    centers = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
    centers = np.clip(centers, 0.0, n_in - 1)
    lo = np.floor(centers).astype(np.int64)
    hi = np.minimum(lo + 1, n_in - 1)
    frac = centers - lo
    return lo, hi, frac


def resize_bilinear(image: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Half-pixel-centred bilinear resize of an ``(H, W, C)`` uint8 image."""
    h, w = image.shape[:2]
    if (h, w) == (out_h, out_w):
        return image.copy()
    x = image.astype(np.float64)
    lo, hi, f = _axis_weights(h, out_h)
    x = x[lo] * (1.0 - f)[:, None, None] + x[hi] * f[:, None, None]
    lo, hi, f = _axis_weights(w, out_w)
    x = x[:, lo] * (1.0 - f)[None, :, None] + x[:, hi] * f[None, :, None]
    return np.clip(_round_half_away(x), 0, 255).astype(np.uint8)


def downsampled_size(h: int, w: int, l_s: int) -> tuple[int, int]:
    short, long_ = min(h, w), max(h, w)
    if short <= l_s:
        return h, w
    scaled = (2 * long_ * l_s + short) // (2 * short)
    return (l_s, scaled) if h <= w else (scaled, l_s)


def spatial_downsample(frame: np.ndarray, l_s: int) -> np.ndarray:
    h, w = frame.shape[:2]
    oh, ow = downsampled_size(h, w, l_s)
    if (oh, ow) == (h, w):
        return frame
    return resize_bilinear(frame, oh, ow)


def resize_chunk(frames, l_t: int) -> np.ndarray:
    return np.stack([resize_bilinear(f, l_t, l_t) for f in frames])


# ---------------------------------------------------------------------------
# whole-video preprocessing


@dataclass
class KeyFrame:
    index: int
    source_index: int
    image: np.ndarray = field(repr=False)


@dataclass
class VideoChunk:
    owner: int
    frame_indices: list[int]
    tensor: np.ndarray = field(repr=False)
    broadcast_from: int | None = None


@dataclass
class PreprocessedVideo:
    video_id: str
    key_frames: list[KeyFrame]
    chunks: list[VideoChunk] | None

    @property
    def k(self) -> int:
        return len(self.key_frames)

    def summary(self) -> dict:
        out = {
            "video_id": self.video_id,
            "K": self.k,
            "key_frame_sources": [kf.source_index for kf in self.key_frames],
            "key_frame_shape": list(self.key_frames[0].image.shape),
        }
        if self.chunks is not None:
            out["chunk_indices"] = [c.frame_indices for c in self.chunks]
            out["broadcast"] = {str(c.owner): c.broadcast_from for c in self.chunks if c.broadcast_from is not None}
        return out


def preprocess_video(asset: VideoAsset, config: PreprocessConfig, with_chunks: bool = True) -> PreprocessedVideo:
    n, fps = asset.frame_count, asset.fps
    sources = select_key_frame_indices(n, fps, config.r_a)
    key_frames = [KeyFrame(i, s, spatial_downsample(asset.frame(s), config.l_s)) for i, s in enumerate(sources)]
    if not with_chunks:
        return PreprocessedVideo(asset.video_id, key_frames, None)
    plan = plan_chunks(len(sources), config.r_a, config.r_b)
    computed: dict[int, np.ndarray] = {}
    chunks = []
    for i, src in enumerate(sources):
        owner = i if plan[i] is None else plan[i]
        idx = extract_chunk_indices(sources[owner], n, config.t, config.tau)
        if owner not in computed:
            computed[owner] = resize_chunk([asset.frame(j) for j in idx], config.l_t)
        chunks.append(VideoChunk(i, idx, computed[owner], plan[i]))
    return PreprocessedVideo(asset.video_id, key_frames, chunks)
