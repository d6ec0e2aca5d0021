"""Per-video feature extraction on top of the preprocessor."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..preprocess import PreprocessedVideo
from .backends import Backend
from .pooling import global_pool


class FeatureError(ValueError):
    pass


@dataclass
class FeatureRecord:
    """Features of one video: ``spatial`` is ``(K, D_s)``, ``temporal`` is
    ``(K, D_t)`` or ``None``. Stored as float32, the cache's precision."""

    video_id: str
    spatial: np.ndarray
    temporal: np.ndarray | None = None

    def __post_init__(self):
        self.spatial = np.asarray(self.spatial, dtype=np.float32)
        if self.spatial.ndim != 2 or self.spatial.shape[0] < 1:
            raise FeatureError(f"{self.video_id}: spatial features must be (K, D_s), got {self.spatial.shape}")
        if self.temporal is not None:
            self.temporal = np.asarray(self.temporal, dtype=np.float32)
            if self.temporal.ndim != 2 or self.temporal.shape[0] != self.spatial.shape[0]:
                raise FeatureError(f"{self.video_id}: temporal features must be (K, D_t)")
            if self.temporal.shape[1] == 0:
                self.temporal = None
        if not np.all(np.isfinite(self.spatial)) or (self.temporal is not None and not np.all(np.isfinite(self.temporal))):
            raise FeatureError(f"{self.video_id}: non-finite features")

    @property
    def k(self) -> int:
        return self.spatial.shape[0]

    def matrix(self, use_temporal: bool = True) -> np.ndarray:
        """``[s_i | t_i]`` rows as float64."""
        if use_temporal and self.temporal is not None:
            return np.concatenate([self.spatial, self.temporal], axis=1).astype(np.float64)
        return self.spatial.astype(np.float64)


def spatial_features(key_frame: np.ndarray, backend: Backend, mode: str = "AVG") -> np.ndarray:
    return global_pool(backend.feature_map(key_frame), mode)


def temporal_features(chunk: np.ndarray, backend: Backend) -> np.ndarray:
    return global_pool(backend.feature_map(chunk), "AVG")


def extract_record(video: PreprocessedVideo, spatial: Backend, temporal: Backend | None = None,
                   mode: str = "AVG") -> FeatureRecord:
    s = np.stack([spatial_features(kf.image, spatial, mode) for kf in video.key_frames])
    t = None
    if temporal is not None:
        if video.chunks is None:
            raise FeatureError(f"{video.video_id}: temporal backend given but no chunks were extracted")
        # broadcast chunks reuse the source chunk's features
        done: dict[int, np.ndarray] = {}
        rows = []
        for chunk in video.chunks:
            src = chunk.owner if chunk.broadcast_from is None else chunk.broadcast_from
            if src not in done:
                done[src] = temporal_features(chunk.tensor, temporal)
            rows.append(done[src])
        t = np.stack(rows)
    return FeatureRecord(video.video_id, s, t)
