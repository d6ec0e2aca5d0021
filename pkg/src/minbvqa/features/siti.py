"""Spatial and temporal information (SI/TI) descriptors of a video.

SI of a frame is the population std of the Sobel gradient magnitude of its
luma plane, taken over interior pixels (no border padding). TI of a frame
pair is the population std of their luma difference. The video SI/TI are the
maxima over frames (ITU-T P.910); the per-frame series are kept so a mean
aggregate can be reported instead.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..ingest import VideoAsset
from .backends import LUMA_WEIGHTS


@dataclass
class SiTiDescriptor:
    si: float
    ti: float
    si_series: np.ndarray
    ti_series: np.ndarray

    @property
    def si_mean(self) -> float:
        return float(self.si_series.mean())

    @property
    def ti_mean(self) -> float:
        return float(self.ti_series.mean()) if self.ti_series.size else 0.0


def frame_luma(frame: np.ndarray) -> np.ndarray:
    return frame.astype(np.float64) @ LUMA_WEIGHTS


def spatial_information(y: np.ndarray) -> float:
    if y.shape[0] < 3 or y.shape[1] < 3:
        return 0.0
    gx = (y[:-2, 2:] + 2 * y[1:-1, 2:] + y[2:, 2:]) - (y[:-2, :-2] + 2 * y[1:-1, :-2] + y[2:, :-2])
    gy = (y[2:, :-2] + 2 * y[2:, 1:-1] + y[2:, 2:]) - (y[:-2, :-2] + 2 * y[:-2, 1:-1] + y[:-2, 2:])
    return float(np.sqrt(gx ** 2 + gy ** 2).std())


def temporal_information(prev: np.ndarray, cur: np.ndarray) -> float:
    return float((cur - prev).std())


def compute_siti(asset: VideoAsset) -> SiTiDescriptor:
    si, ti = [], []
    prev = None
    for frame in asset:
        y = frame_luma(frame)
        si.append(spatial_information(y))
        if prev is not None:
            ti.append(temporal_information(prev, y))
        prev = y
    si_arr, ti_arr = np.array(si), np.array(ti)
    return SiTiDescriptor(float(si_arr.max()), float(ti_arr.max()) if ti else 0.0, si_arr, ti_arr)
