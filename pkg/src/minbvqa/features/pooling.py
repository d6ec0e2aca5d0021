"""Global pooling of last-stage feature maps into feature vectors."""

from __future__ import annotations

import numpy as np

POOLING_MODES = ("AVG", "AVG_STD")


def global_pool(feature_map: np.ndarray, mode: str = "AVG") -> np.ndarray:
    """Pool a ``(C, ...)`` map over every non-channel axis.

    ``AVG`` gives the channel means; ``AVG_STD`` appends the channel-wise
    population standard deviations, doubling the dimension.
    """
    if mode not in POOLING_MODES:
        raise ValueError(f"unknown pooling mode {mode!r}")
    flat = np.asarray(feature_map, dtype=np.float64).reshape(feature_map.shape[0], -1)
    avg = flat.mean(axis=1)
    if mode == "AVG":
        return avg
    return np.concatenate([avg, flat.std(axis=1)])
