from .backends import (
    Backend,
    BackendError,
    BackendSpec,
    OnnxBackend,
    ToySpatialBackend,
    ToyTemporalBackend,
    make_backend,
)
from .cache import FeatureCache, decode_record, encode_record
from .extract import FeatureError, FeatureRecord, extract_record, spatial_features, temporal_features
from .pooling import POOLING_MODES, global_pool
from .siti import SiTiDescriptor, compute_siti

__all__ = [
    "Backend", "BackendError", "BackendSpec", "OnnxBackend", "ToySpatialBackend", "ToyTemporalBackend",
    "make_backend", "FeatureCache", "decode_record", "encode_record", "FeatureError", "FeatureRecord",
    "extract_record", "spatial_features", "temporal_features", "POOLING_MODES", "global_pool",
    "SiTiDescriptor", "compute_siti",
]
