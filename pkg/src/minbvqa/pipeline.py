"""Dataset-level feature extraction: decode, preprocess, analyze, cache."""

from __future__ import annotations

import hashlib
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .features.backends import BackendSpec, make_backend
from .features.cache import FeatureCache
from .features.extract import FeatureRecord, extract_record
from .ingest import ManifestEntry, open_video
from .preprocess import PreprocessConfig, preprocess_video

logger = logging.getLogger(__name__)


def feature_digest(config: PreprocessConfig, spatial: BackendSpec, temporal: BackendSpec | None,
                   pooling: str) -> str:
    payload = {
        "preprocess": config.to_dict(),
        "spatial": spatial.to_dict(),
        "temporal": None if temporal is None else temporal.to_dict(),
        "pooling": pooling,
    }
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()


def combined_backend_id(spatial, temporal, pooling: str) -> str:
    tid = "none" if temporal is None else temporal.backend_id
    return f"{spatial.backend_id}+{pooling}|{tid}"


def extract_video(entry: ManifestEntry, config: PreprocessConfig, spatial_spec: BackendSpec,
                  temporal_spec: BackendSpec | None = None, pooling: str = "AVG",
                  _backends: dict | None = None) -> FeatureRecord:
    backends = _backends if _backends is not None else {}
    if "spatial" not in backends:
        backends["spatial"] = make_backend(spatial_spec)
        backends["temporal"] = make_backend(temporal_spec) if temporal_spec is not None else None
    asset = open_video(entry)
    video = preprocess_video(asset, config, with_chunks=temporal_spec is not None)
    return extract_record(video, backends["spatial"], backends["temporal"], pooling)


_WORKER: dict = {}


def _worker_task(args):
    entry, config, spatial_spec, temporal_spec, pooling = args
    return extract_video(entry, config, spatial_spec, temporal_spec, pooling, _WORKER)


def extract_dataset(entries: list[ManifestEntry], config: PreprocessConfig, spatial_spec: BackendSpec,
                    temporal_spec: BackendSpec | None = None, pooling: str = "AVG",
                    cache_dir: Path | str | None = None, jobs: int = 1) -> tuple[dict[str, FeatureRecord], dict]:
    """Features for every manifest entry, in manifest order.

    Returns ``(records, stats)``; ``stats`` counts cache hits and misses.
    Cached records are reused when the preprocessing config, backend specs
    and pooling mode all match.
    """
    spatial = make_backend(spatial_spec)
    temporal = make_backend(temporal_spec) if temporal_spec is not None else None
    digest = feature_digest(config, spatial_spec, temporal_spec, pooling)
    backend_id = combined_backend_id(spatial, temporal, pooling)
    cache = FeatureCache(cache_dir) if cache_dir is not None else None

    records: dict[str, FeatureRecord | None] = {}
    todo = []
    for e in entries:
        rec = cache.get(e.video_id, digest, backend_id) if cache else None
        records[e.video_id] = rec
        if rec is None:
            todo.append(e)
    if jobs > 1 and len(todo) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            fresh = list(pool.map(_worker_task, [(e, config, spatial_spec, temporal_spec, pooling) for e in todo]))
    else:
        shared = {"spatial": spatial, "temporal": temporal}
        fresh = [extract_video(e, config, spatial_spec, temporal_spec, pooling, shared) for e in todo]
    for e, rec in zip(todo, fresh):
        records[e.video_id] = rec
        if cache:
            cache.put(rec, digest, backend_id)
    stats = {"videos": len(entries), "cache_hits": len(entries) - len(todo), "extracted": len(todo),
             "digest": digest, "backend_id": backend_id}
    return records, stats
