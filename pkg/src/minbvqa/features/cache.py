"""On-disk feature cache, one file per (video, backend combination).

File layout (all integers little-endian)::

    b"MVQF"                      magic
    u16                          format version (1)
    u16 + bytes                  video_id, UTF-8
    32 bytes                     config digest (SHA-256)
    u16 + bytes                  backend id, UTF-8
    u32 K, u32 D_s, u32 D_t      D_t == 0 means no temporal features
    K * (D_s + D_t) float32      row i = [s_i | t_i]
    u64                          checksum of every preceding byte

The checksum is an 8-byte BLAKE2b digest read as an unsigned integer.
"""

from __future__ import annotations

import hashlib
import logging
import os
import re
import struct
import tempfile
from pathlib import Path

import numpy as np

from .extract import FeatureRecord

logger = logging.getLogger(__name__)

MAGIC = b"MVQF"
VERSION = 1


class CacheFormatError(ValueError):
    pass


def checksum(payload: bytes) -> int:
    return int.from_bytes(hashlib.blake2b(payload, digest_size=8).digest(), "little")


def _digest_bytes(digest: str | bytes) -> bytes:
    raw = bytes.fromhex(digest) if isinstance(digest, str) else bytes(digest)
    if len(raw) != 32:
        raise ValueError("config digest must be 32 bytes")
    return raw


def _short_str(s: str) -> bytes:
    raw = s.encode("utf-8")
    if len(raw) > 0xFFFF:
        raise ValueError("string too long for the cache header")
    return struct.pack("<H", len(raw)) + raw


def encode_record(record: FeatureRecord, digest: str | bytes, backend_id: str) -> bytes:
    k, d_s = record.spatial.shape
    d_t = 0 if record.temporal is None else record.temporal.shape[1]
    rows = record.spatial if not d_t else np.concatenate([record.spatial, record.temporal], axis=1)
    rows = rows.astype("<f4")
    body = b"".join([
        MAGIC,
        struct.pack("<H", VERSION),
        _short_str(record.video_id),
        _digest_bytes(digest),
        _short_str(backend_id),
        struct.pack("<III", k, d_s, d_t),
        rows.tobytes(order="C"),
    ])
    return body + struct.pack("<Q", checksum(body))


def decode_record(blob: bytes) -> tuple[FeatureRecord, bytes, str]:
    """Parse a cache file; returns ``(record, digest, backend_id)``."""
    if len(blob) < 8 + 4 + 2 or blob[:4] != MAGIC:
        raise CacheFormatError("bad magic")
    body, (stored,) = blob[:-8], struct.unpack("<Q", blob[-8:])
    if checksum(body) != stored:
        raise CacheFormatError("checksum mismatch")
    pos = 4
    (version,) = struct.unpack_from("<H", body, pos)
    pos += 2
    if version != VERSION:
        raise CacheFormatError(f"unsupported version {version}")

    def read_str():
        nonlocal pos
        (n,) = struct.unpack_from("<H", body, pos)
        pos += 2
        s = body[pos:pos + n].decode("utf-8")
        pos += n
        return s

    video_id = read_str()
    digest = body[pos:pos + 32]
    pos += 32
    backend_id = read_str()
    k, d_s, d_t = struct.unpack_from("<III", body, pos)
    pos += 12
    expected = k * (d_s + d_t) * 4
    if len(body) - pos != expected:
        raise CacheFormatError("payload length mismatch")
    rows = np.frombuffer(body, dtype="<f4", offset=pos).reshape(k, d_s + d_t).astype(np.float32)
    temporal = rows[:, d_s:] if d_t else None
    return FeatureRecord(video_id, rows[:, :d_s], temporal), digest, backend_id


class FeatureCache:
    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def path_for(self, video_id: str, backend_id: str) -> Path:
        safe = re.sub(r"[^A-Za-z0-9._-]", "_", video_id)[:80]
        tag = hashlib.sha256(f"{video_id}\0{backend_id}".encode()).hexdigest()[:16]
        return self.root / f"{safe}__{tag}.mvqf"

    def put(self, record: FeatureRecord, digest: str | bytes, backend_id: str) -> Path:
        path = self.path_for(record.video_id, backend_id)
        blob = encode_record(record, digest, backend_id)
        fd, tmp = tempfile.mkstemp(dir=self.root, prefix=".tmp-", suffix=".mvqf")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(blob)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        return path

    def get(self, video_id: str, digest: str | bytes, backend_id: str) -> FeatureRecord | None:
        path = self.path_for(video_id, backend_id)
        if not path.exists():
            return None
        try:
            record, stored_digest, stored_backend = decode_record(path.read_bytes())
        except (CacheFormatError, struct.error, UnicodeDecodeError, ValueError) as exc:
            logger.warning("cache entry %s unreadable (%s); treating as miss", path.name, exc)
            return None
        if stored_digest != _digest_bytes(digest) or stored_backend != backend_id or record.video_id != video_id:
            logger.info("cache entry %s is stale; treating as miss", path.name)
            return None
        return record
