"""Dataset manifests and uniform frame access.

A manifest is a comma-separated UTF-8 file with the header::

    video_id,path,mos,width,height,fps,frame_count

Relative ``path`` values are resolved against the manifest's directory.
Videos are decoded by a pluggable decoder chosen from the file suffix:
``.npy`` files hold a raw ``(N, H, W, 3)`` uint8 RGB array (used by the
synthetic generator because it is lossless), anything else goes through
OpenCV.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterator

import numpy as np

logger = logging.getLogger(__name__)

MANIFEST_HEADER = ("video_id", "path", "mos", "width", "height", "fps", "frame_count")
FPS_TOLERANCE = 0.005


class ManifestError(ValueError):
    """Raised when a manifest cannot be parsed or fails validation."""


class DecodeError(RuntimeError):
    """Raised when a video cannot be decoded."""


@dataclass(frozen=True)
class ManifestEntry:
    video_id: str
    path: Path
    mos: float
    width: int
    height: int
    fps: float
    frame_count: int

    def validate(self) -> None:
        if not self.video_id:
            raise ManifestError("empty video_id")
        if not math.isfinite(self.mos):
            raise ManifestError(f"{self.video_id}: non-finite MOS {self.mos!r}")
        if self.width <= 0 or self.height <= 0:
            raise ManifestError(f"{self.video_id}: width and height must be positive")
        if not (math.isfinite(self.fps) and self.fps > 0):
            raise ManifestError(f"{self.video_id}: fps must be > 0, got {self.fps!r}")
        if self.frame_count < 1:
            raise ManifestError(f"{self.video_id}: frame_count must be >= 1")


def _parse_row(row: dict, base: Path) -> ManifestEntry:
    path = Path(row["path"])
    if not path.is_absolute():
        path = base / path
    return ManifestEntry(
        video_id=row["video_id"].strip(),
        path=path,
        mos=float(row["mos"]),
        width=int(row["width"]),
        height=int(row["height"]),
        fps=float(row["fps"]),
        frame_count=int(row["frame_count"]),
    )


def parse_manifest(text: str, base: Path | str = ".") -> list[ManifestEntry]:
    """Parse manifest text. Errors carry the 1-based line number."""
    base = Path(base)
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or tuple(f.strip() for f in reader.fieldnames) != MANIFEST_HEADER:
        raise ManifestError(f"line 1: expected header {','.join(MANIFEST_HEADER)}, got {reader.fieldnames}")
    entries: list[ManifestEntry] = []
    seen: set[str] = set()
    for row in reader:
        line = reader.line_num
        if None in row or any(v is None for v in row.values()):
            raise ManifestError(f"line {line}: expected {len(MANIFEST_HEADER)} fields")
        try:
            entry = _parse_row(row, base)
            entry.validate()
        except ManifestError as exc:
            raise ManifestError(f"line {line}: {exc}") from None
        except ValueError as exc:
            raise ManifestError(f"line {line}: {exc}") from None
        if entry.video_id in seen:
            raise ManifestError(f"line {line}: duplicate video_id {entry.video_id!r}")
        seen.add(entry.video_id)
        entries.append(entry)
    return entries


def load_manifest(path: Path | str) -> list[ManifestEntry]:
    path = Path(path)
    return parse_manifest(path.read_text(encoding="utf-8"), base=path.parent)


def format_manifest(entries: list[ManifestEntry], base: Path | str | None = None) -> str:
    """Serialize entries; paths under ``base`` are written relative to it."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(MANIFEST_HEADER)
    for e in entries:
        p = e.path
        if base is not None:
            try:
                p = Path(e.path).relative_to(base)
            except ValueError:
                pass
        writer.writerow([e.video_id, p.as_posix(), repr(float(e.mos)), e.width, e.height, repr(float(e.fps)), e.frame_count])
    return buf.getvalue()


def write_manifest(entries: list[ManifestEntry], path: Path | str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_manifest(entries, base=path.parent))
    return path


# ---------------------------------------------------------------------------
# decoding


@dataclass
class VideoAsset:
    """Decoded video with random frame access.

    ``frame(i)`` returns an ``(H, W, 3)`` uint8 RGB array for ``0 <= i < N``.
    """

    video_id: str
    height: int
    width: int
    frame_count: int
    fps: float
    _reader: Callable[[int], np.ndarray] = field(repr=False)
    discrepancies: list[str] = field(default_factory=list)

    @property
    def shape(self) -> tuple[int, int]:
        return self.height, self.width

    def frame(self, i: int) -> np.ndarray:
        if not 0 <= i < self.frame_count:
            raise IndexError(f"frame index {i} outside [0, {self.frame_count - 1}]")
        return self._reader(int(i))

    def frames(self, indices) -> np.ndarray:
        return np.stack([self.frame(i) for i in indices])

    def __iter__(self) -> Iterator[np.ndarray]:
        for i in range(self.frame_count):
            yield self.frame(i)

    def __len__(self) -> int:
        return self.frame_count

    @classmethod
    def from_array(cls, frames: np.ndarray, fps: float, video_id: str = "array") -> "VideoAsset":
        frames = _as_rgb8(np.asarray(frames))
        if frames.ndim != 4 or frames.shape[0] < 1:
            raise DecodeError(f"expected (N, H, W, 3) frames, got shape {frames.shape}")
        return cls(video_id, frames.shape[1], frames.shape[2], frames.shape[0], float(fps),
                   lambda i: frames[i])


def _to_uint8(a: np.ndarray) -> np.ndarray:
    if a.dtype == np.uint8:
        return a
    if np.issubdtype(a.dtype, np.floating):
        return np.clip(np.floor(a * 255.0 + 0.5), 0, 255).astype(np.uint8)
    if a.dtype == np.uint16:
        return ((a.astype(np.uint32) * 255 + 32767) // 65535).astype(np.uint8)
    return np.clip(a, 0, 255).astype(np.uint8)


def _frame_rgb8(frame: np.ndarray) -> np.ndarray:
    """One frame, ``(H, W)``, ``(H, W, 1)`` or ``(H, W, 3)``, as 8-bit RGB."""
    frame = _to_uint8(frame)
    if frame.ndim == 2:
        frame = frame[..., None]
    if frame.shape[-1] == 1:
        frame = np.repeat(frame, 3, axis=-1)
    return frame


def _as_rgb8(frames: np.ndarray) -> np.ndarray:
    frames = _to_uint8(frames)
    if frames.ndim == 3:
        frames = frames[..., None]
    if frames.ndim == 4 and frames.shape[-1] == 1:
        frames = np.repeat(frames, 3, axis=-1)
    return frames


def _open_npy(path: Path):
    arr = np.load(path, mmap_mode="r")
    if arr.ndim != 4 or arr.shape[-1] not in (1, 3) or arr.shape[0] < 1:
        raise DecodeError(f"{path}: expected (N, H, W, 3) array, got {arr.shape}")

    def read(i: int) -> np.ndarray:
        return _frame_rgb8(np.array(arr[i]))

    # raw arrays carry no rate; open_video falls back to the manifest fps
    return arr.shape[1], arr.shape[2], arr.shape[0], math.nan, read


class _CvReader:
    """Sequential OpenCV reader with forward seeking and one-frame memo.

    Seeking backwards reopens the stream and decodes from the start, so
    random access is byte-identical to sequential access.
    """

    def __init__(self, path: Path):
        import cv2

        self._cv2 = cv2
        self.path = path
        self._cap = None
        self._pos = 0
        self._last: tuple[int, np.ndarray] | None = None

    def _reopen(self):
        if self._cap is not None:
            self._cap.release()
        self._cap = self._cv2.VideoCapture(str(self.path))
        if not self._cap.isOpened():
            raise DecodeError(f"cannot open {self.path}")
        self._pos = 0

    def _next(self) -> np.ndarray | None:
        ok, bgr = self._cap.read()
        if not ok:
            return None
        self._pos += 1
        return np.ascontiguousarray(_frame_rgb8(bgr)[..., ::-1])

    def count(self) -> tuple[int, int, int, float]:
        self._reopen()
        fps = float(self._cap.get(self._cv2.CAP_PROP_FPS))
        n, h, w = 0, 0, 0
        while True:
            f = self._next()
            if f is None:
                break
            h, w = f.shape[:2]
            n += 1
        self._reopen()
        return n, h, w, fps

    def __call__(self, i: int) -> np.ndarray:
        if self._last is not None and self._last[0] == i:
            return self._last[1]
        if self._cap is None or i < self._pos:
            self._reopen()
        frame = None
        while self._pos <= i:
            frame = self._next()
            if frame is None:
                raise DecodeError(f"{self.path}: stream ended before frame {i}")
        self._last = (i, frame)
        return frame


def _open_cv(path: Path):
    reader = _CvReader(path)
    n, h, w, fps = reader.count()
    if n == 0:
        raise DecodeError(f"{path}: no decodable frames")
    return h, w, n, fps, reader


DECODERS: dict[str, Callable] = {".npy": _open_npy}


def register_decoder(suffix: str, opener: Callable) -> None:
    """Register ``opener(path) -> (H, W, N, fps, read_fn)`` for a file suffix."""
    DECODERS[suffix.lower()] = opener


def open_video(entry: ManifestEntry) -> VideoAsset:
    path = Path(entry.path)
    if not path.exists():
        raise DecodeError(f"{entry.video_id}: file not found: {path}")
    opener = DECODERS.get(path.suffix.lower(), _open_cv)
    h, w, n, fps, reader = opener(path)
    if not (math.isfinite(fps) and fps > 0):
        fps = entry.fps
    notes = []
    if n != entry.frame_count:
        notes.append(f"frame_count manifest={entry.frame_count} decoded={n}")
    if abs(fps - entry.fps) > FPS_TOLERANCE * entry.fps:
        notes.append(f"fps manifest={entry.fps} decoded={fps}")
    if (h, w) != (entry.height, entry.width):
        notes.append(f"size manifest={entry.height}x{entry.width} decoded={h}x{w}")
    for note in notes:
        logger.warning("%s: metadata mismatch, trusting decoded values (%s)", entry.video_id, note)
    return VideoAsset(entry.video_id, h, w, n, fps, reader, notes)
