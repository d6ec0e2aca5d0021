"""Frozen quality-analyzer backends.

A backend maps a preprocessed input to its last-stage feature map:
``(C, h, w)`` for spatial backends (input: one key frame) and
``(C, t, h, w)`` for temporal backends (input: one chunk). Pooling is done
by the caller, see :mod:`minbvqa.features.pooling`.

Two kinds exist:

``toy``
    Closed-form, distortion-sensitive maps, no model files needed.

``onnx``
    An exported inference graph run with onnxruntime. Spatial graphs take
    ``float32[1, 3, H, W]`` and return ``[1, C, h, w]``; temporal graphs take
    ``float32[1, 3, T, H, W]`` and return ``[1, C, t, h, w]``. By default the
    first graph input and first graph output are used; ``input_name`` and
    ``output_name`` override that.

Inputs are scaled to [0, 1] and then normalized per channel with the
backend's ``mean``/``std`` before they reach the network.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import cv2
import numpy as np

LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])

SPATIAL_TOY_CHANNELS = ("mean_luma", "std_luma", "mean_abs_sobel", "hf_energy_ratio",
                        "mean_r", "mean_g", "mean_b")
TEMPORAL_TOY_CHANNELS = ("mean_abs_frame_diff", "flicker", "mean_abs_second_diff")


class BackendError(RuntimeError):
    pass


@dataclass(frozen=True)
class BackendSpec:
    """Declarative description of a backend; hashable into config digests."""

    kind: str  # "toy" or "onnx"
    role: str  # "spatial" or "temporal"
    path: str | None = None
    input_size: int | None = None
    mean: tuple[float, float, float] = (0.0, 0.0, 0.0)
    std: tuple[float, float, float] = (1.0, 1.0, 1.0)
    input_name: str | None = None
    output_name: str | None = None

    def __post_init__(self):
        if self.kind not in ("toy", "onnx"):
            raise ValueError(f"unknown backend kind {self.kind!r}")
        if self.role not in ("spatial", "temporal"):
            raise ValueError(f"unknown backend role {self.role!r}")
        if self.kind == "onnx" and not self.path:
            raise ValueError("onnx backend needs a model path")
        if any(s <= 0 for s in self.std):
            raise ValueError("normalization std must be positive")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind, "role": self.role, "path": self.path, "input_size": self.input_size,
            "mean": list(map(float, self.mean)), "std": list(map(float, self.std)),
            "input_name": self.input_name, "output_name": self.output_name,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BackendSpec":
        d = dict(d)
        for key in ("mean", "std"):
            if key in d:
                d[key] = tuple(float(v) for v in d[key])
        return cls(**d)


def normalize(images: np.ndarray, mean, std) -> np.ndarray:
    """uint8 ``(..., 3)`` -> float ``(..., 3)`` scaled to [0, 1] then standardized."""
    x = images.astype(np.float64) / 255.0
    return (x - np.asarray(mean)) / np.asarray(std)


def luma(x: np.ndarray) -> np.ndarray:
    return x @ LUMA_WEIGHTS


def sobel_magnitude(plane: np.ndarray) -> np.ndarray:
    """Full-size Sobel gradient magnitude, borders replicated."""
    gx = cv2.Sobel(plane, cv2.CV_64F, 1, 0, ksize=3, borderType=cv2.BORDER_REPLICATE)
    gy = cv2.Sobel(plane, cv2.CV_64F, 0, 1, ksize=3, borderType=cv2.BORDER_REPLICATE)
    return np.hypot(gx, gy)


def hf_energy_ratio(plane: np.ndarray) -> float:
    """Share of the (mean-removed) energy left after a 3x3 box low-pass."""
    centered = plane - plane.mean()
    total = float(np.sum(centered ** 2))
    if total <= 0.0:
        return 0.0
    residual = plane - cv2.blur(plane, (3, 3), borderType=cv2.BORDER_REFLECT)
    return float(np.sum(residual ** 2)) / total


class Backend:
    spec: BackendSpec

    @property
    def backend_id(self) -> str:
        raise NotImplementedError

    def weights_digest(self) -> str:
        raise NotImplementedError

    def feature_map(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError


@dataclass
class ToySpatialBackend(Backend):
    """Seven channels: luma, global luma std, Sobel magnitude, high-frequency
    ratio, and the three colour planes. Global statistics are broadcast as
    constant maps so average pooling returns them unchanged."""

    spec: BackendSpec = field(default_factory=lambda: BackendSpec("toy", "spatial"))

    @property
    def backend_id(self) -> str:
        return "toy-spatial-v1"

    def weights_digest(self) -> str:
        return hashlib.sha256(self.backend_id.encode()).hexdigest()

    def feature_map(self, frame: np.ndarray) -> np.ndarray:
        x = normalize(frame, self.spec.mean, self.spec.std)
        y = luma(x)
        h, w = y.shape
        const = lambda v: np.full((h, w), v)  # noqa: E731
        return np.stack([
            y,
            const(y.std()),
            sobel_magnitude(y),
            const(hf_energy_ratio(y)),
            x[..., 0], x[..., 1], x[..., 2],
        ])


@dataclass
class ToyTemporalBackend(Backend):
    """Three channels over a ``(T, H, W, 3)`` chunk, with one temporal position:
    mean absolute frame difference, flicker (std over time of the
    frame-mean luma, constant map) and mean absolute second difference."""

    spec: BackendSpec = field(default_factory=lambda: BackendSpec("toy", "temporal"))

    @property
    def backend_id(self) -> str:
        return "toy-temporal-v1"

    def weights_digest(self) -> str:
        return hashlib.sha256(self.backend_id.encode()).hexdigest()

    def feature_map(self, chunk: np.ndarray) -> np.ndarray:
        y = luma(normalize(chunk, self.spec.mean, self.spec.std))
        t, h, w = y.shape
        d1 = np.abs(np.diff(y, axis=0)).mean(axis=0) if t >= 2 else np.zeros((h, w))
        d2 = np.abs(np.diff(y, n=2, axis=0)).mean(axis=0) if t >= 3 else np.zeros((h, w))
        flicker = np.full((h, w), y.mean(axis=(1, 2)).std())
        return np.stack([d1, flicker, d2])[:, None]


class OnnxBackend(Backend):
    def __init__(self, spec: BackendSpec):
        self.spec = spec
        self.path = Path(spec.path)
        if not self.path.exists():
            raise BackendError(f"model file not found: {self.path}")
        self._digest = hashlib.sha256(self.path.read_bytes()).hexdigest()
        self._session = None

    @property
    def backend_id(self) -> str:
        return f"onnx-{self.spec.role}-{self._digest[:16]}"

    def weights_digest(self) -> str:
        return hashlib.sha256(self.path.read_bytes()).hexdigest()

    def _get_session(self):
        if self._session is None:
            try:
                import onnxruntime as ort
            except ImportError as exc:  # pragma: no cover
                raise BackendError("onnxruntime is required for onnx backends") from exc
            opts = ort.SessionOptions()
            opts.intra_op_num_threads = 1
            opts.inter_op_num_threads = 1
            try:
                self._session = ort.InferenceSession(str(self.path), opts, providers=["CPUExecutionProvider"])
            except Exception as exc:
                raise BackendError(f"cannot load {self.path}: {exc}") from exc
        return self._session

    def _center_crop(self, x: np.ndarray) -> np.ndarray:
        size = self.spec.input_size
        if not size:
            return x
        h, w = x.shape[-3:-1]
        if h < size or w < size:
            raise BackendError(f"input {h}x{w} smaller than crop {size}")
        top, left = (h - size) // 2, (w - size) // 2
        return x[..., top:top + size, left:left + size, :]

    def feature_map(self, x: np.ndarray) -> np.ndarray:
        sess = self._get_session()
        x = normalize(self._center_crop(x), self.spec.mean, self.spec.std).astype(np.float32)
        if self.spec.role == "spatial":
            x = x.transpose(2, 0, 1)[None]
        else:
            x = x.transpose(3, 0, 1, 2)[None]
        in_name = self.spec.input_name or sess.get_inputs()[0].name
        out_name = self.spec.output_name or sess.get_outputs()[0].name
        try:
            (out,) = sess.run([out_name], {in_name: np.ascontiguousarray(x)})
        except Exception as exc:
            raise BackendError(f"inference failed for {self.path}: {exc}") from exc
        out = np.asarray(out, dtype=np.float64)[0]
        want = 3 if self.spec.role == "spatial" else 4
        if out.ndim != want:
            raise BackendError(f"expected a {want}-D feature map, got shape {out.shape}")
        return out


def make_backend(spec: BackendSpec | dict) -> Backend:
    if isinstance(spec, dict):
        spec = BackendSpec.from_dict(spec)
    if spec.kind == "toy":
        return ToySpatialBackend(spec) if spec.role == "spatial" else ToyTemporalBackend(spec)
    return OnnxBackend(spec)


def spec_digest(spec: BackendSpec) -> str:
    return hashlib.sha256(json.dumps(spec.to_dict(), sort_keys=True).encode()).hexdigest()
