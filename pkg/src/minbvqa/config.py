"""Run configuration: a YAML document validated into typed settings.

Every section is optional and falls back to the full-scale defaults
(key frames at 1 fps with shorter side 448, 32-frame 224x224 chunks at
0.5 fps, Adam on PLCC with lr 1e-5 and batch 8). Unknown keys are errors.

Example::

    datasets:
      synthetic: data/manifest.csv
    preprocess: {l_s: 64, l_t: 32, t: 8}
    variants: [I-toy, IV-toy]
    train: {lr: 0.01, epochs: 100, decay_epochs: [60]}
    seed: 0
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field, fields
from pathlib import Path

import yaml

from .features.backends import BackendSpec
from .features.pooling import POOLING_MODES
from .model.head import POOLINGS
from .model.train import TrainConfig
from .model.variants import get_variant, resolve_variant
from .preprocess import PreprocessConfig


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SynthConfig:
    out_dir: str = "synthetic"
    kinds: tuple[str, ...] = ("blur", "noise", "flicker")
    levels: int = 10
    per_level: int = 10
    seed: int = 0
    duration: float = 4.0
    fps: float = 10.0
    width: int = 64
    height: int = 64


@dataclass
class RunConfig:
    datasets: dict[str, Path] = field(default_factory=dict)
    preprocess: PreprocessConfig = field(default_factory=PreprocessConfig)
    backends: dict[str, BackendSpec] = field(default_factory=dict)
    pooling: str = "AVG"
    variants: list[str] = field(default_factory=lambda: ["I-toy"])
    train: TrainConfig = field(default_factory=TrainConfig)
    head_pooling: str = "SIMPLE_AVERAGE"
    kernel_size: int = 5
    seed: int = 0
    out_dir: Path = Path("out")
    cache_dir: Path = Path("cache")
    jobs: int = 0
    thresholds: tuple[float, float] = (2.0, 10.0)
    head: Path | None = None
    targets: list[str] = field(default_factory=list)
    baseline: str | None = None
    augmented: str | None = None
    synth: SynthConfig = field(default_factory=SynthConfig)
    base_dir: Path = Path(".")

    @property
    def workers(self) -> int:
        return self.jobs if self.jobs > 0 else (os.cpu_count() or 1)

    def train_config(self) -> TrainConfig:
        d = self.train.to_dict()
        d["seed"] = self.seed
        return TrainConfig(**d)

    def _rel(self, path) -> str:
        # relative to the config file, so a moved project keeps its digest
        return Path(os.path.relpath(Path(path), self.base_dir)).as_posix()

    def to_dict(self) -> dict:
        """Settings that determine results (paths to outputs and worker count excluded)."""
        backends = {}
        for k, v in sorted(self.backends.items()):
            d = v.to_dict()
            if d["path"]:
                d["path"] = self._rel(d["path"])
            backends[k] = d
        return {
            "datasets": {k: self._rel(v) for k, v in sorted(self.datasets.items())},
            "preprocess": self.preprocess.to_dict(),
            "backends": backends,
            "pooling": self.pooling,
            "variants": list(self.variants),
            "train": self.train_config().to_dict(),
            "head_pooling": self.head_pooling,
            "kernel_size": self.kernel_size,
            "seed": self.seed,
            "thresholds": list(self.thresholds),
            "head": None if self.head is None else self._rel(self.head),
            "targets": list(self.targets),
            "baseline": self.baseline,
            "augmented": self.augmented,
        }

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()


_TOP_KEYS = {f.name for f in fields(RunConfig)} - {"base_dir"}


def _build(cls, raw, where: str):
    if raw is None:
        return cls()
    if not isinstance(raw, dict):
        raise ConfigError(f"{where}: expected a mapping")
    known = {f.name: f for f in fields(cls)}
    extra = set(raw) - set(known)
    if extra:
        raise ConfigError(f"{where}: unknown keys {sorted(extra)}")
    values = {}
    for k, v in raw.items():
        default = known[k].default
        # YAML 1.1 reads "1e-5" as a string
        if isinstance(default, float) and isinstance(v, (str, int)) and not isinstance(v, bool):
            try:
                v = float(v)
            except ValueError:
                raise ConfigError(f"{where}.{k}: expected a number, got {v!r}") from None
        values[k] = tuple(v) if isinstance(v, list) else v
    try:
        return cls(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def parse_config(raw: dict | None, base_dir: Path | str = ".") -> RunConfig:
    raw = dict(raw or {})
    base_dir = Path(base_dir)
    extra = set(raw) - _TOP_KEYS
    if extra:
        raise ConfigError(f"unknown top-level keys {sorted(extra)}")

    def resolve(p) -> Path:
        p = Path(str(p))
        return p if p.is_absolute() else base_dir / p

    cfg = RunConfig(base_dir=base_dir)
    if "datasets" in raw:
        if not isinstance(raw["datasets"], dict):
            raise ConfigError("datasets: expected a mapping of name -> manifest path")
        cfg.datasets = {str(k): resolve(v) for k, v in raw["datasets"].items()}
    cfg.preprocess = _build(PreprocessConfig, raw.get("preprocess"), "preprocess")
    train = raw.get("train") or {}
    if "decay_epochs" in train and isinstance(train["decay_epochs"], int):
        train = {**train, "decay_epochs": [train["decay_epochs"]]}
    cfg.train = _build(TrainConfig, train, "train")
    cfg.synth = _build(SynthConfig, raw.get("synth"), "synth")
    backends = raw.get("backends") or {}
    if not isinstance(backends, dict):
        raise ConfigError("backends: expected a mapping")
    for key, spec in backends.items():
        if not isinstance(spec, dict):
            raise ConfigError(f"backends.{key}: expected a mapping")
        spec = dict(spec)
        spec.setdefault("role", "temporal" if key == "slowfast" else "spatial")
        if spec.get("path"):
            spec["path"] = str(resolve(spec["path"]))
        try:
            cfg.backends[str(key)] = BackendSpec.from_dict(spec)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"backends.{key}: {exc}") from None

    for key in ("pooling", "head_pooling", "baseline", "augmented"):
        if key in raw:
            setattr(cfg, key, raw[key])
    for key in ("kernel_size", "seed", "jobs"):
        if key in raw:
            if not isinstance(raw[key], int) or isinstance(raw[key], bool):
                raise ConfigError(f"{key}: expected an integer")
            setattr(cfg, key, raw[key])
    if "variants" in raw:
        v = raw["variants"]
        cfg.variants = [v] if isinstance(v, str) else [str(x) for x in v]
    if "targets" in raw:
        cfg.targets = [str(x) for x in raw["targets"]]
    if "thresholds" in raw:
        t = raw["thresholds"]
        if not (isinstance(t, (list, tuple)) and len(t) == 2 and t[0] <= t[1]):
            raise ConfigError("thresholds: expected [low, high] with low <= high")
        cfg.thresholds = (float(t[0]), float(t[1]))
    for key in ("out_dir", "cache_dir", "head"):
        if raw.get(key) is not None:
            setattr(cfg, key, resolve(raw[key]))
    return cfg


def load_config(path: Path | str | None) -> RunConfig:
    if path is None:
        return parse_config({})
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if raw is not None and not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return parse_config(raw, path.parent)


def validate(cfg: RunConfig, needs: set[str]) -> None:
    """Check everything a command needs before it touches the filesystem.

    ``needs`` may contain ``datasets``, ``variants``, ``head``, ``targets``
    and ``analyze``.
    """
    if cfg.pooling not in POOLING_MODES:
        raise ConfigError(f"pooling: expected one of {POOLING_MODES}")
    if cfg.head_pooling not in POOLINGS:
        raise ConfigError(f"head_pooling: expected one of {POOLINGS}")
    if cfg.kernel_size < 1 or cfg.kernel_size % 2 == 0:
        raise ConfigError("kernel_size must be a positive odd integer")
    if "datasets" in needs:
        if not cfg.datasets:
            raise ConfigError("no datasets configured")
        for name, path in cfg.datasets.items():
            if not Path(path).exists():
                raise ConfigError(f"datasets.{name}: manifest not found: {path}")
    if "variants" in needs or "analyze" in needs:
        ids = list(cfg.variants)
        if "analyze" in needs:
            if not cfg.baseline or not cfg.augmented:
                raise ConfigError("analyze needs 'baseline' and 'augmented' variant ids")
            ids += [cfg.baseline, cfg.augmented]
        for vid in ids:
            try:
                get_variant(vid)
                resolve_variant(vid, cfg.backends)
            except KeyError as exc:
                raise ConfigError(str(exc.args[0])) from None
    for spec in cfg.backends.values():
        if spec.kind == "onnx" and not Path(spec.path).exists():
            raise ConfigError(f"backend model not found: {spec.path}")
    if "head" in needs:
        if cfg.head is None or not Path(cfg.head).exists():
            raise ConfigError(f"head file not found: {cfg.head}")
    if "targets" in needs:
        if not cfg.targets:
            raise ConfigError("no target datasets given")
        missing = [t for t in cfg.targets if t not in cfg.datasets]
        if missing:
            raise ConfigError(f"targets not among configured datasets: {missing}")
