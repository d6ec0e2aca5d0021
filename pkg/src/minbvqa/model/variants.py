"""The ten model variants of the family, as declarative configs.

A variant picks a spatial backbone and its initialization, and whether
motion (temporal) features are appended. Backbones are resolved to concrete
backends at run time: ``"I"`` needs a backend registered under
``"resnet50/imagenet"``, while ``"I-toy"`` uses the analytic toy backends
for every slot so the whole matrix runs without model files.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..features.backends import BackendSpec

TOY_SUFFIX = "-toy"


@dataclass(frozen=True)
class VariantSpec:
    id: str
    description: str
    backbone: str  # "resnet50" | "swin_b"
    init: str  # "imagenet" | "iqa" | "vqa"
    temporal: bool
    baseline: str  # id of the variant improvements are measured against

    @property
    def spatial_key(self) -> str:
        return f"{self.backbone}/{self.init}"


REGISTRY: dict[str, VariantSpec] = {v.id: v for v in [
    VariantSpec("I", "ResNet-50 as baseline", "resnet50", "imagenet", False, "I"),
    VariantSpec("II", "(I) + IQA pre-trained", "resnet50", "iqa", False, "I"),
    VariantSpec("III", "(I) + VQA pre-trained", "resnet50", "vqa", False, "I"),
    VariantSpec("IV", "(I) + motion features", "resnet50", "imagenet", True, "I"),
    VariantSpec("V", "(II) + motion features", "resnet50", "iqa", True, "I"),
    VariantSpec("VI", "(III) + motion features", "resnet50", "vqa", True, "I"),
    VariantSpec("VII", "Swin Transformer-B as baseline", "swin_b", "imagenet", False, "VII"),
    VariantSpec("VIII", "(VII) + VQA pre-trained", "swin_b", "vqa", False, "VII"),
    VariantSpec("IX", "(VII) + motion features", "swin_b", "imagenet", True, "VII"),
    VariantSpec("X", "(VIII) + motion features", "swin_b", "vqa", True, "VII"),
]}

TEMPORAL_KEY = "slowfast"


@dataclass(frozen=True)
class ResolvedVariant:
    id: str
    spec: VariantSpec
    spatial: BackendSpec
    temporal: BackendSpec | None
    toy: bool

    @property
    def baseline_id(self) -> str:
        return self.spec.baseline + (TOY_SUFFIX if self.toy else "")


def get_variant(variant_id: str) -> tuple[VariantSpec, bool]:
    toy = variant_id.endswith(TOY_SUFFIX)
    base = variant_id[: -len(TOY_SUFFIX)] if toy else variant_id
    if base not in REGISTRY:
        raise KeyError(f"unknown variant {variant_id!r}; known: {', '.join(REGISTRY)} (optionally with '{TOY_SUFFIX}')")
    return REGISTRY[base], toy


def resolve_variant(variant_id: str, backends: dict[str, BackendSpec] | None = None) -> ResolvedVariant:
    spec, toy = get_variant(variant_id)
    backends = backends or {}
    if toy:
        spatial = BackendSpec("toy", "spatial")
        temporal = BackendSpec("toy", "temporal") if spec.temporal else None
    else:
        if spec.spatial_key not in backends:
            raise KeyError(f"variant {variant_id} needs a spatial backend registered as {spec.spatial_key!r}")
        spatial = backends[spec.spatial_key]
        temporal = None
        if spec.temporal:
            if TEMPORAL_KEY not in backends:
                raise KeyError(f"variant {variant_id} needs a temporal backend registered as {TEMPORAL_KEY!r}")
            temporal = backends[TEMPORAL_KEY]
    return ResolvedVariant(variant_id, spec, spatial, temporal, toy)
