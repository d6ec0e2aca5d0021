from .head import POOLINGS, RegressionHead, pool_scores, pooling_operator, standardization
from .losses import LOSSES, loss_value_and_gradient, soft_rank
from .train import TrainConfig, TrainingError, TrainLog, train_head
from .variants import REGISTRY, ResolvedVariant, VariantSpec, get_variant, resolve_variant

__all__ = [
    "POOLINGS", "RegressionHead", "pool_scores", "pooling_operator", "standardization", "LOSSES",
    "loss_value_and_gradient", "soft_rank", "TrainConfig", "TrainingError", "TrainLog", "train_head",
    "REGISTRY", "ResolvedVariant", "VariantSpec", "get_variant", "resolve_variant",
]
