from .logistic import LogisticFit, fit_logistic, logistic4, plcc_with_logistic
from .metrics import DegenerateCorrelationWarning, average_ranks, pearson, plcc, srcc

# protocol and diagnostics depend on the model package, which itself needs
# the metrics above; load them on first access to keep imports acyclic
_LAZY = {
    "protocol": ("EvalReport", "Partition", "SplitPlan", "SplitResult", "cross_dataset_eval", "lower_median",
                 "make_splits", "run_protocol", "split_sizes", "weighted_average", "weighted_mean"),
    "diagnostics": ("Diagnostic", "diagnostics_table", "easy_dataset_diagnostic", "improvement",
                    "results_table", "severity"),
}


def __getattr__(name):
    import importlib

    for mod, names in _LAZY.items():
        if name in names:
            return getattr(importlib.import_module(f".{mod}", __name__), name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")


__all__ = [
    "LogisticFit", "fit_logistic", "logistic4", "plcc_with_logistic", "DegenerateCorrelationWarning",
    "average_ranks", "pearson", "plcc", "srcc", *_LAZY["protocol"], *_LAZY["diagnostics"],
]
