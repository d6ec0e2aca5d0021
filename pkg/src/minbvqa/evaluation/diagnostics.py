"""Improvement-over-baseline diagnostics and results-table output."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

from .protocol import EvalReport

DEFAULT_THRESHOLDS = (2.0, 10.0)


def improvement(base: float, augmented: float) -> float:
    """Relative change in percent, ``100 * (aug - base) / |base|``.

    The absolute value only matters for a negative baseline correlation,
    where it keeps a positive sign meaning "better".
    """
    if not (math.isfinite(base) and math.isfinite(augmented)) or base == 0:
        return math.nan
    return 100.0 * (augmented - base) / abs(base)


def severity(delta_srcc: float, thresholds=DEFAULT_THRESHOLDS) -> str:
    low, high = thresholds
    if not math.isfinite(delta_srcc):
        return "undetermined"
    if delta_srcc < low:
        return "spatial-dominated"
    if delta_srcc <= high:
        return "mixed"
    return "temporal-dependent"


@dataclass
class Diagnostic:
    dataset: str
    baseline: str
    augmented: str
    base_srcc: float
    base_plcc: float
    aug_srcc: float
    aug_plcc: float
    delta_srcc: float
    delta_plcc: float
    label: str

    def to_dict(self) -> dict:
        return dict(vars(self))


def easy_dataset_diagnostic(base: EvalReport, augmented: EvalReport, thresholds=DEFAULT_THRESHOLDS) -> Diagnostic:
    if base.dataset != augmented.dataset:
        raise ValueError(f"reports are for different datasets: {base.dataset} vs {augmented.dataset}")
    ds = improvement(base.median_srcc, augmented.median_srcc)
    dp = improvement(base.median_plcc, augmented.median_plcc)
    return Diagnostic(base.dataset, base.variant, augmented.variant, base.median_srcc, base.median_plcc,
                      augmented.median_srcc, augmented.median_plcc, ds, dp, severity(ds, thresholds))


def _fmt(x: float, pct: bool = False) -> str:
    if not math.isfinite(x):
        return "---"
    return f"{x:+.1f}%" if pct else f"{x:.3f}"


def results_table(reports: list[EvalReport], baselines: dict[str, str] | None = None) -> str:
    """CSV with one row per variant and a SRCC/PLCC column pair per dataset.

    After every variant whose baseline (``baselines[variant]``) is a
    different variant present in the table, an ``Improvement over baseline``
    row follows, as in the usual main results layout.
    """
    datasets = list(dict.fromkeys(r.dataset for r in reports))
    variants = list(dict.fromkeys(r.variant for r in reports))
    by = {(r.dataset, r.variant): r for r in reports}
    baselines = baselines or {}
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["variant", "row"] + [f"{d}:{m}" for d in datasets for m in ("SRCC", "PLCC")])
    for v in variants:
        row = [v, "score"]
        for d in datasets:
            r = by.get((d, v))
            row += [_fmt(r.median_srcc), _fmt(r.median_plcc)] if r else ["---", "---"]
        w.writerow(row)
        b = baselines.get(v)
        if b and b != v and b in variants:
            row = [v, f"improvement over {b}"]
            for d in datasets:
                r, rb = by.get((d, v)), by.get((d, b))
                if r and rb:
                    row += [_fmt(improvement(rb.median_srcc, r.median_srcc), True),
                            _fmt(improvement(rb.median_plcc, r.median_plcc), True)]
                else:
                    row += ["---", "---"]
            w.writerow(row)
    return buf.getvalue()


def diagnostics_table(diags: list[Diagnostic]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["dataset", "baseline", "augmented", "base_srcc", "aug_srcc", "delta_srcc_pct",
                "base_plcc", "aug_plcc", "delta_plcc_pct", "label"])
    for d in diags:
        w.writerow([d.dataset, d.baseline, d.augmented, _fmt(d.base_srcc), _fmt(d.aug_srcc),
                    _fmt(d.delta_srcc, True), _fmt(d.base_plcc), _fmt(d.aug_plcc), _fmt(d.delta_plcc, True), d.label])
    return buf.getvalue()
