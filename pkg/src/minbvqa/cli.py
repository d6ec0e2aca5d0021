"""Command-line entry point.

    minbvqa [--config FILE] [--seed N] [--cache-dir DIR] [--out-dir DIR] [--jobs N] COMMAND

Commands: preprocess, extract, train, eval, crossval, analyze, siti, synth.
Exit codes: 0 success, 1 invalid configuration, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, load_config, validate
from .evaluation.diagnostics import diagnostics_table, easy_dataset_diagnostic, results_table
from .evaluation.protocol import EvalReport, cross_dataset_eval, make_splits, run_protocol, weighted_average
from .features.siti import compute_siti
from .ingest import load_manifest, open_video
from .model.head import RegressionHead
from .model.train import train_head
from .model.variants import ResolvedVariant, resolve_variant
from .pipeline import extract_dataset, feature_digest
from .preprocess import preprocess_video
from .synthetic import generate_synthetic_dataset, grid_specs

logger = logging.getLogger("minbvqa")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


def _clean(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        return _clean(obj.item())
    if isinstance(obj, Path):
        return str(obj)
    return obj


def write_json(path: Path, payload: dict, cfg: RunConfig) -> Path:
    """Write a report stamped with the config digest and seed. No timestamps."""
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {"config_digest": cfg.digest(), "seed": cfg.seed, "version": __version__, **payload}
    path.write_text(json.dumps(_clean(doc), indent=2, sort_keys=True, allow_nan=False) + "\n", encoding="utf-8")
    return path


def _load_dataset(cfg: RunConfig, name: str):
    entries = load_manifest(cfg.datasets[name])
    return entries, {e.video_id: e.mos for e in entries}


def _features(cfg: RunConfig, entries, variant: ResolvedVariant):
    records, stats = extract_dataset(entries, cfg.preprocess, variant.spatial, variant.temporal, cfg.pooling,
                                     cfg.cache_dir, cfg.workers)
    return records, stats


def _variants(cfg: RunConfig) -> list[ResolvedVariant]:
    return [resolve_variant(v, cfg.backends) for v in cfg.variants]


def _train_val_ids(ids: list[str], seed: int) -> tuple[list[str], list[str]]:
    perm = [ids[i] for i in np.random.default_rng(seed).permutation(len(ids))]
    n_val = max(1, len(ids) // 5)
    return perm[n_val:], perm[:n_val]


# ---------------------------------------------------------------------------
# commands


def cmd_preprocess(cfg: RunConfig, args) -> None:
    validate(cfg, {"datasets"})
    for name in cfg.datasets:
        entries, _ = _load_dataset(cfg, name)
        rows = []
        for e in entries:
            video = preprocess_video(open_video(e), cfg.preprocess, with_chunks=True)
            rows.append(video.summary())
        write_json(cfg.out_dir / "preprocess" / f"{name}.json",
                   {"dataset": name, "preprocess": cfg.preprocess.to_dict(), "videos": rows}, cfg)
        print(f"{name}: {len(rows)} videos, {sum(r['K'] for r in rows)} key frames")


def cmd_extract(cfg: RunConfig, args) -> None:
    validate(cfg, {"datasets", "variants"})
    for name in cfg.datasets:
        entries, _ = _load_dataset(cfg, name)
        seen = set()
        for v in _variants(cfg):
            key = feature_digest(cfg.preprocess, v.spatial, v.temporal, cfg.pooling)
            if key in seen:
                continue
            seen.add(key)
            records, stats = _features(cfg, entries, v)
            dims = next(iter(records.values()))
            stats.update({"dataset": name, "variant": v.id, "d_s": int(dims.spatial.shape[1]),
                          "d_t": 0 if dims.temporal is None else int(dims.temporal.shape[1])})
            write_json(cfg.out_dir / "extract" / f"{name}__{v.id}.json", stats, cfg)
            print(f"{name} [{v.id}]: {stats['extracted']} extracted, {stats['cache_hits']} cached")


def cmd_train(cfg: RunConfig, args) -> None:
    validate(cfg, {"datasets", "variants"})
    for name in cfg.datasets:
        entries, mos = _load_dataset(cfg, name)
        for v in _variants(cfg):
            records, stats = _features(cfg, entries, v)
            train_ids, val_ids = _train_val_ids(list(records), cfg.seed)
            head, log = train_head([records[i] for i in train_ids], [mos[i] for i in train_ids],
                                   [records[i] for i in val_ids], [mos[i] for i in val_ids],
                                   cfg.train_config(), v.temporal is not None, cfg.head_pooling, cfg.kernel_size)
            head.meta.update({"variant": v.id, "dataset": name, "feature_digest": stats["digest"],
                              "config_digest": cfg.digest()})
            out = cfg.out_dir / "heads" / f"{name}__{v.id}.json"
            out.parent.mkdir(parents=True, exist_ok=True)
            head.save(out)
            write_json(cfg.out_dir / "heads" / f"{name}__{v.id}.log.json", log.to_dict(), cfg)
            print(f"{name} [{v.id}]: best val SRCC {log.best_val_srcc:.4f} at epoch {log.best_epoch} -> {out}")


def _eval_one(cfg: RunConfig, name: str, v: ResolvedVariant) -> EvalReport:
    entries, mos = _load_dataset(cfg, name)
    records, stats = _features(cfg, entries, v)
    plan = make_splits(list(records), cfg.seed)
    report = run_protocol(records, mos, plan, cfg.train_config(), v.temporal is not None,
                          cfg.head_pooling, cfg.kernel_size, dataset=name, variant=v.id)
    report.meta.update({"feature_digest": stats["digest"], "baseline": v.baseline_id})
    return report


def _report_path(cfg: RunConfig, name: str, variant: str) -> Path:
    return cfg.out_dir / "reports" / f"{name}__{variant}.json"


def cmd_eval(cfg: RunConfig, args) -> list[EvalReport]:
    validate(cfg, {"datasets", "variants"})
    reports = []
    for name in cfg.datasets:
        for v in _variants(cfg):
            report = _eval_one(cfg, name, v)
            write_json(_report_path(cfg, name, v.id), report.to_dict(), cfg)
            reports.append(report)
            print(f"{name} [{v.id}]: median SRCC {report.median_srcc:.4f}, PLCC {report.median_plcc:.4f} "
                  f"({len(report.completed)}/{len(report.splits)} splits)")
    baselines = {v.id: v.baseline_id for v in _variants(cfg)}
    (cfg.out_dir / "reports").mkdir(parents=True, exist_ok=True)
    (cfg.out_dir / "reports" / "results.csv").write_text(results_table(reports, baselines), encoding="utf-8")
    summary = {v: weighted_average([r for r in reports if r.variant == v]) for v in cfg.variants}
    write_json(cfg.out_dir / "reports" / "weighted_average.json", {"weighted_average": summary}, cfg)
    return reports


def cmd_crossval(cfg: RunConfig, args) -> None:
    validate(cfg, {"head", "targets"})
    head = RegressionHead.load(cfg.head)
    vid = head.meta.get("variant") or cfg.variants[0]
    v = resolve_variant(vid, cfg.backends)
    reports = []
    for name in cfg.targets:
        entries, mos = _load_dataset(cfg, name)
        records, _ = _features(cfg, entries, v)
        report = cross_dataset_eval(head, records, mos, dataset=name, variant=vid)
        report.meta["source"] = head.meta.get("dataset")
        reports.append(report)
        write_json(cfg.out_dir / "crossval" / f"{name}__{vid}.json", report.to_dict(), cfg)
        print(f"{head.meta.get('dataset')} -> {name} [{vid}]: SRCC {report.median_srcc:.4f}, PLCC {report.median_plcc:.4f}")
    (cfg.out_dir / "crossval").mkdir(parents=True, exist_ok=True)
    (cfg.out_dir / "crossval" / "results.csv").write_text(results_table(reports), encoding="utf-8")


def cmd_analyze(cfg: RunConfig, args) -> None:
    validate(cfg, {"datasets", "analyze"})
    diags = []
    for name in cfg.datasets:
        pair = []
        for vid in (cfg.baseline, cfg.augmented):
            path = _report_path(cfg, name, vid)
            report = None
            if path.exists():
                doc = json.loads(path.read_text(encoding="utf-8"))
                if doc.get("config_digest") == cfg.digest():
                    report = EvalReport.from_dict(doc)
            if report is None:
                report = _eval_one(cfg, name, resolve_variant(vid, cfg.backends))
                write_json(path, report.to_dict(), cfg)
            pair.append(report)
        d = easy_dataset_diagnostic(pair[0], pair[1], cfg.thresholds)
        diags.append(d)
        print(f"{name}: {d.baseline} -> {d.augmented}: SRCC {d.delta_srcc:+.1f}%, PLCC {d.delta_plcc:+.1f}% ({d.label})")
    out = cfg.out_dir / "analyze"
    out.mkdir(parents=True, exist_ok=True)
    (out / "diagnostics.csv").write_text(diagnostics_table(diags), encoding="utf-8")
    write_json(out / "diagnostics.json", {"thresholds": list(cfg.thresholds),
                                          "diagnostics": [d.to_dict() for d in diags]}, cfg)


def cmd_siti(cfg: RunConfig, args) -> None:
    if args.manifest:
        cfg.datasets = {Path(args.manifest).stem: Path(args.manifest)}
    validate(cfg, {"datasets"})
    lines = ["dataset,video_id,si,ti,si_mean,ti_mean,mos"]
    for name in cfg.datasets:
        entries, _ = _load_dataset(cfg, name)
        for e in entries:
            d = compute_siti(open_video(e))
            lines.append(f"{name},{e.video_id},{d.si!r},{d.ti!r},{d.si_mean!r},{d.ti_mean!r},{e.mos!r}")
    out = cfg.out_dir / "siti.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"{len(lines) - 1} videos -> {out}")


def cmd_synth(cfg: RunConfig, args) -> None:
    s = cfg.synth
    try:
        specs = grid_specs(s.kinds, s.levels, s.per_level, s.seed, duration=s.duration, fps=s.fps,
                           width=s.width, height=s.height)
    except ValueError as exc:
        raise ConfigError(f"synth: {exc}") from None
    out = Path(s.out_dir)
    if not out.is_absolute():
        out = cfg.base_dir / out
    path = generate_synthetic_dataset(specs, out)
    print(f"{len(specs)} videos -> {path}")


COMMANDS = {
    "preprocess": (cmd_preprocess, "summarize key frames and chunks per video"),
    "extract": (cmd_extract, "populate the feature cache"),
    "train": (cmd_train, "train one head per dataset and variant"),
    "eval": (cmd_eval, "run the 6:2:2 x10 protocol"),
    "crossval": (cmd_crossval, "score a trained head on other datasets"),
    "analyze": (cmd_analyze, "improvement of an augmented variant over a baseline"),
    "siti": (cmd_siti, "per-video SI/TI table"),
    "synth": (cmd_synth, "generate the synthetic corpus"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="minbvqa", description=__doc__.split("\n\n")[0])
    parser.add_argument("--config", type=Path, help="YAML run configuration")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--cache-dir", type=Path)
    parser.add_argument("--out-dir", type=Path)
    parser.add_argument("--jobs", type=int, help="extraction workers (default: logical cores)")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_) in COMMANDS.items():
        p = sub.add_parser(name, help=help_)
        if name == "siti":
            p.add_argument("--manifest", type=Path, help="manifest to describe instead of the configured datasets")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.cache_dir is not None:
            cfg.cache_dir = args.cache_dir
        if args.out_dir is not None:
            cfg.out_dir = args.out_dir
        if args.jobs is not None:
            if args.jobs < 0:
                raise ConfigError("--jobs must be >= 0")
            cfg.jobs = args.jobs
        COMMANDS[args.command][0](cfg, args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:
        logger.debug("runtime failure", exc_info=True)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
