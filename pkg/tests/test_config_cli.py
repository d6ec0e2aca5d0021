import json
import subprocess
import sys

import numpy as np
import pytest
import yaml

from minbvqa.cli import main
from minbvqa.config import ConfigError, load_config, parse_config, validate

SMALL = {
    "datasets": {"syn": "synthetic/manifest.csv"},
    "preprocess": {"r_a": 1, "r_b": 0.5, "l_s": 32, "l_t": 16, "t": 4, "tau": 1},
    "variants": ["I-toy", "IV-toy"],
    "train": {"lr": "1e-2", "epochs": 30, "decay_epochs": 20},
    "baseline": "I-toy",
    "augmented": "IV-toy",
    "synth": {"out_dir": "synthetic", "kinds": ["blur", "flicker"], "levels": 5, "per_level": 3,
              "duration": 2.0, "width": 32, "height": 32},
    "seed": 0,
    "jobs": 1,
}


def _write(tmp_path, raw, name="run.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(raw), encoding="utf-8")
    return path


def test_defaults_follow_full_scale_recipe():
    cfg = load_config(None)
    assert (cfg.preprocess.l_s, cfg.preprocess.l_t, cfg.preprocess.t) == (448, 224, 32)
    assert (cfg.train.lr, cfg.train.batch_size, cfg.train.loss) == (1e-5, 8, "PLCC")


def test_parse_coerces_and_resolves(tmp_path):
    cfg = parse_config(SMALL, tmp_path)
    assert cfg.train.lr == 0.01 and cfg.train.decay_epochs == (20,)
    assert cfg.datasets["syn"] == tmp_path / "synthetic/manifest.csv"


def test_digest_ignores_output_locations(tmp_path):
    a = parse_config({**SMALL, "out_dir": "x", "cache_dir": "y", "jobs": 3}, tmp_path)
    b = parse_config(SMALL, tmp_path)
    assert a.digest() == b.digest()
    assert parse_config({**SMALL, "seed": 1}, tmp_path).digest() != b.digest()
    assert parse_config(SMALL, tmp_path / "moved").digest() == b.digest()


@pytest.mark.parametrize("raw,msg", [
    ({"bogus": 1}, "unknown top-level"),
    ({"train": {"lr": "fast"}}, "number"),
    ({"preprocess": {"l_s": 10, "l_t": 20}}, "l_t"),
    ({"train": {"batch": 4}}, "unknown keys"),
    ({"thresholds": [10, 2]}, "thresholds"),
    ({"seed": "zero"}, "integer"),
])
def test_invalid_configs(raw, msg):
    with pytest.raises(ConfigError, match=msg):
        parse_config(raw)


def test_validate_checks_references(tmp_path):
    cfg = parse_config(SMALL, tmp_path)
    with pytest.raises(ConfigError, match="manifest not found"):
        validate(cfg, {"datasets"})
    cfg = parse_config({**SMALL, "variants": ["IV"]}, tmp_path)
    with pytest.raises(ConfigError, match="resnet50/imagenet"):
        validate(cfg, {"variants"})
    cfg = parse_config({**SMALL, "targets": ["nope"]}, tmp_path)
    with pytest.raises(ConfigError, match="targets"):
        validate(cfg, {"targets"})
    with pytest.raises(ConfigError, match="head file"):
        validate(cfg, {"head"})


def test_exit_codes(tmp_path, capsys):
    assert main(["--config", str(tmp_path / "missing.yaml"), "eval"]) == 1
    assert main(["frobnicate"]) == 1
    cfg = _write(tmp_path, SMALL)
    # validation failure leaves no partial output behind
    assert main(["--config", str(cfg), "--out-dir", str(tmp_path / "out"), "eval"]) == 1
    assert not (tmp_path / "out").exists()
    # a manifest pointing at a missing video fails at run time
    (tmp_path / "synthetic").mkdir()
    (tmp_path / "synthetic" / "manifest.csv").write_text(
        "video_id,path,mos,width,height,fps,frame_count\nv,gone.npy,50,32,32,10,20\n")
    assert main(["--config", str(cfg), "--out-dir", str(tmp_path / "out"),
                 "--cache-dir", str(tmp_path / "cache"), "extract"]) == 2


def _tree(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


@pytest.fixture(scope="module")
def pipeline_runs(tmp_path_factory):
    base = tmp_path_factory.mktemp("cli")
    cfg = _write(base, SMALL)
    assert main(["--config", str(cfg), "synth"]) == 0
    runs = []
    for tag in ("a", "b"):
        flags = ["--config", str(cfg), "--out-dir", str(base / f"out_{tag}"), "--cache-dir", str(base / f"cache_{tag}")]
        for cmd in ("preprocess", "extract", "train", "eval", "analyze", "siti"):
            assert main(flags + [cmd]) == 0, cmd
        runs.append((base / f"out_{tag}", base / f"cache_{tag}"))
    return base, cfg, runs


def test_repeated_runs_are_byte_identical(pipeline_runs):
    _, _, [(out_a, cache_a), (out_b, cache_b)] = pipeline_runs
    ta, tb = _tree(out_a), _tree(out_b)
    assert ta.keys() == tb.keys() and ta == tb
    ca, cb = _tree(cache_a), _tree(cache_b)
    assert ca and ca == cb
    assert any(k.startswith("heads/") for k in ta) and "reports/results.csv" in ta


def test_outputs_carry_digest_and_seed(pipeline_runs):
    base, cfg_path, [(out, _), _] = pipeline_runs
    digest = load_config(cfg_path).digest()
    for path in out.rglob("*.json"):
        doc = json.loads(path.read_text())
        if path.parent.name == "heads" and not path.name.endswith(".log.json"):
            assert doc["meta"]["config_digest"] == digest
        else:
            assert doc["config_digest"] == digest and doc["seed"] == 0


def test_analyze_reports_improvement(pipeline_runs):
    _, _, [(out, _), _] = pipeline_runs
    diag = json.loads((out / "analyze" / "diagnostics.json").read_text())["diagnostics"]
    assert {d["dataset"] for d in diag} == {"syn"}
    assert "%" in (out / "analyze" / "diagnostics.csv").read_text()
    table = (out / "reports" / "results.csv").read_text()
    assert "improvement over I-toy" in table


def test_crossval_uses_trained_head(pipeline_runs, tmp_path):
    base, _, [(out, cache), _] = pipeline_runs
    raw = {**SMALL, "datasets": {"syn": str(base / "synthetic/manifest.csv")}, "targets": ["syn"],
           "head": str(out / "heads" / "syn__I-toy.json"), "variants": ["I-toy"]}
    cfg = _write(tmp_path, raw)
    assert main(["--config", str(cfg), "--out-dir", str(tmp_path / "o"), "--cache-dir", str(cache), "crossval"]) == 0
    report = json.loads((tmp_path / "o" / "crossval" / "syn__I-toy.json").read_text())
    assert report["n_videos"] == 30 and report["meta"]["cross_dataset"]


def test_siti_constant_video(tmp_path):
    np.save(tmp_path / "flat.npy", np.full((5, 16, 16, 3), 90, np.uint8))
    (tmp_path / "m.csv").write_text("video_id,path,mos,width,height,fps,frame_count\nflat,flat.npy,50,16,16,10,5\n")
    assert main(["--out-dir", str(tmp_path / "o"), "siti", "--manifest", str(tmp_path / "m.csv")]) == 0
    rows = (tmp_path / "o" / "siti.csv").read_text().strip().split("\n")
    assert rows[1].split(",")[2:4] == ["0.0", "0.0"]


def test_module_entry_point_help():
    res = subprocess.run([sys.executable, "-m", "minbvqa.cli", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "analyze" in res.stdout
