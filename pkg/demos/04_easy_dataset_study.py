"""Does a dataset need motion features? The improvement diagnostic on toy data.

A dataset whose distortions are all spatial (blur, noise) is solved by a
frame-level model; adding the temporal analyzer changes nothing. A flicker
dataset is the opposite. This runs the full 6:2:2 x10 protocol on both.

Run: python3 demos/04_easy_dataset_study.py  (a few seconds)
"""

import tempfile
import warnings
from pathlib import Path

from minbvqa.evaluation.diagnostics import diagnostics_table, easy_dataset_diagnostic, results_table
from minbvqa.evaluation.protocol import make_splits, run_protocol
from minbvqa.features import BackendSpec
from minbvqa.ingest import load_manifest
from minbvqa.model import TrainConfig
from minbvqa.pipeline import extract_dataset
from minbvqa.preprocess import PreprocessConfig
from minbvqa.synthetic import generate_synthetic_dataset, grid_specs

warnings.simplefilter("ignore")
root = Path(tempfile.mkdtemp())

# 300 clips: 3 distortions x 10 levels x 10 contents, 64x64, 4 s at 10 fps.
specs = grid_specs(("blur", "noise", "flicker"))
entries = load_manifest(generate_synthetic_dataset(specs, root / "data"))
print(f"{len(entries)} synthetic videos in {root / 'data'}")

pre = PreprocessConfig(r_a=1, r_b=0.5, l_s=64, l_t=32, t=8)
records, stats = extract_dataset(entries, pre, BackendSpec("toy", "spatial"), BackendSpec("toy", "temporal"),
                                 "AVG", root / "cache", jobs=1)
print(f"features: {stats['extracted']} extracted, {stats['cache_hits']} from cache")

kind = {e.video_id: s.kind for s, e in zip(specs, entries)}
mos = {e.video_id: e.mos for e in entries}
cfg = TrainConfig(lr=0.01, epochs=100, decay_epochs=(60,))

reports, diags = [], []
for name, kinds in [("spatial", ("blur", "noise")), ("flicker", ("flicker",))]:
    ids = [i for i in records if kind[i] in kinds]
    subset = {i: records[i] for i in ids}
    plan = make_splits(ids, seed=0)
    base = run_protocol(subset, mos, plan, cfg, False, dataset=name, variant="I-toy")
    aug = run_protocol(subset, mos, plan, cfg, True, dataset=name, variant="IV-toy")
    reports += [base, aug]
    diags.append(easy_dataset_diagnostic(base, aug))

print("\nmedian results over 10 splits")
print(results_table(reports, {"IV-toy": "I-toy"}))
print(diagnostics_table(diags))
