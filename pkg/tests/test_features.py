import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from minbvqa.features import (
    BackendSpec,
    FeatureRecord,
    ToySpatialBackend,
    ToyTemporalBackend,
    compute_siti,
    extract_record,
    global_pool,
    make_backend,
    spatial_features,
    temporal_features,
)
from minbvqa.features.backends import BackendError, SPATIAL_TOY_CHANNELS
from minbvqa.ingest import VideoAsset
from minbvqa.preprocess import PreprocessConfig, preprocess_video
from minbvqa.synthetic import SyntheticSpec, render

onnx = pytest.importorskip("onnx")
from onnx import TensorProto, helper  # noqa: E402


def test_pool_hand_example():
    fmap = np.array([[[1.0, 3.0], [1.0, 3.0]], [[2.0, 2.0], [2.0, 2.0]]])
    assert global_pool(fmap, "AVG").tolist() == [2.0, 2.0]
    assert global_pool(fmap, "AVG_STD").tolist() == [2.0, 2.0, 1.0, 0.0]


def test_pool_constant_map():
    fmap = np.stack([np.full((3, 4), c) for c in (0.5, -2.0, 7.0)])
    out = global_pool(fmap, "AVG_STD")
    assert out[:3].tolist() == [0.5, -2.0, 7.0] and np.all(out[3:] == 0)


def test_pool_unknown_mode():
    with pytest.raises(ValueError):
        global_pool(np.zeros((1, 2, 2)), "MAX")


@settings(max_examples=30)
@given(st.integers(0, 2 ** 31), st.floats(-8, 8).filter(lambda a: abs(a) > 1e-3))
def test_pool_linear_and_prefix(seed, alpha):
    frame = np.random.default_rng(seed).integers(0, 256, (16, 20, 3), dtype=np.uint8)
    fmap = ToySpatialBackend().feature_map(frame)
    avg = global_pool(fmap, "AVG")
    np.testing.assert_allclose(global_pool(alpha * fmap, "AVG"), alpha * avg, rtol=1e-12, atol=1e-12)
    assert np.array_equal(global_pool(fmap, "AVG_STD")[:avg.size], avg)


def test_toy_spatial_dimensions():
    frame = np.zeros((8, 8, 3), np.uint8)
    assert spatial_features(frame, ToySpatialBackend()).shape == (7,)
    assert spatial_features(frame, ToySpatialBackend(), "AVG_STD").shape == (14,)


def test_blur_lowers_sharpness_coordinates():
    clean = render(SyntheticSpec(seed=3, kind="blur", level=0.0))[0]
    blurred = render(SyntheticSpec(seed=3, kind="blur", level=0.6))[0]
    backend = ToySpatialBackend()
    a, b = spatial_features(clean, backend), spatial_features(blurred, backend)
    for name in ("std_luma", "mean_abs_sobel", "hf_energy_ratio"):
        j = SPATIAL_TOY_CHANNELS.index(name)
        assert b[j] < a[j], name


def test_static_chunk_has_no_flicker():
    chunk = np.repeat(np.random.default_rng(0).integers(0, 256, (1, 8, 8, 3), dtype=np.uint8), 6, axis=0)
    assert temporal_features(chunk, ToyTemporalBackend()).tolist() == [0.0, 0.0, 0.0]


def test_flicker_proportional_to_offset():
    base = np.full((8, 8, 8, 3), 128, np.int16)
    sign = np.array([1, -1] * 4)[:, None, None, None]
    values = []
    for delta in (3, 6, 12, 24):
        chunk = (base + delta * sign).astype(np.uint8)
        values.append(temporal_features(chunk, ToyTemporalBackend())[1])
    ratios = np.array(values) / np.array([3, 6, 12, 24])
    np.testing.assert_allclose(ratios, ratios[0], rtol=1e-12)
    assert ratios[0] == pytest.approx(1 / 255)


def _asset(frames, fps=10):
    return VideoAsset.from_array(np.asarray(frames, np.uint8), fps=fps, video_id="v")


def test_broadcast_chunks_share_features():
    frames = np.random.default_rng(1).integers(0, 256, (40, 20, 20, 3), dtype=np.uint8)
    video = preprocess_video(_asset(frames), PreprocessConfig(r_a=1, r_b=0.5, l_s=16, l_t=8, t=5))
    rec = extract_record(video, ToySpatialBackend(), ToyTemporalBackend())
    assert rec.temporal.shape == (4, 3)
    assert rec.temporal[1].tobytes() == rec.temporal[0].tobytes()
    assert rec.temporal[3].tobytes() == rec.temporal[2].tobytes()
    assert rec.temporal[2].tobytes() != rec.temporal[0].tobytes()


def test_record_rejects_nonfinite():
    with pytest.raises(ValueError):
        FeatureRecord("x", np.array([[np.nan]]))


def _checkerboard(n=8, size=24, cell=4):
    yy, xx = np.mgrid[:size, :size]
    frames = []
    for f in range(n):
        board = (((xx + f) // cell + yy // cell) % 2).astype(float)
        rgb = np.stack([200 * board + 20, 150 * board + 40, 90 * board + 10 + 3 * f], axis=-1)
        frames.append(rgb.astype(np.uint8))
    return np.stack(frames)


def test_siti_matches_pixel_oracle():
    frames = _checkerboard()
    got = compute_siti(_asset(frames))
    si, ti = oracles.siti(frames)
    assert got.si == pytest.approx(si, rel=1e-6)
    assert got.ti == pytest.approx(ti, rel=1e-6)
    assert got.si_series.shape == (8,) and got.ti_series.shape == (7,)


def test_siti_random_video_matches_oracle():
    frames = np.random.default_rng(9).integers(0, 256, (3, 11, 13, 3), dtype=np.uint8)
    got = compute_siti(_asset(frames))
    si, ti = oracles.siti(frames)
    assert got.si == pytest.approx(si, rel=1e-6) and got.ti == pytest.approx(ti, rel=1e-6)


def test_siti_degenerate_cases():
    const = np.full((4, 10, 10, 3), 77, np.uint8)
    d = compute_siti(_asset(const))
    assert (d.si, d.ti) == (0.0, 0.0)
    first = const[0].copy()
    first[:5] = 30
    shifted = np.stack([first, first + 10])
    assert compute_siti(_asset(shifted)).ti == pytest.approx(0.0, abs=1e-9)
    single = compute_siti(_asset(const[:1]))
    assert single.ti == 0.0


# ---------------------------------------------------------------------------
# exported-graph backend


def _save_model(path, nodes, inputs, outputs, initializers=()):
    graph = helper.make_graph(nodes, "g", inputs, outputs, initializer=list(initializers))
    model = helper.make_model(graph, opset_imports=[helper.make_opsetid("", 13)])
    model.ir_version = 8
    onnx.save(model, str(path))
    return path


def _spatial_model(path):
    x = helper.make_tensor_value_info("image", TensorProto.FLOAT, [1, 3, None, None])
    y = helper.make_tensor_value_info("features", TensorProto.FLOAT, [1, 4, None, None])
    w = helper.make_tensor("w", TensorProto.FLOAT, [4, 3, 3, 3],
                           np.random.default_rng(0).normal(size=108).astype(np.float32).tolist())
    conv = helper.make_node("Conv", ["image", "w"], ["c"], pads=[1, 1, 1, 1])
    relu = helper.make_node("Relu", ["c"], ["features"])
    return _save_model(path, [conv, relu], [x], [y], [w])


def _temporal_model(path):
    x = helper.make_tensor_value_info("clip", TensorProto.FLOAT, [1, 3, None, None, None])
    y = helper.make_tensor_value_info("features", TensorProto.FLOAT, [1, 3, None, None, None])
    node = helper.make_node("Identity", ["clip"], ["features"])
    return _save_model(path, [node], [x], [y])


def test_onnx_spatial_backend_deterministic(tmp_path):
    path = _spatial_model(tmp_path / "s.onnx")
    spec = BackendSpec("onnx", "spatial", str(path), input_size=12, mean=(0.45, 0.45, 0.45), std=(0.22, 0.22, 0.22))
    backend = make_backend(spec)
    frame = np.random.default_rng(2).integers(0, 256, (16, 20, 3), dtype=np.uint8)
    a = spatial_features(frame, backend, "AVG_STD")
    b = spatial_features(frame, make_backend(spec), "AVG_STD")
    assert a.shape == (8,) and a.tobytes() == b.tobytes()
    assert backend.backend_id.startswith("onnx-spatial-")


def test_onnx_temporal_identity_matches_normalized_mean(tmp_path):
    path = _temporal_model(tmp_path / "t.onnx")
    backend = make_backend(BackendSpec("onnx", "temporal", str(path)))
    chunk = np.random.default_rng(4).integers(0, 256, (4, 8, 8, 3), dtype=np.uint8)
    out = temporal_features(chunk, backend)
    expected = (chunk.astype(np.float32) / 255).mean(axis=(0, 1, 2))
    np.testing.assert_allclose(out, expected, rtol=1e-5)


def test_onnx_weights_frozen(tmp_path):
    path = _spatial_model(tmp_path / "s.onnx")
    backend = make_backend(BackendSpec("onnx", "spatial", str(path)))
    before = backend.weights_digest()
    for seed in range(3):
        spatial_features(np.random.default_rng(seed).integers(0, 256, (8, 8, 3), dtype=np.uint8), backend)
    assert backend.weights_digest() == before


def test_onnx_errors(tmp_path):
    with pytest.raises(BackendError):
        make_backend(BackendSpec("onnx", "spatial", str(tmp_path / "missing.onnx")))
    path = _spatial_model(tmp_path / "s.onnx")
    backend = make_backend(BackendSpec("onnx", "spatial", str(path), input_size=64))
    with pytest.raises(BackendError, match="smaller than crop"):
        backend.feature_map(np.zeros((8, 8, 3), np.uint8))
    bad = tmp_path / "bad.onnx"
    bad.write_bytes(b"not a model")
    with pytest.raises(BackendError):
        make_backend(BackendSpec("onnx", "spatial", str(bad))).feature_map(np.zeros((8, 8, 3), np.uint8))
