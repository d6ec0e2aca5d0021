import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from minbvqa.ingest import VideoAsset
from minbvqa.preprocess import (
    PreprocessConfig,
    downsampled_size,
    extract_chunk_indices,
    key_frame_count,
    plan_chunks,
    preprocess_video,
    resize_bilinear,
    resize_chunk,
    select_key_frame_indices,
    spatial_downsample,
)

FPS = [10, 24, 25, 29.97, 30, 60]
RATES = [0.5, 1, 2]


def test_forty_frames_at_ten_fps():
    assert key_frame_count(40, 10, 1) == 4
    assert select_key_frame_indices(40, 10, 1) == [5, 15, 25, 35]


def test_single_frame():
    assert select_key_frame_indices(1, 30, 1) == [0]


def test_ntsc_rate_against_oracle():
    got = select_key_frame_indices(299, 29.97, 2)
    assert got == oracles.key_frame_indices(299, 29.97, 2)
    assert len(got) == 19


def test_short_clip_is_clamped():
    # 5 frames at 60 fps, 1 key frame per second -> formula gives 30, clamp to 4
    assert select_key_frame_indices(5, 60, 1) == [4]


def test_random_grid_against_oracle():
    rng = random.Random(11)
    for _ in range(300):
        n, fps, r_a = rng.randint(1, 3600), rng.choice(FPS), rng.choice(RATES)
        assert select_key_frame_indices(n, fps, r_a) == oracles.key_frame_indices(n, fps, r_a)


@given(st.integers(1, 5000), st.sampled_from(FPS), st.sampled_from(RATES))
def test_indices_sorted_and_in_range(n, fps, r_a):
    idx = select_key_frame_indices(n, fps, r_a)
    assert len(idx) == key_frame_count(n, fps, r_a) >= 1
    assert all(0 <= i < n for i in idx)
    assert idx == sorted(idx)


@given(st.integers(1, 12), st.integers(1, 300), st.sampled_from([0.5, 1, 2]))
def test_integer_ratio_is_arithmetic(k, kk, r_a):
    fps = k * r_a
    n = k * kk
    idx = select_key_frame_indices(n, fps, r_a)
    assert idx == [k // 2 + k * i for i in range(kk)]


def test_downsampled_size_hd():
    assert downsampled_size(1080, 1920, 448) == (448, 796)
    assert downsampled_size(1920, 1080, 448) == (796, 448)


def test_no_upsampling_and_identity():
    img = np.random.default_rng(0).integers(0, 256, (448, 448, 3), dtype=np.uint8)
    out = spatial_downsample(img, 448)
    assert np.array_equal(out, img)
    small = img[:100, :200]
    assert spatial_downsample(small, 448).shape == small.shape


def test_constant_frame_stays_constant():
    img = np.full((1080, 1920, 3), (12, 200, 77), np.uint8)
    out = spatial_downsample(img, 448)
    assert out.shape == (448, 796, 3)
    assert np.all(out == np.array([12, 200, 77], np.uint8))


@given(st.integers(20, 400), st.integers(20, 400), st.integers(4, 60))
def test_aspect_ratio_preserved(h, w, l_s):
    oh, ow = downsampled_size(h, w, l_s)
    if min(h, w) <= l_s:
        assert (oh, ow) == (h, w)
    else:
        assert min(oh, ow) == l_s
        assert abs(max(oh, ow) - max(h, w) * l_s / min(h, w)) <= 0.5


@given(st.integers(100, 600), st.integers(100, 600), st.integers(5, 40))
def test_doubling_short_side(h, w, l_s):
    a, b = downsampled_size(h, w, l_s), downsampled_size(h, w, 2 * l_s)
    assert min(b) == 2 * min(a)
    assert abs(max(b) - 2 * max(a)) <= 1


def test_bilinear_half_pixel_downscale_by_two():
    # exact 2x reduction averages 2x2 blocks
    img = np.arange(16, dtype=np.uint8).reshape(4, 4, 1).repeat(3, axis=2) * 10
    out = resize_bilinear(img, 2, 2)
    expected = img.reshape(2, 2, 2, 2, 3).astype(float).mean(axis=(1, 3))
    assert np.array_equal(out, np.floor(expected + 0.5).astype(np.uint8))


def test_rounding_half_away_from_zero():
    img = np.array([[[0] * 3, [1] * 3]], np.uint8)
    assert resize_bilinear(img, 1, 1)[0, 0, 0] == 1


def test_chunk_indices():
    assert extract_chunk_indices(5, 40, 5, 1) == [3, 4, 5, 6, 7]
    assert extract_chunk_indices(0, 40, 5, 1) == [0, 0, 0, 1, 2]
    assert extract_chunk_indices(39, 40, 4, 2) == [35, 37, 39, 39]
    assert extract_chunk_indices(7, 40, 1, 1) == [7]


@given(st.integers(1, 500), st.data(), st.integers(1, 40), st.integers(1, 4))
def test_chunk_contains_key_frame(n, data, t, tau):
    c = data.draw(st.integers(0, n - 1))
    idx = extract_chunk_indices(c, n, t, tau)
    assert len(idx) == t and idx[t // 2] == c
    assert all(0 <= i < n for i in idx)


def test_plan_equal_rates():
    assert plan_chunks(4, 1, 1) == {0: None, 1: None, 2: None, 3: None}


def test_plan_half_rate():
    plan = plan_chunks(4, 1, 0.5)
    assert [i for i, v in plan.items() if v is None] == [0, 2]
    assert {i: v for i, v in plan.items() if v is not None} == {1: 0, 3: 2}


@given(st.integers(1, 60), st.sampled_from([(1, 1), (1, 0.5), (2, 0.5), (1, 0.25), (2, 1.5)]))
def test_plan_covers_every_key_frame(k, rates):
    plan = plan_chunks(k, *rates)
    assert sorted(plan) == list(range(k))
    computed = {i for i, v in plan.items() if v is None}
    assert 0 in computed
    for i, src in plan.items():
        if src is not None:
            assert src in computed
            assert abs(src - i) == min(abs(c - i) for c in computed)


def _clip(n=40, fps=10, seed=0):
    frames = np.random.default_rng(seed).integers(0, 256, (n, 24, 32, 3), dtype=np.uint8)
    return VideoAsset.from_array(frames, fps=fps, video_id="clip")


def test_video_layout_ten_fps():
    cfg = PreprocessConfig(r_a=1, r_b=0.5, l_s=16, l_t=8, t=5, tau=1)
    video = preprocess_video(_clip(), cfg)
    assert [kf.source_index for kf in video.key_frames] == [5, 15, 25, 35]
    assert video.key_frames[0].image.shape == (16, 21, 3)
    assert len(video.chunks) == 4
    assert video.chunks[1].broadcast_from == 0 and video.chunks[3].broadcast_from == 2
    assert video.chunks[1].tensor is video.chunks[0].tensor
    assert video.chunks[2].frame_indices == [23, 24, 25, 26, 27]
    assert video.chunks[0].tensor.shape == (5, 8, 8, 3)


def test_whole_pipeline_deterministic():
    cfg = PreprocessConfig(r_a=2, r_b=1, l_s=16, l_t=8, t=4, tau=2)
    a, b = preprocess_video(_clip(), cfg), preprocess_video(_clip(), cfg)
    for x, y in zip(a.key_frames, b.key_frames):
        assert x.image.tobytes() == y.image.tobytes()
    for x, y in zip(a.chunks, b.chunks):
        assert x.tensor.tobytes() == y.tensor.tobytes()


def test_resize_chunk_square():
    frames = np.zeros((3, 30, 50, 3), np.uint8)
    assert resize_chunk(frames, 10).shape == (3, 10, 10, 3)


@pytest.mark.parametrize("kwargs", [dict(r_b=2.0), dict(l_t=500), dict(t=0), dict(tau=1.5)])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        PreprocessConfig(**kwargs)
