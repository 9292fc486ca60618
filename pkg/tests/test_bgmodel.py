import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from skytraffic.bgmodel import (CLASSIFY_THRESHOLD_SQ_BY_BAND, MixtureModel,
                                MixtureParams, init_model, luminance)
from reference_model import ref_stream

P = MixtureParams()


def run_pixel(values, params=P):
    """Drive a 1x1 model through a stream, mirroring ref_stream's shape:
    init from the first value, then update on every value."""
    model = init_model(params, np.array([[values[0]]], dtype=np.float64))
    labels = [int(model.apply(np.array([[x]], dtype=np.float64))[0, 0])
              for x in values]
    return model, labels


def test_init_uniform_frame():
    frame = np.full((4, 6), 100.0)
    m = init_model(P, frame)
    assert m.ncomp.tolist() == [1] * 24
    assert np.all(m.means[:, 0] == 100.0)
    assert np.all(m.weights[:, 0] == 1.0)
    assert np.all(m.variances[:, 0] == P.initial_variance)


def test_init_per_pixel_means():
    frame = np.array([[0.0, 50.0], [100.0, 255.0]])
    m = init_model(P, frame)
    assert m.means[:, 0].tolist() == [0.0, 50.0, 100.0, 255.0]


def test_classify_right_after_init_is_background():
    frame = np.array([[0.0, 50.0], [100.0, 255.0]])
    m = init_model(P, frame)
    assert not m.classify(frame).any()


def test_constant_stream_stays_background():
    frame = np.full((8, 8), 137.0)
    m = init_model(P, frame)
    for _ in range(50):
        assert not m.apply(frame).any()


def test_step_change_flags_foreground_with_frozen_state():
    model, labels = run_pixel([50.0] * 300 + [200.0])
    assert labels[:300] == [0] * 300
    assert labels[300] == 1
    assert model.ncomp[0] == 2
    w = model.weights[0]
    assert w[0] == pytest.approx(0.998003992015968, abs=1e-15)
    assert w[1] == pytest.approx(0.001996007984031936, abs=1e-15)
    assert model.means[0, :2].tolist() == [50.0, 200.0]
    # main variance decays from 225 by (1 - a) per matched frame: 225 * 0.998**300
    assert model.variances[0, 0] == pytest.approx(123.40845189758123, abs=1e-9)
    assert model.variances[0, 1] == 225.0


def test_new_mode_absorbed_after_weight_crosses_ratio():
    # learning_rate 0.01, ratio 0.9: dominant weight after the swap frame is
    # 1/1.01 and decays by 0.99 each matched frame, so the 11th consecutive
    # frame of the new value is the first labelled background.
    params = MixtureParams(learning_rate=0.01)
    need = math.ceil(math.log(params.background_ratio)
                     / math.log(1.0 - params.learning_rate))
    assert need == 11  # ordinal of the first background-labelled frame
    model, _ = run_pixel([100.0] * 30, params)
    labels = [int(model.apply(np.array([[200.0]]))[0, 0]) for _ in range(15)]
    assert labels[:need - 1] == [1] * (need - 1)
    assert labels[need - 1:] == [0] * (15 - need + 1)


streams = st.lists(
    st.floats(0.0, 255.0, allow_nan=False, width=32), min_size=1, max_size=60)


@given(streams, st.integers(1, 5))
def test_matches_scalar_reference(values, kmax):
    params = MixtureParams(max_components=kmax)
    model, labels = run_pixel(values, params)
    ref_labels, ref_w, ref_mu, ref_var = ref_stream(values, max_components=kmax)
    assert labels == ref_labels
    n = int(model.ncomp[0])
    assert n == len(ref_w)
    np.testing.assert_allclose(model.weights[0, :n], ref_w, atol=1e-12)
    np.testing.assert_allclose(model.means[0, :n], ref_mu, atol=1e-12)
    np.testing.assert_allclose(model.variances[0, :n], ref_var, atol=1e-12)


def test_reference_agreement_across_many_streams():
    rng = np.random.default_rng(2024)
    for _ in range(300):
        n = int(rng.integers(5, 200))
        # bimodal with jumps so replacement and re-sorting both trigger
        values = np.where(rng.random(n) < 0.7,
                          rng.normal(90, 6, n), rng.normal(190, 9, n))
        values = np.clip(values, 0, 255)
        model, labels = run_pixel(values.tolist())
        ref_labels, ref_w, ref_mu, ref_var = ref_stream(values.tolist())
        assert labels == ref_labels
        k = int(model.ncomp[0])
        np.testing.assert_allclose(model.weights[0, :k], ref_w, atol=1e-12)
        np.testing.assert_allclose(model.means[0, :k], ref_mu, atol=1e-12)
        np.testing.assert_allclose(model.variances[0, :k], ref_var, atol=1e-12)


@given(streams)
def test_state_invariants(values):
    model, _ = run_pixel(values)
    k = int(model.ncomp[0])
    w = model.weights[0, :k]
    assert abs(w.sum() - 1.0) < 1e-9
    assert np.all(np.diff(w) <= 1e-15)  # descending
    assert np.all(model.variances[0, :k] >= P.min_variance)
    assert np.all(model.weights[0, k:] == 0.0)


def test_classify_threshold_nesting():
    rng = np.random.default_rng(7)
    model = init_model(P, rng.uniform(0, 255, (16, 16)))
    for _ in range(40):
        model.apply(rng.normal(120, 5, (16, 16)).clip(0, 255))
    probe = rng.uniform(0, 255, (16, 16))
    prev = None
    for t in (4.0, 9.0, 16.0, 36.0):
        fg = model.classify(probe, t).astype(bool)
        if prev is not None:
            assert np.all(fg <= prev)  # looser threshold flags no new pixels
        prev = fg


def test_classify_does_not_mutate_state():
    model = init_model(P, np.full((4, 4), 90.0))
    model.apply(np.full((4, 4), 90.0))
    before = (model.weights.copy(), model.means.copy(), model.variances.copy())
    model.classify(np.full((4, 4), 250.0))
    assert np.array_equal(model.weights, before[0])
    assert np.array_equal(model.means, before[1])
    assert np.array_equal(model.variances, before[2])


def test_apply_is_deterministic():
    rng = np.random.default_rng(99)
    frames = rng.uniform(0, 255, (30, 6, 6))
    runs = []
    for _ in range(2):
        model = init_model(P, frames[0])
        runs.append([model.apply(f).copy() for f in frames])
    for a, b in zip(*runs):
        assert np.array_equal(a, b)


def test_band_thresholds():
    assert CLASSIFY_THRESHOLD_SQ_BY_BAND == {"RGB": 16.0, "IR": 36.0}


def test_params_validation():
    bad = [dict(max_components=0), dict(match_threshold_sq=0.0),
           dict(classify_threshold_sq=-1.0), dict(learning_rate=0.0),
           dict(learning_rate=1.5), dict(background_ratio=1.0),
           dict(min_variance=0.0), dict(initial_variance=1.0),
           dict(warmup_frames=-1)]
    for kw in bad:
        with pytest.raises(ValueError):
            MixtureParams(**kw)


def test_frame_shape_mismatch():
    model = init_model(P, np.zeros((4, 4)))
    with pytest.raises(ValueError, match="does not match"):
        model.apply(np.zeros((4, 5)))
    with pytest.raises(ValueError):
        init_model(P, np.zeros((4, 4, 2)))


def test_background_image_tracks_dominant_mode():
    frame = np.array([[10.0, 200.0]])
    model = init_model(P, frame)
    assert np.array_equal(model.background_image(), frame)
    params = MixtureParams(learning_rate=0.01)
    model, _ = run_pixel([100.0] * 30, params)
    # dominant weight falls below 1/2 only after ~70 frames of the new value
    for _ in range(80):
        model.apply(np.array([[220.0]]))
    assert model.background_image()[0, 0] == 220.0


def test_luminance_weights():
    frame = np.zeros((1, 1, 3))
    frame[0, 0] = (255, 0, 0)
    assert luminance(frame)[0, 0] == pytest.approx(76.245)
    gray = luminance(np.full((2, 3), 40.0))
    assert np.array_equal(gray, np.full((2, 3), 40.0))  # passthrough for 2-D
    with pytest.raises(ValueError):
        luminance(np.zeros((2, 2, 4)))


def test_color_mode_distance_sums_channels():
    base = np.full((1, 1, 3), 100.0)
    model = init_model(P, base)
    probe = base.copy()
    probe[0, 0, 2] = 112.0  # d2 = 144, 144/225 < 16
    assert model.classify(probe)[0, 0] == 0
    far = np.full((1, 1, 3), 150.0)  # d2 = 7500, 7500/225 > 16
    assert model.classify(far)[0, 0] == 1


def test_color_constant_stream_stays_background():
    frame = np.zeros((3, 3, 3))
    frame[..., 0], frame[..., 1], frame[..., 2] = 30.0, 90.0, 160.0
    model = init_model(P, frame)
    for _ in range(30):
        assert not model.apply(frame).any()
    assert np.array_equal(model.background_image(), frame)


def test_color_matches_gray_when_variance_scale_tripled():
    # Replicating a gray frame into three channels triples every summed
    # squared deviation, and the shared-variance recursion is linear in
    # that sum. Tripling initial/min variance therefore reproduces the
    # single-channel run label for label with identical weights.
    rng = np.random.default_rng(17)
    frames = rng.uniform(0, 255, (60, 5, 5))
    gray = init_model(P, frames[0])
    color_params = MixtureParams(initial_variance=3 * P.initial_variance,
                                 min_variance=3 * P.min_variance)
    color = init_model(color_params, np.repeat(frames[0][..., None], 3, axis=2))
    for f in frames:
        mg = gray.apply(f)
        mc = color.apply(np.repeat(f[..., None], 3, axis=2))
        assert np.array_equal(mg, mc)
    assert np.array_equal(gray.ncomp, color.ncomp)
    np.testing.assert_allclose(color.weights, gray.weights, atol=1e-12)
    np.testing.assert_allclose(color.variances, 3 * gray.variances, atol=1e-9)
    np.testing.assert_allclose(color.means[:, :, 0], gray.means, atol=1e-12)
