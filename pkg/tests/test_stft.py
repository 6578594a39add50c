import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stft_dereverb import FilterBank, Signal, Spectrogram, analyze, apply_filter_bank, make_window, synthesize
from stft_dereverb.stft import StftConfig, condition_deviation, time_frames

from conftest import direct_stft


@pytest.mark.parametrize("kind", ["sqrt-hann", "rectangular-scaled"])
@pytest.mark.parametrize("Q", [1, 2, 3, 4, 8])
def test_window_condition(kind, Q):
    c = make_window(kind, Q, 64)
    assert c.window.size == Q * 64
    assert condition_deviation(c.window, Q, 64) <= 1e-12


def test_window_examples():
    assert np.array_equal(make_window("rectangular-scaled", 1, 64).window, np.ones(64))
    assert np.all(make_window("rectangular-scaled", 4, 64).window == 0.5)
    w = make_window("sqrt-hann", 4, 64).window
    # periodic Hann scaled by 2/Q
    n = np.arange(256)
    np.testing.assert_allclose(w ** 2, 0.5 * (0.5 - 0.5 * np.cos(2 * np.pi * n / 256)), atol=1e-15)


@pytest.mark.parametrize("args", [("triangle", 4, 64), ("sqrt-hann", 0, 64), ("sqrt-hann", 4, 0)])
def test_window_errors(args):
    with pytest.raises(ValueError):
        make_window(*args)


def test_config_rejects_bad_window():
    with pytest.raises(ValueError, match="violates"):
        StftConfig(2, 4, np.ones(8))
    with pytest.raises(ValueError, match="length"):
        StftConfig(2, 4, np.ones(7))


def test_analyze_matches_direct_sum(rng):
    c = make_window("sqrt-hann", 3, 5)
    x = rng.standard_normal(23)
    spec = analyze(Signal(x), c)
    assert spec.first_frame == -2 and spec.last_frame == 22 // 5
    want = direct_stft(x, 0, c, spec.first_frame, spec.last_frame)
    np.testing.assert_allclose(spec.data, want, atol=1e-12)


def test_analyze_examples():
    c = make_window("rectangular-scaled", 1, 4)
    spec = analyze(Signal(np.array([1.0])), c)
    assert spec.n_frames == 1 and spec.frame_offset == 0
    np.testing.assert_allclose(spec.data[0], np.ones(4))

    spec = analyze(Signal(np.ones(4)), c)
    np.testing.assert_allclose(spec.data[0], [4, 0, 0, 0], atol=1e-12)

    spec = analyze(Signal(np.zeros(512)), make_window("sqrt-hann", 4, 64))
    assert not np.any(spec.data)


def test_analyze_empty():
    with pytest.raises(ValueError):
        analyze(Signal(np.zeros(0)), make_window())


def test_frames_cover_every_sample_q_times(cfg):
    spec = analyze(Signal(np.ones(1000)), cfg)
    assert spec.first_frame == -(cfg.Q - 1)
    assert spec.last_frame == 999 // cfg.R


def test_synthesize_examples():
    c = make_window("rectangular-scaled", 1, 4)
    spec = Spectrogram(np.ones((1, 4)), 0, c)
    out = synthesize(spec)
    np.testing.assert_allclose(out.samples, [1, 0, 0, 0], atol=1e-15)
    assert out.start == 0
    zero = synthesize(Spectrogram(np.zeros((5, 256)), 3, make_window()))
    assert not np.any(zero.samples)


def test_synthesize_rejects_asymmetric(cfg):
    data = np.zeros((2, cfg.n_bins), dtype=complex)
    data[0, 3] = 1.0
    with pytest.raises(ValueError, match="conjugate"):
        synthesize(Spectrogram(data, 0, cfg))


def test_synthesize_matches_direct_overlap_add(rng):
    c = make_window("sqrt-hann", 2, 4)
    half = rng.standard_normal((3, 5)) + 1j * rng.standard_normal((3, 5))
    half[:, 0] = half[:, 0].real
    half[:, 4] = half[:, 4].real
    data = np.concatenate([half, np.conj(half[:, 3:0:-1])], axis=1)
    spec = Spectrogram(data, 1, c)
    out = synthesize(spec)
    # direct inverse DFT and overlap-add
    N, R = 8, 4
    want = np.zeros(2 * R + N)
    for i, l in enumerate(range(-1, 2)):
        for m in range(N):
            v = sum(data[i, k] * np.exp(2j * np.pi * k * m / N) for k in range(N)) / N
            want[(l + 1) * R + m] += v.real * c.window[m]
    assert out.start == -4
    np.testing.assert_allclose(out.samples, want, atol=1e-12)


def test_round_trip(cfg, rng):
    x = rng.standard_normal(4096)
    y = synthesize(analyze(Signal(x), cfg), len(x))
    assert np.max(np.abs(y.samples - x)) / np.max(np.abs(x)) <= 1e-10


def test_round_trip_full_support_is_exact_on_signal_span(cfg, rng):
    x = rng.standard_normal(300)
    y = synthesize(analyze(Signal(x, start=17), cfg))
    np.testing.assert_allclose(y.window_at(17, 300), x, atol=1e-12)
    assert np.max(np.abs(y.window_at(y.start, 17 - y.start))) < 1e-12


@settings(max_examples=30, deadline=None)
@given(st.sampled_from([(1, 8), (2, 4), (4, 8), (3, 6)]),
       st.sampled_from(["sqrt-hann", "rectangular-scaled"]),
       st.integers(1, 200), st.integers(0, 2 ** 32 - 1))
def test_round_trip_property(qr, kind, n, seed):
    c = make_window(kind, *qr)
    x = np.random.default_rng(seed).standard_normal(n)
    y = synthesize(analyze(Signal(x), c), n).samples
    assert np.max(np.abs(y - x)) <= 1e-10 * np.max(np.abs(x))


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 300), st.integers(0, 2 ** 32 - 1), st.floats(-3, 3), st.floats(-3, 3))
def test_linearity_and_parseval(n, seed, a, b):
    c = make_window("sqrt-hann", 4, 8)
    r = np.random.default_rng(seed)
    x, y = r.standard_normal(n), r.standard_normal(n)
    X, Y = analyze(Signal(x), c), analyze(Signal(y), c)
    Z = analyze(Signal(a * x + b * y), c)
    np.testing.assert_allclose(Z.data, a * X.data + b * Y.data, atol=1e-10 * (1 + abs(a) + abs(b)) * n)
    # Parseval per frame
    padded = Signal(x).window_at(X.first_frame * c.R, (X.n_frames - 1) * c.R + c.frame_len)
    frames = np.lib.stride_tricks.sliding_window_view(padded, c.frame_len)[::c.R] * c.window
    np.testing.assert_allclose(np.sum(frames ** 2, axis=1),
                               np.sum(np.abs(X.data) ** 2, axis=1) / c.n_bins, rtol=1e-10, atol=1e-300)


def test_conjugate_symmetry_of_real_analysis(cfg, rng):
    spec = analyze(Signal(rng.standard_normal(700)), cfg)
    assert spec.symmetry_error() <= 1e-10
    assert np.max(np.abs(time_frames(spec).imag)) <= 1e-12 * np.max(np.abs(spec.data))


def test_filter_identity(cfg, rng):
    spec = analyze(Signal(rng.standard_normal(500)), cfg)
    out = apply_filter_bank(spec, FilterBank.delta(cfg, 2, 3))
    assert out.first_frame == spec.first_frame - 2
    assert out.last_frame == spec.last_frame + 3
    np.testing.assert_array_equal(out.frames(spec.first_frame, spec.last_frame), spec.data)
    assert not np.any(out.data[:2]) and not np.any(out.data[-3:])


def test_filter_delay_by_one_frame(cfg, rng):
    spec = analyze(Signal(rng.standard_normal(500)), cfg)
    out = apply_filter_bank(spec, FilterBank.delta(cfg, 0, 1, shift=1))
    for l in range(spec.first_frame, spec.last_frame + 1):
        np.testing.assert_array_equal(out.frame(l + 1), spec.frame(l))


def test_filter_single_bin_hand_example():
    c = make_window("rectangular-scaled", 1, 1)
    spec = Spectrogram(np.ones((3, 1)), 0, c)
    bank = FilterBank(0, 1, np.array([[0.5, 0.5]]), c)
    out = apply_filter_bank(spec, bank)
    np.testing.assert_allclose(out.data[:, 0], [0.5, 1, 1, 0.5])
    assert out.first_frame == 0


def test_filter_future_taps_shift_earlier():
    c = make_window("rectangular-scaled", 1, 1)
    spec = Spectrogram(np.array([[1.0], [2.0]]), 0, c)
    out = apply_filter_bank(spec, FilterBank(1, 0, np.array([[1.0, 0.0]]), c))
    # G[-1] = 1: S[l] = Y[l+1]
    assert out.first_frame == -1
    np.testing.assert_allclose(out.frame(-1), [1.0])
    np.testing.assert_allclose(out.frame(0), [2.0])


def test_filter_bin_mismatch(cfg):
    spec = analyze(Signal(np.ones(10)), cfg)
    with pytest.raises(ValueError, match="bins"):
        apply_filter_bank(spec, FilterBank.delta(make_window("sqrt-hann", 2, 64)))


def test_symmetric_bank_preserves_symmetry(cfg, rng):
    spec = analyze(Signal(rng.standard_normal(600)), cfg)
    half = rng.standard_normal((cfg.n_bins // 2 + 1, 4)) + 1j * rng.standard_normal((cfg.n_bins // 2 + 1, 4))
    half[0] = half[0].real
    half[-1] = half[-1].real
    coeffs = np.concatenate([half, np.conj(half[-2:0:-1])])
    out = apply_filter_bank(spec, FilterBank(1, 2, coeffs, cfg))
    assert out.symmetry_error() <= 1e-10
    synthesize(out)
