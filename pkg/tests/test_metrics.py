import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stft_dereverb import DrrParams, ImpulseResponse, Signal, direct_path_energy, drr, make_window, srr_seg
from stft_dereverb.metrics import DB_CAP, cap_db


def echo(gain, lag=64):
    taps = np.zeros(lag + 1)
    taps[0], taps[lag] = 1.0, gain
    return ImpulseResponse(taps)


def test_direct_energy_of_impulse():
    assert direct_path_energy(ImpulseResponse(np.array([1.0]))) == 1.0
    p = DrrParams()
    assert p.sigma_grid.size == 201 and p.sigma_grid[0] == -1 and p.sigma_grid[-1] == 1
    assert p.sigma_grid[100] == 0.0


def test_direct_energy_ignores_far_echo():
    assert direct_path_energy(echo(0.5)) == 1.0


def test_direct_energy_fractional_delay():
    n = np.arange(-40, 41)
    h = ImpulseResponse(np.sinc(n - 0.5))
    assert h.direct_index == 40
    e = direct_path_energy(h)
    # grid optimum at sigma = -0.5 recovers the interpolated peak: 0.95278 of
    # 0.99500 total (17-tap window), frozen from an explicit grid evaluation
    assert e == pytest.approx(0.9527807316424334, rel=1e-12)
    assert e >= 0.95 * h.energy


def test_incoherent_variant_squares_each_tap():
    n = np.arange(-40, 41)
    h = ImpulseResponse(np.sinc(n - 0.5))
    inc = direct_path_energy(h, DrrParams(coherent=False))
    assert inc < direct_path_energy(h)
    assert direct_path_energy(ImpulseResponse(np.array([1.0])), DrrParams(coherent=False)) == 1.0


def test_drr_unit_values():
    assert drr(echo(0.5)) == pytest.approx(10 * math.log10(4), abs=1e-12)
    assert drr(echo(0.5)) == pytest.approx(6.02, abs=0.01)
    assert drr(echo(1.0)) == 0.0
    assert drr([echo(0.5)] * 64) == pytest.approx(drr(echo(0.5)), abs=1e-12)
    assert drr(ImpulseResponse(np.array([1.0]))) == math.inf
    assert cap_db(math.inf) == (DB_CAP, True)
    assert cap_db(3.0) == (3.0, False)


def test_drr_zero_energy():
    with pytest.raises(ValueError):
        drr(ImpulseResponse(np.zeros(4)))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(0.01, 100), st.booleans())
def test_drr_gain_invariant_and_energy_subset(seed, c, negate):
    r = np.random.default_rng(seed)
    taps = np.r_[np.zeros(5), 1.0, 0.3 * r.standard_normal(80)]
    h = ImpulseResponse(taps)
    c = -c if negate else c
    assert drr(h.scaled(c)) == pytest.approx(drr(h), abs=1e-9)
    assert direct_path_energy(h) <= h.energy * (1 + 1e-12)


def test_srr_examples(cfg, rng):
    s = Signal(rng.standard_normal(4000))
    rep = srr_seg(s, s, cfg)
    assert rep.srr_db == DB_CAP and rep.capped and rep.perfect_match
    rep = srr_seg(s, Signal(1.1 * s.samples), cfg)
    assert rep.srr_db == pytest.approx(20.0, abs=1e-9)
    assert np.allclose(rep.per_frame_srr, 20.0)
    assert rep.srr_db == pytest.approx(np.mean(rep.per_frame_srr))


def test_srr_white_noise():
    r = np.random.default_rng(2024)
    s = r.standard_normal(8192)
    noisy = s + 0.5 * r.standard_normal(8192)
    rep = srr_seg(Signal(s), Signal(noisy), make_window())
    assert rep.srr_db == pytest.approx(6.02, abs=0.5)


def test_srr_framing_and_silence(cfg):
    x = np.zeros(1000)
    x[600:700] = 1.0
    rep = srr_seg(Signal(x), Signal(1.1 * x), cfg)
    # frames start every R, length QR; only frames overlapping [600, 700) count
    starts = np.arange(0, 1 + -(-(1000 - 256) // 64)) * 64
    assert rep.frames_counted == int(np.sum((starts < 700) & (starts + 256 > 600)))
    with pytest.raises(ValueError, match="silent"):
        srr_seg(Signal(np.zeros(500)), Signal(np.ones(500)), cfg)
    with pytest.raises(ValueError):
        srr_seg(Signal(np.zeros(0)), Signal(np.zeros(0)), cfg)


def test_srr_monotone_in_noise(cfg):
    r = np.random.default_rng(9)
    s = r.standard_normal(6000)
    n = r.standard_normal(6000)
    values = [srr_seg(Signal(s), Signal(s + a * n), cfg).srr_db for a in (0.1, 0.2, 0.4, 0.8)]
    assert all(a > b for a, b in zip(values, values[1:]))


def test_srr_pads_shorter_signal(cfg, rng):
    s = rng.standard_normal(1000)
    a = srr_seg(Signal(s), Signal(1.1 * s[:900]), cfg)
    assert a.frames_counted == srr_seg(Signal(s), Signal(1.1 * s), cfg).frames_counted


def test_srr_ignores_roundoff_tail(cfg, rng):
    s = rng.standard_normal(2000)
    ref = np.r_[s, 1e-17 * rng.standard_normal(1000)]
    est = np.r_[1.1 * s, 0.3 * rng.standard_normal(1000)]
    r = srr_seg(Signal(ref), Signal(est), cfg)
    whole = srr_seg(Signal(s), Signal(1.1 * s), cfg)
    assert r.frames_counted <= whole.frames_counted + 3
    assert r.srr_db > 10
    assert np.all(np.abs(r.per_frame_srr) <= DB_CAP)
