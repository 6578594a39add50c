import numpy as np
import pytest

from stft_dereverb import make_window


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def cfg():
    return make_window("sqrt-hann", 4, 64)


@pytest.fixture
def tiny_cfg():
    return make_window("sqrt-hann", 2, 4)


def direct_stft(x, start, config, first, last):
    """Frame-by-frame evaluation of the windowed DFT sum, no FFT."""
    Q, R, w = config.Q, config.R, config.window
    N = Q * R
    n = np.arange(N)
    k = np.arange(N)
    basis = np.exp(-2j * np.pi * np.outer(k, n) / N)
    out = np.zeros((last - first + 1, N), dtype=complex)
    for i, l in enumerate(range(first, last + 1)):
        seg = np.zeros(N)
        for m in range(N):
            t = l * R + m - start
            if 0 <= t < len(x):
                seg[m] = x[t]
        out[i] = basis @ (seg * w)
    return out
