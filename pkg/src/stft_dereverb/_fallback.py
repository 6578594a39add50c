"""Pure-numpy versions of the compiled kernels in ``_ext.pyx``."""

import numpy as np


def overlap_add(frames, window, hop):
    frames = np.asarray(frames, dtype=np.float64)
    n_frames, frame_len = frames.shape
    if n_frames == 0:
        return np.zeros(0)
    out = np.zeros((n_frames - 1) * hop + frame_len)
    weighted = frames * window
    # One strided add per overlap phase keeps this vectorised over frames.
    q_count = -(-frame_len // hop)
    for q in range(q_count):
        seg = weighted[:, q * hop:(q + 1) * hop]
        width = seg.shape[1]
        starts = np.arange(n_frames) * hop + q * hop
        idx = starts[:, None] + np.arange(width)
        np.add.at(out, idx.ravel(), seg.ravel())
    return out


def frame_convolve(spec, coeffs):
    spec = np.asarray(spec, dtype=np.complex128)
    coeffs = np.asarray(coeffs, dtype=np.complex128)
    n_in, n_bins = spec.shape
    n_taps = coeffs.shape[1]
    out = np.zeros((n_in + n_taps - 1, n_bins), dtype=np.complex128)
    for j in range(n_taps):
        out[j:j + n_in] += coeffs[:, j] * spec
    return out


def deposit_images(delays, amps, n_taps, half_width):
    delays = np.asarray(delays, dtype=np.float64)
    amps = np.asarray(amps, dtype=np.float64)
    out = np.zeros(n_taps)
    if delays.size == 0:
        return out
    offsets = np.arange(-half_width + 1, half_width + 1)
    idx = np.floor(delays)[:, None].astype(np.int64) + offsets
    x = idx - delays[:, None]
    keep = (idx >= 0) & (idx < n_taps) & (np.abs(x) <= half_width)
    kernel = np.sinc(x) * 0.5 * (1.0 + np.cos(np.pi * x / (half_width + 1)))
    np.add.at(out, idx[keep], (amps[:, None] * kernel)[keep])
    return out
