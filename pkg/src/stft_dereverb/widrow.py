"""Time-domain least-squares inverse filter (single channel)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg, signal as sps
from scipy.linalg import toeplitz
from scipy.sparse.linalg import LinearOperator, lsmr

from .signals import ImpulseResponse
from .stft import Signal

DENSE_LIMIT = 64 * 1024 * 1024


@dataclass(frozen=True)
class InverseFilterSpec:
    """``filter_len`` taps of ``g``; ``target_delay`` None means ``n_d + filter_len // 2``."""

    filter_len: int = 1024
    target_delay: int | None = None
    channel_len: int = 1024

    def __post_init__(self):
        if self.filter_len < 1 or self.channel_len < 1:
            raise ValueError("filter_len and channel_len must be >= 1")
        if self.target_delay is not None and not 0 <= self.target_delay < self.channel_len + self.filter_len - 1:
            raise ValueError(
                f"target_delay {self.target_delay} outside [0, {self.channel_len + self.filter_len - 2}]")

    def delay_for(self, h: ImpulseResponse) -> int:
        if self.target_delay is not None:
            return self.target_delay
        return min(h.direct_index + self.filter_len // 2, self.channel_len + self.filter_len - 2)


def convolution_matrix(h: np.ndarray, n_cols: int) -> np.ndarray:
    """``(len(h) + n_cols - 1, n_cols)`` matrix with ``T @ g == np.convolve(h, g)``."""
    col = np.concatenate([h, np.zeros(n_cols - 1)])
    row = np.zeros(n_cols)
    row[0] = h[0]
    return toeplitz(col, row)


def widrow_inverse(h: ImpulseResponse, spec: InverseFilterSpec = InverseFilterSpec()) -> ImpulseResponse:
    """Least-squares ``g`` minimising ``||h * g - e_delay||^2``.

    ``h`` is truncated or zero-padded to ``spec.channel_len`` first. Large
    systems are solved matrix-free with FFT convolutions.
    """
    hh = h.truncated(spec.channel_len)
    if not np.any(hh.taps):
        raise ValueError("cannot invert an all-zero channel")
    L = spec.filter_len
    delay = spec.delay_for(hh)
    n_rows = spec.channel_len + L - 1
    rhs = np.zeros(n_rows)
    rhs[delay] = 1.0
    if n_rows * L <= DENSE_LIMIT:
        T = convolution_matrix(hh.taps, L)
        g, *_ = linalg.lstsq(T, rhs, lapack_driver="gelsy", check_finite=False)
    else:
        taps = hh.taps
        flipped = taps[::-1]
        op = LinearOperator(
            (n_rows, L), dtype=np.float64,
            matvec=lambda v: sps.fftconvolve(taps, np.ravel(v)),
            rmatvec=lambda u: sps.fftconvolve(np.ravel(u), flipped, mode="valid"),
        )
        g = lsmr(op, rhs, atol=1e-12, btol=1e-12, maxiter=20 * L)[0]
    return ImpulseResponse(g, h.sample_rate)


def ls_residual(h: ImpulseResponse, g: ImpulseResponse, spec: InverseFilterSpec = InverseFilterSpec()) -> float:
    """``||h * g - e_delay||^2`` with ``h`` cut to ``spec.channel_len``."""
    hh = h.truncated(spec.channel_len)
    comp = np.convolve(hh.taps, g.taps)
    comp[spec.delay_for(hh)] -= 1.0
    return float(np.dot(comp, comp))


def equalize(y: Signal, g: ImpulseResponse) -> Signal:
    """Full convolution of ``y`` with ``g``."""
    if len(y) == 0 or len(g) == 0:
        raise ValueError("equalize needs non-empty inputs")
    out = sps.fftconvolve(y.samples, g.taps) if min(len(y), len(g)) > 64 else np.convolve(y.samples, g.taps)
    return Signal(out, y.sample_rate, start=y.start + g.start)
