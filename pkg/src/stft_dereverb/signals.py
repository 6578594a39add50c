"""Impulse responses and a seeded speech-like test signal generator."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal as sps

from .stft import Signal


@dataclass(eq=False)
class ImpulseResponse:
    """Real channel taps. ``start`` is the time index of ``taps[0]``.

    ``direct_index`` defaults to the largest-magnitude tap.
    """

    taps: np.ndarray
    sample_rate: float = 16000.0
    direct_index: int | None = None
    start: int = 0

    def __post_init__(self):
        h = np.asarray(self.taps, dtype=np.float64)
        if h.ndim != 1 or h.size < 1:
            raise ValueError("impulse response needs at least one tap")
        if not np.all(np.isfinite(h)):
            raise ValueError("impulse response contains NaN or Inf")
        self.taps = h
        if self.direct_index is None:
            self.direct_index = int(np.argmax(np.abs(h)))
        elif not 0 <= self.direct_index < h.size:
            raise ValueError(f"direct_index {self.direct_index} outside [0, {h.size - 1}]")

    def __len__(self):
        return self.taps.size

    @property
    def energy(self) -> float:
        return float(np.dot(self.taps, self.taps))

    def as_signal(self) -> Signal:
        return Signal(self.taps, self.sample_rate, start=self.start)

    def direct_path(self) -> "ImpulseResponse":
        """Same length, only the direct tap kept."""
        taps = np.zeros_like(self.taps)
        taps[self.direct_index] = self.taps[self.direct_index]
        return ImpulseResponse(taps, self.sample_rate, self.direct_index, self.start)

    def truncated(self, n: int) -> "ImpulseResponse":
        """First ``n`` taps, zero-padded if shorter."""
        taps = np.zeros(n)
        m = min(n, self.taps.size)
        taps[:m] = self.taps[:m]
        d = self.direct_index if self.direct_index < n else None
        return ImpulseResponse(taps, self.sample_rate, d, self.start)

    def scaled(self, c: float) -> "ImpulseResponse":
        return ImpulseResponse(c * self.taps, self.sample_rate, self.direct_index, self.start)


def convolve(x: Signal, h: ImpulseResponse) -> Signal:
    """Full linear convolution ``y[n] = sum_m h[m] x[n-m]``."""
    y = sps.fftconvolve(x.samples, h.taps) if min(len(x), len(h)) > 64 else np.convolve(x.samples, h.taps)
    return Signal(y, x.sample_rate, start=x.start + h.start)


def speech_like(duration_s: float, sample_rate: float = 16000.0, seed: int = 0) -> Signal:
    """Amplitude-modulated, formant-shaped noise with syllable-rate gaps.

    Stand-in for real utterances: nonstationary at ~4 Hz, spectrally tilted,
    with short silences so segmental metrics see onsets and pauses.
    """
    rng = np.random.default_rng(seed)
    n = int(round(duration_s * sample_rate))
    t = np.arange(n) / sample_rate
    excitation = rng.standard_normal(n)
    out = np.zeros(n)
    for centre in rng.uniform([300, 1000, 2200], [800, 1800, 3200]):
        bw = 0.15 * centre
        lo, hi = max(centre - bw, 50.0), min(centre + bw, 0.45 * sample_rate)
        sos = sps.butter(2, [lo, hi], btype="bandpass", fs=sample_rate, output="sos")
        out += sps.sosfilt(sos, excitation) * (1000.0 / centre)
    rate = rng.uniform(3.0, 5.0)
    phase = rng.uniform(0, 2 * np.pi)
    envelope = np.clip(np.sin(2 * np.pi * rate * t + phase), 0.0, None) ** 1.5
    out *= envelope
    peak = np.max(np.abs(out))
    if peak > 0:
        out *= 0.5 / peak
    return Signal(out, sample_rate)
