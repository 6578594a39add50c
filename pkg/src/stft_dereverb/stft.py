"""Windowed STFT analysis, inverse-DFT synthesis and overlap-add.

Frames are indexed by an integer ``l`` that may be negative: frame ``l``
covers samples ``lR .. lR + QR - 1``. A :class:`Spectrogram` stores its rows
in increasing ``l`` and remembers which row is ``l = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _backend

WINDOW_KINDS = ("sqrt-hann", "rectangular-scaled")

CONDITION_TOL = 1e-12
SYMMETRY_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class StftConfig:
    """Time-frequency grid: overlap factor ``Q``, hop ``R`` and window of length ``QR``."""

    Q: int
    R: int
    window: np.ndarray
    kind: str = "custom"

    def __post_init__(self):
        if self.Q < 1 or self.R < 1:
            raise ValueError(f"Q and R must be >= 1, got Q={self.Q}, R={self.R}")
        w = np.asarray(self.window, dtype=np.float64)
        if w.shape != (self.Q * self.R,):
            raise ValueError(
                f"window length {w.size} does not equal Q*R = {self.Q * self.R}")
        dev = condition_deviation(w, self.Q, self.R)
        if dev > CONDITION_TOL:
            raise ValueError(
                f"window violates sum_q w^2[qR+n] = 1 (max deviation {dev:.3g})")
        w.setflags(write=False)
        object.__setattr__(self, "window", w)

    @property
    def frame_len(self) -> int:
        return self.Q * self.R

    @property
    def n_bins(self) -> int:
        return self.Q * self.R

    def same_grid(self, other: "StftConfig") -> bool:
        return (self.Q == other.Q and self.R == other.R
                and np.array_equal(self.window, other.window))


@dataclass(eq=False)
class Signal:
    """Real samples; ``start`` is the time index of ``samples[0]``."""

    samples: np.ndarray
    sample_rate: float = 16000.0
    start: int = 0

    def __post_init__(self):
        x = np.asarray(self.samples, dtype=np.float64)
        if x.ndim != 1:
            raise ValueError("signal must be one-dimensional")
        if not np.all(np.isfinite(x)):
            raise ValueError("signal contains NaN or Inf")
        self.samples = x

    def __len__(self):
        return self.samples.size

    def window_at(self, start: int, length: int) -> np.ndarray:
        """Samples for time indices ``start .. start+length-1``, zero outside support."""
        out = np.zeros(length)
        lo = max(start, self.start)
        hi = min(start + length, self.start + self.samples.size)
        if hi > lo:
            out[lo - start:hi - start] = self.samples[lo - self.start:hi - self.start]
        return out


@dataclass(eq=False)
class Spectrogram:
    """Complex STFT frames, shape ``(n_frames, n_bins)``.

    Row ``i`` holds frame ``l = i - frame_offset``.
    """

    data: np.ndarray
    frame_offset: int
    config: StftConfig
    sample_rate: float = 16000.0

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.complex128)
        if self.data.ndim != 2 or self.data.shape[1] != self.config.n_bins:
            raise ValueError(
                f"spectrogram must have {self.config.n_bins} bins, got shape {self.data.shape}")

    @property
    def n_frames(self) -> int:
        return self.data.shape[0]

    @property
    def n_bins(self) -> int:
        return self.data.shape[1]

    @property
    def first_frame(self) -> int:
        return -self.frame_offset

    @property
    def last_frame(self) -> int:
        return self.n_frames - 1 - self.frame_offset

    def frame(self, l: int) -> np.ndarray:
        i = l + self.frame_offset
        if 0 <= i < self.n_frames:
            return self.data[i]
        return np.zeros(self.n_bins, dtype=np.complex128)

    def frames(self, first: int, last: int) -> np.ndarray:
        """Frames ``first..last`` inclusive, zero-filled outside the stored range."""
        out = np.zeros((last - first + 1, self.n_bins), dtype=np.complex128)
        lo = max(first, self.first_frame)
        hi = min(last, self.last_frame)
        if hi >= lo:
            out[lo - first:hi - first + 1] = self.data[lo + self.frame_offset:hi + self.frame_offset + 1]
        return out

    def symmetry_error(self) -> float:
        """Max |X[l,k] - conj(X[l,-k])| relative to max |X|."""
        if self.data.size == 0:
            return 0.0
        scale = np.max(np.abs(self.data))
        if scale == 0.0:
            return 0.0
        mirrored = np.conj(np.roll(self.data[:, ::-1], 1, axis=1))
        return float(np.max(np.abs(self.data - mirrored)) / scale)


def condition_deviation(window, Q: int, R: int) -> float:
    """Largest deviation of ``sum_q w^2[qR+n]`` from 1 over ``n in [0, R)``."""
    w = np.asarray(window, dtype=np.float64)
    sums = np.sum(w.reshape(Q, R) ** 2, axis=0)
    return float(np.max(np.abs(sums - 1.0)))


def make_window(kind: str = "sqrt-hann", Q: int = 4, R: int = 64) -> StftConfig:
    """Build an :class:`StftConfig` whose window satisfies the reconstruction condition.

    ``sqrt-hann`` is the square root of a periodic Hann of length ``QR`` scaled
    by its overlap sum (``2/Q`` for ``Q >= 2``). With ``Q = 1`` no tapered window
    can satisfy the condition, so it degenerates to all ones.
    ``rectangular-scaled`` is the constant ``1/sqrt(Q)``.
    """
    if Q < 1 or R < 1:
        raise ValueError(f"Q and R must be >= 1, got Q={Q}, R={R}")
    n = Q * R
    if kind == "sqrt-hann":
        if Q == 1:
            w = np.ones(n)
        else:
            hann = 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)
            overlap = np.tile(hann.reshape(Q, R).sum(axis=0), Q)
            w = np.sqrt(hann / overlap)
    elif kind == "rectangular-scaled":
        w = np.full(n, 1.0 / np.sqrt(Q))
    else:
        raise ValueError(f"unsupported window kind {kind!r}; expected one of {WINDOW_KINDS}")
    return StftConfig(Q=Q, R=R, window=w, kind=kind)


def frame_range(start: int, length: int, config: StftConfig) -> tuple[int, int]:
    """First and last frame touching samples ``start .. start+length-1``."""
    first = start // config.R - (config.Q - 1)
    last = (start + length - 1) // config.R
    return first, last


def analyze(signal: Signal, config: StftConfig, first: int | None = None,
            last: int | None = None) -> Spectrogram:
    """STFT of ``signal`` with every sample covered by exactly ``Q`` frames.

    ``first``/``last`` override the frame span; samples outside the signal
    read as zero.
    """
    if len(signal) == 0:
        raise ValueError("cannot analyse an empty signal")
    f0, f1 = frame_range(signal.start, len(signal), config)
    first = f0 if first is None else first
    last = f1 if last is None else last
    if last < first:
        raise ValueError(f"empty frame span [{first}, {last}]")
    R, n = config.R, config.frame_len
    n_frames = last - first + 1
    padded = signal.window_at(first * R, (n_frames - 1) * R + n)
    frames = np.lib.stride_tricks.sliding_window_view(padded, n)[::R]
    data = np.fft.fft(frames * config.window, axis=1)
    return Spectrogram(data, frame_offset=-first, config=config,
                       sample_rate=signal.sample_rate)


def time_frames(spec: Spectrogram) -> np.ndarray:
    """Inverse DFT of every frame, still complex."""
    return np.fft.ifft(spec.data, axis=1)


def synthesize(spec: Spectrogram, length: int | None = None) -> Signal:
    """Inverse DFT per frame, synthesis window, overlap-add.

    With ``length`` the result is trimmed/zero-padded to samples ``0..length-1``;
    otherwise the full support is returned with ``start`` set to the first
    frame's first sample.
    """
    err = spec.symmetry_error()
    if err > SYMMETRY_TOL:
        raise ValueError(
            f"spectrogram is not conjugate-symmetric (relative error {err:.3g}); "
            "output would be complex")
    config = spec.config
    frames = np.ascontiguousarray(time_frames(spec).real)
    samples = _backend.overlap_add(frames, np.ascontiguousarray(config.window), config.R)
    out = Signal(np.asarray(samples), spec.sample_rate, start=spec.first_frame * config.R)
    if length is not None:
        return Signal(out.window_at(0, length), spec.sample_rate)
    return out


@dataclass(eq=False)
class FilterBank:
    """Per-bin frame-combination coefficients.

    ``coeffs[k, j]`` is ``G_k[r]`` with ``r = j - A``; ``r < 0`` reaches into
    future frames, ``r > 0`` into past frames.
    """

    A: int
    B: int
    coeffs: np.ndarray
    config: StftConfig
    diagnostics: list = field(default_factory=list)

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=np.complex128)
        if self.A < 0 or self.B < 0:
            raise ValueError("A and B must be >= 0")
        expected = (self.config.n_bins, self.A + self.B + 1)
        if self.coeffs.shape != expected:
            raise ValueError(f"coeffs shape {self.coeffs.shape} != {expected}")

    @property
    def n_bins(self) -> int:
        return self.coeffs.shape[0]

    def tap(self, r: int) -> np.ndarray:
        """Coefficients ``G_k[r]`` for all bins."""
        return self.coeffs[:, r + self.A]

    @classmethod
    def delta(cls, config: StftConfig, A: int = 0, B: int = 0, shift: int = 0) -> "FilterBank":
        """Bank with ``G_k[r] = delta[r - shift]``: identity when ``shift = 0``."""
        if not -A <= shift <= B:
            raise ValueError(f"shift {shift} outside [-{A}, {B}]")
        coeffs = np.zeros((config.n_bins, A + B + 1), dtype=np.complex128)
        coeffs[:, shift + A] = 1.0
        return cls(A, B, coeffs, config)

    @classmethod
    def zeros(cls, config: StftConfig, A: int = 0, B: int = 0) -> "FilterBank":
        return cls(A, B, np.zeros((config.n_bins, A + B + 1), dtype=np.complex128), config)


def apply_filter_bank(spec: Spectrogram, bank: FilterBank) -> Spectrogram:
    """``S[l, k] = sum_r G_k[r] Y[l - r, k]`` with out-of-range frames read as zero.

    The frame span grows by ``A`` frames before and ``B`` after.
    """
    if bank.n_bins != spec.n_bins:
        raise ValueError(f"bank has {bank.n_bins} bins, spectrogram has {spec.n_bins}")
    data = _backend.frame_convolve(np.ascontiguousarray(spec.data),
                                   np.ascontiguousarray(bank.coeffs))
    return Spectrogram(np.asarray(data), frame_offset=spec.frame_offset + bank.A,
                       config=spec.config, sample_rate=spec.sample_rate)
