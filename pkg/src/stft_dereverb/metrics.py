"""Direct-to-reverberant ratio and segmental signal-to-reverberation ratio."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .signals import ImpulseResponse
from .stft import Signal, StftConfig

DB_CAP = 100.0


@dataclass(frozen=True)
class DrrParams:
    """Sinc search for the direct-path energy.

    ``coherent=True`` interpolates the direct-path amplitude (sum of
    sinc-weighted taps, then squared). ``coherent=False`` squares each
    sinc-weighted tap before summing.
    """

    eta: int = 8
    sigma_step: float = 0.01
    coherent: bool = True

    def __post_init__(self):
        if self.eta < 1:
            raise ValueError("eta must be >= 1")
        if not 0 < self.sigma_step <= 1:
            raise ValueError("sigma_step must lie in (0, 1]")

    @property
    def sigma_grid(self) -> np.ndarray:
        n = int(round(2.0 / self.sigma_step))
        return np.linspace(-1.0, 1.0, n + 1)


@dataclass
class MetricReport:
    drr_db: float | None = None
    srr_db: float | None = None
    per_frame_srr: np.ndarray = field(default_factory=lambda: np.zeros(0))
    frames_counted: int = 0
    capped: bool = False
    perfect_match: bool = False


def _sinc_weights(eta: int, sigma: np.ndarray) -> np.ndarray:
    n = np.arange(-eta, eta + 1)
    return np.sinc(n[None, :] + sigma[:, None])


def direct_path_energy(h: ImpulseResponse, params: DrrParams = DrrParams()) -> float:
    """Largest sinc-interpolated energy around the direct-path tap."""
    eta = params.eta
    taps = np.zeros(2 * eta + 1)
    d = h.direct_index
    lo, hi = max(d - eta, 0), min(d + eta + 1, len(h))
    taps[lo - (d - eta):hi - (d - eta)] = h.taps[lo:hi]
    weights = _sinc_weights(eta, params.sigma_grid)
    if params.coherent:
        energies = (weights @ taps) ** 2
    else:
        energies = ((weights * taps) ** 2).sum(axis=1)
    return float(np.max(energies))


def drr_terms(per_shift: list[ImpulseResponse], params: DrrParams = DrrParams()) -> np.ndarray:
    """Per-response DRR in dB; ``inf`` where no reverberant energy remains."""
    out = []
    for h in per_shift:
        total = h.energy
        if total <= 0.0:
            raise ValueError("impulse response has zero energy")
        direct = direct_path_energy(h, params)
        rest = total - direct
        if rest <= 1e-12 * total:
            out.append(math.inf)
        else:
            out.append(10.0 * math.log10(direct / rest))
    return np.array(out)


def drr(per_shift: list[ImpulseResponse] | ImpulseResponse, params: DrrParams = DrrParams()) -> float:
    """Mean over shifts of the per-shift DRR in dB.

    A single response is treated as a time-invariant channel. Returns
    ``math.inf`` when any shift has no reverberant energy; use :func:`cap_db`
    before writing to files.
    """
    if isinstance(per_shift, ImpulseResponse):
        per_shift = [per_shift]
    terms = drr_terms(per_shift, params)
    if np.any(np.isinf(terms)):
        return math.inf
    return float(np.mean(terms))


def cap_db(value: float) -> tuple[float, bool]:
    """Clamp to ``+-DB_CAP``; the flag is set when clamping happened."""
    if value > DB_CAP:
        return DB_CAP, True
    if value < -DB_CAP:
        return -DB_CAP, True
    return value, False


def srr_seg(s_d: Signal, s_hat: Signal, config: StftConfig) -> MetricReport:
    """Frame-averaged ratio of direct-path power to error power, in dB.

    Frames start every ``R`` samples and span ``QR``; the shorter signal is
    zero-padded and the last frame may run past the end. Frames where the
    reference is silent, meaning more than ``DB_CAP`` dB below its loudest
    frame, are skipped so round-off tails do not count. Per-frame values
    are clipped to ``[-DB_CAP, DB_CAP]``.
    """
    n = max(len(s_d), len(s_hat))
    if n == 0:
        raise ValueError("srr_seg needs non-empty signals")
    ref = s_d.window_at(0, n)
    est = s_hat.window_at(0, n)
    R, L = config.R, config.frame_len
    n_frames = 1 + max(0, -(-(n - L) // R))
    total = (n_frames - 1) * R + L
    ref = np.pad(ref, (0, total - n))
    err = ref - np.pad(est, (0, total - n))
    ref_frames = np.lib.stride_tricks.sliding_window_view(ref, L)[::R]
    err_frames = np.lib.stride_tricks.sliding_window_view(err, L)[::R]
    sig_pow = np.sum(ref_frames ** 2, axis=1)
    err_pow = np.sum(err_frames ** 2, axis=1)
    keep = sig_pow > np.max(sig_pow) * 10.0 ** (-DB_CAP / 10.0)
    if not np.any(keep):
        raise ValueError("every frame of the reference is silent")
    sig_pow, err_pow = sig_pow[keep], err_pow[keep]
    with np.errstate(divide="ignore"):
        values = 10.0 * np.log10(sig_pow / err_pow)
    capped = bool(np.any(np.abs(values) > DB_CAP))
    values = np.clip(values, -DB_CAP, DB_CAP)
    return MetricReport(
        srr_db=float(np.mean(values)),
        per_frame_srr=values,
        frames_counted=int(values.size),
        capped=capped,
        perfect_match=bool(np.all(err_pow == 0.0)),
    )
