"""Least-squares frame-combination coefficients from a known channel.

The channel is probed with an impulse at every position ``lam`` inside one
hop. For each bin, one stacked overdetermined system covers all positions
and all frames the filtered response can touch.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .signals import ImpulseResponse
from .stft import FilterBank, Signal, Spectrogram, StftConfig, analyze, apply_filter_bank, synthesize

log = logging.getLogger(__name__)

FORMAT_VERSION = 1
BOUND_RTOL = 1e-9
# Absolute slack relative to target energy; covers resynthesis roundoff at zero error.
BOUND_ATOL = 1e-20


def frame_support(M: int, config: StftConfig, A: int, B: int) -> tuple[int, int]:
    """``(l_min, l_max)``: the frame span every shifted channel is materialised over.

    ``l_max`` takes the largest shift ``lam = R - 1``.
    """
    Q, R = config.Q, config.R
    return 1 - Q - A, 1 + B + (M + R - 3) // R


@dataclass(frozen=True)
class LsProblem:
    """Row layout of the per-bin stacked system.

    Row ``(lam, l)`` exists for ``l`` in ``[row_first, row_last[lam]]``. The
    filtered response to an impulse at ``lam`` occupies frames
    ``1-Q-A .. B + floor((M+lam-1)/R)``; one guard frame is kept on each side,
    which makes the row count ``(2+A+B+Q)R + M - 1`` for every configuration.
    Guard rows are identically zero and do not move the solution.
    """

    Q: int
    R: int
    A: int
    B: int
    M: int

    @property
    def l_min(self) -> int:
        return 1 - self.Q - self.A

    @property
    def l_max(self) -> int:
        return 1 + self.B + (self.M + self.R - 3) // self.R

    @property
    def row_first(self) -> int:
        return self.l_min - 1

    def row_last(self, lam: int) -> int:
        return 1 + self.B + (self.M + lam - 1) // self.R

    @property
    def n_rows(self) -> int:
        return sum(self.row_last(lam) - self.row_first + 1 for lam in range(self.R))

    @property
    def n_unknowns(self) -> int:
        return self.A + self.B + 1

    def rows(self) -> tuple[np.ndarray, np.ndarray]:
        """``(lam, l)`` index arrays, one entry per row."""
        lams, ls = [], []
        for lam in range(self.R):
            l = np.arange(self.row_first, self.row_last(lam) + 1)
            lams.append(np.full(l.size, lam))
            ls.append(l)
        return np.concatenate(lams), np.concatenate(ls)

    @classmethod
    def for_channel(cls, M: int, config: StftConfig, A: int, B: int) -> "LsProblem":
        return cls(config.Q, config.R, A, B, M)


@dataclass(frozen=True)
class ErrorBoundReport:
    stft_error_power: float
    time_error_power: float
    bound_satisfied: bool
    slack: float


def shifted_channel_stfts(h: ImpulseResponse, config: StftConfig, A: int, B: int) -> list[Spectrogram]:
    """STFT of ``h[n - lam]`` for ``lam = 0..R-1`` over frames ``[l_min, l_max]``."""
    if A < 0 or B < 0:
        raise ValueError("A and B must be >= 0")
    l_min, l_max = frame_support(len(h), config, A, B)
    out = []
    for lam in range(config.R):
        sig = Signal(h.taps, h.sample_rate, start=h.start + lam)
        out.append(analyze(sig, config, l_min, l_max))
    return out


def target_stfts(h: ImpulseResponse, config: StftConfig, A: int, B: int) -> list[Spectrogram]:
    """STFT of the reflection-free response ``h[n_d] delta[n - n_d - lam]``."""
    l_min, l_max = frame_support(len(h), config, A, B)
    d = h.direct_index
    out = []
    for lam in range(config.R):
        sig = Signal(np.array([h.taps[d]]), h.sample_rate, start=h.start + d + lam)
        out.append(analyze(sig, config, l_min, l_max))
    return out


def _stack(specs: list[Spectrogram], first: int, last: int, n_half: int) -> np.ndarray:
    """``(R, n_frames, n_half)`` array of frames ``first..last``, zero-filled."""
    return np.stack([s.frames(first, last)[:, :n_half] for s in specs])


def _problem_from(channel: list[Spectrogram], A: int, B: int) -> LsProblem:
    spec0 = channel[0]
    cfg = spec0.config
    if len(channel) != cfg.R:
        raise ValueError(f"expected {cfg.R} shifted spectrograms, got {len(channel)}")
    # The span fixes floor((M+R-3)/R) only; take the largest M it allows so
    # no nonzero row is dropped.
    q = spec0.last_frame - 1 - B
    return LsProblem(cfg.Q, cfg.R, A, B, max(q * cfg.R + 2, 1))


def design_system(channel: list[Spectrogram], target: list[Spectrogram], A: int, B: int,
                  problem: LsProblem | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Stacked design matrices and right-hand sides for bins ``0..QR/2``.

    Returns ``D`` of shape ``(n_half, n_rows, A+B+1)`` and ``t`` of shape
    ``(n_half, n_rows)``; column ``j`` multiplies ``G_k[j - A]``.
    """
    cfg = channel[0].config
    problem = problem or _problem_from(channel, A, B)
    n_half = cfg.n_bins // 2 + 1
    lam_idx, l_idx = problem.rows()
    r = np.arange(-A, B + 1)
    base = problem.row_first - B
    top = max(problem.row_last(lam) for lam in range(cfg.R)) + A
    H = _stack(channel, base, top, n_half)
    T = _stack(target, base, top, n_half)
    src = l_idx[:, None] - r[None, :] - base
    D = H[lam_idx[:, None], src, :]          # (rows, cols, bins)
    t = T[lam_idx, l_idx - base, :]           # (rows, bins)
    return np.ascontiguousarray(D.transpose(2, 0, 1)), np.ascontiguousarray(t.T)


def _mirror(half: np.ndarray, n_bins: int) -> np.ndarray:
    """Fill bins above Nyquist by conjugate symmetry."""
    full = np.zeros((n_bins,) + half.shape[1:], dtype=np.complex128)
    n_half = half.shape[0]
    full[:n_half] = half
    for k in range(n_half, n_bins):
        full[k] = np.conj(half[n_bins - k])
    return full


def solve_filter_bank(channel: list[Spectrogram], target: list[Spectrogram], A: int, B: int,
                      problem: LsProblem | None = None) -> FilterBank:
    """Per-bin complex least squares for ``G_k[-A..B]``.

    Pass ``problem`` to fix the row layout to the exact channel length;
    otherwise it is inferred from the frame span. Bins whose design matrix
    is entirely zero get zero coefficients and are listed in
    ``bank.diagnostics``.
    """
    if len(channel) != len(target):
        raise ValueError("channel and target lists differ in length")
    cfg = channel[0].config
    for a, b in zip(channel, target):
        if not (a.config.same_grid(cfg) and b.config.same_grid(cfg)):
            raise ValueError("channel and target spectrograms use different STFT grids")
        if a.first_frame != b.first_frame or a.last_frame != b.last_frame:
            raise ValueError("channel and target spectrograms cover different frames")
    D, t = design_system(channel, target, A, B, problem)
    n_half = D.shape[0]
    coeffs = np.zeros((n_half, A + B + 1), dtype=np.complex128)
    diagnostics = []
    for k in range(n_half):
        Dk = D[k]
        if not np.any(Dk):
            diagnostics.append(f"bin {k}: channel has no energy, coefficients set to zero")
            continue
        g, _, rank, _ = linalg.lstsq(Dk, t[k], lapack_driver="gelsy", check_finite=False)
        if rank < Dk.shape[1]:
            diagnostics.append(f"bin {k}: rank {rank} < {Dk.shape[1]}, minimum-norm solution")
        coeffs[k] = g
    # DC and (even-length) Nyquist bins are real for real signals.
    coeffs[0] = coeffs[0].real
    if cfg.n_bins % 2 == 0:
        coeffs[n_half - 1] = coeffs[n_half - 1].real
    if diagnostics:
        log.info("solve_filter_bank: %d bins flagged", len(diagnostics))
    return FilterBank(A, B, _mirror(coeffs, cfg.n_bins), cfg, diagnostics)


def solve_for_channel(h: ImpulseResponse, config: StftConfig, A: int, B: int) -> FilterBank:
    """Convenience: shifted channel + target STFTs, then the solve."""
    return solve_filter_bank(shifted_channel_stfts(h, config, A, B),
                             target_stfts(h, config, A, B), A, B,
                             LsProblem.for_channel(len(h), config, A, B))


def ls_residuals(channel: list[Spectrogram], target: list[Spectrogram], bank: FilterBank) -> np.ndarray:
    """Per-bin ``sum |D g - t|^2`` for bins ``0..QR/2``."""
    D, t = design_system(channel, target, bank.A, bank.B)
    g = bank.coeffs[:D.shape[0]]
    resid = np.einsum("krc,kc->kr", D, g) - t
    return np.sum(np.abs(resid) ** 2, axis=1)


def shift_phase(k: np.ndarray, lam: int, n_bins: int) -> np.ndarray:
    """Phase factor aligning shift ``lam`` to position zero before averaging.

    Taken as ``exp(+j 2 pi k lam / QR)``, which cancels the linear phase of a
    ``lam``-sample delay.
    """
    return np.exp(2j * np.pi * k * lam / n_bins)


def effective_channel(channel: list[Spectrogram], bank: FilterBank) -> tuple[list[ImpulseResponse], ImpulseResponse]:
    """End-to-end responses of channel plus filter.

    ``per_shift[lam]`` is the response to an impulse at ``lam``, moved left by
    ``lam`` so every entry is referenced to time zero. ``average`` is the
    inverse STFT of the phase-aligned mean of the filtered spectrograms.
    """
    cfg = channel[0].config
    sr = channel[0].sample_rate
    filtered = [apply_filter_bank(s, bank) for s in channel]
    per_shift = []
    for lam, spec in enumerate(filtered):
        sig = synthesize(spec)
        per_shift.append(ImpulseResponse(sig.samples, sr, start=sig.start - lam))
    k = np.arange(cfg.n_bins)
    acc = np.zeros_like(filtered[0].data)
    for lam, spec in enumerate(filtered):
        acc += spec.data * shift_phase(k, lam, cfg.n_bins)
    avg_spec = Spectrogram(acc / cfg.R, filtered[0].frame_offset, cfg, sr)
    sig = synthesize(avg_spec)
    return per_shift, ImpulseResponse(sig.samples, sr, start=sig.start)


def check_error_bound(channel: list[Spectrogram], target: list[Spectrogram], bank: FilterBank,
                      h: ImpulseResponse | None = None) -> ErrorBoundReport:
    """Compare STFT-domain and time-domain error power of the filtered channel.

    The STFT side sums ``|H_e|^2 / QR`` over every frame, bin and shift; the
    time side sums the squared difference between the reflection-free
    response and the overlap-added filtered response, over all shifts. When
    ``h`` is given the reflection-free response is built directly from it,
    otherwise it is resynthesised from ``target``.
    """
    cfg = channel[0].config
    stft_power = 0.0
    time_power = 0.0
    target_power = 0.0
    for lam, (ch, tg) in enumerate(zip(channel, target)):
        est = apply_filter_bank(ch, bank)
        first = min(est.first_frame, tg.first_frame)
        last = max(est.last_frame, tg.last_frame)
        err = tg.frames(first, last) - est.frames(first, last)
        stft_power += float(np.sum(np.abs(err) ** 2)) / cfg.n_bins
        target_power += float(np.sum(np.abs(tg.data) ** 2)) / cfg.n_bins

        est_sig = synthesize(est)
        if h is not None:
            d = h.direct_index
            want = Signal(np.array([h.taps[d]]), h.sample_rate, start=h.start + d + lam)
        else:
            want = synthesize(tg)
        lo = min(est_sig.start, want.start)
        hi = max(est_sig.start + len(est_sig), want.start + len(want))
        diff = want.window_at(lo, hi - lo) - est_sig.window_at(lo, hi - lo)
        time_power += float(np.dot(diff, diff))
    ok = time_power <= stft_power + BOUND_RTOL * stft_power + BOUND_ATOL * target_power
    return ErrorBoundReport(stft_power, time_power, ok, stft_power - time_power)


def filter_bank_to_json(bank: FilterBank) -> str:
    """Serialise ``bank``; floats use ``repr`` so a reload is bit-exact.

    Layout::

        {"format_version": 1, "Q": .., "R": .., "A": .., "B": ..,
         "window_kind": "sqrt-hann", "window": [w0, w1, ...],
         "coeffs": [[re(G_k[-A]), im(G_k[-A]), ..., re(G_k[B]), im(G_k[B])], ...]}

    One ``coeffs`` row per bin ``k = 0..QR-1``.
    """
    cfg = bank.config
    rows = []
    for row in bank.coeffs:
        pairs = np.empty(2 * row.size)
        pairs[0::2] = row.real
        pairs[1::2] = row.imag
        rows.append(pairs.tolist())
    doc = {
        "format_version": FORMAT_VERSION,
        "Q": cfg.Q, "R": cfg.R, "A": bank.A, "B": bank.B,
        "window_kind": cfg.kind,
        "window": cfg.window.tolist(),
        "coeffs": rows,
        "diagnostics": list(bank.diagnostics),
    }
    return json.dumps(doc)


def filter_bank_from_json(text: str) -> FilterBank:
    doc = json.loads(text)
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported filter-bank format_version {version!r}")
    cfg = StftConfig(int(doc["Q"]), int(doc["R"]), np.array(doc["window"], dtype=np.float64),
                     doc.get("window_kind", "custom"))
    pairs = np.array(doc["coeffs"], dtype=np.float64)
    coeffs = pairs[:, 0::2] + 1j * pairs[:, 1::2]
    return FilterBank(int(doc["A"]), int(doc["B"]), coeffs, cfg, list(doc.get("diagnostics", [])))
