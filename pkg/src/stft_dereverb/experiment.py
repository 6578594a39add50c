"""Batch evaluation over a generated RIR corpus, written as CSV."""

from __future__ import annotations

import csv
import io
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .config import ExperimentConfig
from .metrics import DrrParams, cap_db, drr, srr_seg
from .rir import RoomSpec, batch_rooms, generate_rir
from .signals import ImpulseResponse, convolve, speech_like
from .solver import (
    LsProblem,
    effective_channel,
    shifted_channel_stfts,
    solve_filter_bank,
    target_stfts,
)
from .stft import FilterBank, Signal, StftConfig, analyze, apply_filter_bank, synthesize
from .wavio import atomic_write_text, read_wav
from .widrow import equalize, widrow_inverse

log = logging.getLogger(__name__)

CSV_VERSION = 1
CSV_HEADER_COMMENT = f"# stft-dereverb evaluation v{CSV_VERSION}"


def enhance(y: Signal, bank: FilterBank) -> Signal:
    """Filter ``y`` frame-wise and resynthesise over its original sample range."""
    spec = apply_filter_bank(analyze(y, bank.config), bank)
    return synthesize(spec, len(y))


def solve_channel(h: ImpulseResponse, config: StftConfig, A: int, B: int):
    """Shifted channel STFTs, targets and the solved bank for ``h``."""
    channel = shifted_channel_stfts(h, config, A, B)
    target = target_stfts(h, config, A, B)
    bank = solve_filter_bank(channel, target, A, B, LsProblem.for_channel(len(h), config, A, B))
    return channel, target, bank


@dataclass
class EvalRow:
    rir_id: str
    reflection_coeff: float
    distance_m: float
    drr_before_db: float
    drr_after_db: float
    drr_widrow_db: float
    drr_improvement_db: float
    drr_widrow_improvement_db: float
    srr_before_db: float | None
    srr_after_db: float | None
    srr_improvement_db: float | None
    capped: bool
    wall_time_s: float


COLUMNS = [f.name for f in fields(EvalRow)]


def _utterances(cfg: ExperimentConfig, rir_index: int, sample_rate: float) -> list[Signal]:
    n = cfg.speech.utterances_per_rir
    if n <= 0:
        return []
    if cfg.speech.speech_dir:
        files = sorted(Path(cfg.speech.speech_dir).glob("*.wav"))
        if not files:
            raise FileNotFoundError(f"no .wav files in {cfg.speech.speech_dir}")
        out = []
        for i in range(n):
            sig = read_wav(files[(rir_index * n + i) % len(files)])
            if sig.sample_rate != sample_rate:
                raise ValueError(f"utterance rate {sig.sample_rate} Hz != RIR rate {sample_rate} Hz")
            out.append(sig)
        return out
    return [speech_like(cfg.speech.duration_s, sample_rate, seed=cfg.rir.seed * 1_000_003 + rir_index * 1000 + i)
            for i in range(n)]


def _srr_pair(h: ImpulseResponse, bank: FilterBank, utterances: list[Signal]) -> tuple[float, float]:
    before, after = [], []
    direct = h.direct_path()
    for s in utterances:
        y = convolve(s, h)
        s_d = convolve(s, direct)
        s_hat = enhance(y, bank)
        before.append(srr_seg(s_d, y, bank.config).srr_db)
        after.append(srr_seg(s_d, s_hat, bank.config).srr_db)
    return float(np.mean(before)), float(np.mean(after))


def evaluate_rir(rir_index: int, spec: RoomSpec, cfg: ExperimentConfig) -> EvalRow:
    """Channel DRR before/after/baseline and, if configured, SRR for one RIR."""
    t0 = time.perf_counter()
    stft = cfg.stft_config()
    params: DrrParams = cfg.metrics
    h = generate_rir(spec)
    channel, _, bank = solve_channel(h, stft, cfg.filter.A, cfg.filter.B)
    per_shift, _ = effective_channel(channel, bank)
    g = widrow_inverse(h, cfg.baseline)
    composite = equalize(h.as_signal(), g)
    d_in = drr(h, params)
    d_out = drr(per_shift, params)
    d_w = drr(ImpulseResponse(composite.samples, h.sample_rate), params)
    capped = any(math.isinf(v) for v in (d_in, d_out, d_w))
    d_in, c1 = cap_db(d_in)
    d_out, c2 = cap_db(d_out)
    d_w, c3 = cap_db(d_w)
    srr_b = srr_a = srr_i = None
    limit = cfg.speech.srr_rirs
    if limit is None or rir_index < limit:
        utts = _utterances(cfg, rir_index, h.sample_rate)
        if utts:
            srr_b, srr_a = _srr_pair(h, bank, utts)
            srr_i = srr_a - srr_b
    return EvalRow(
        rir_id=f"rir{rir_index:04d}",
        reflection_coeff=spec.reflection_coeff,
        distance_m=spec.distance,
        drr_before_db=d_in,
        drr_after_db=d_out,
        drr_widrow_db=d_w,
        drr_improvement_db=d_out - d_in,
        drr_widrow_improvement_db=d_w - d_in,
        srr_before_db=srr_b,
        srr_after_db=srr_a,
        srr_improvement_db=srr_i,
        capped=capped or c1 or c2 or c3,
        wall_time_s=time.perf_counter() - t0,
    )


def _evaluate_star(args):
    return evaluate_rir(*args)


def run_evaluation(cfg: ExperimentConfig, jobs: int = 1) -> list[EvalRow]:
    """Evaluate every RIR of the configured corpus, sorted by ``rir_id``."""
    specs = batch_rooms(cfg.rir.n_rooms, cfg.rir.n_positions, cfg.rir.ranges, cfg.rir.seed)
    if not specs:
        raise ValueError("empty RIR corpus")
    work = [(i, spec, cfg) for i, spec in enumerate(specs)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_evaluate_star, work))
    else:
        rows = [_evaluate_star(w) for w in work]
    for row in rows:
        log.info("%s drr %.2f -> %.2f dB (widrow %.2f dB)", row.rir_id, row.drr_before_db,
                 row.drr_after_db, row.drr_widrow_db)
    return sorted(rows, key=lambda r: r.rir_id)


def _mean(values):
    vals = [v for v in values if v is not None]
    return float(np.mean(vals)) if vals else None


def summary_row(rows: list[EvalRow]) -> EvalRow:
    """Column means; ``wall_time_s`` is the total."""
    return EvalRow(
        rir_id="mean",
        reflection_coeff=_mean(r.reflection_coeff for r in rows),
        distance_m=_mean(r.distance_m for r in rows),
        drr_before_db=_mean(r.drr_before_db for r in rows),
        drr_after_db=_mean(r.drr_after_db for r in rows),
        drr_widrow_db=_mean(r.drr_widrow_db for r in rows),
        drr_improvement_db=_mean(r.drr_improvement_db for r in rows),
        drr_widrow_improvement_db=_mean(r.drr_widrow_improvement_db for r in rows),
        srr_before_db=_mean(r.srr_before_db for r in rows),
        srr_after_db=_mean(r.srr_after_db for r in rows),
        srr_improvement_db=_mean(r.srr_improvement_db for r in rows),
        capped=any(r.capped for r in rows),
        wall_time_s=sum(r.wall_time_s for r in rows),
    )


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def rows_to_csv(rows: list[EvalRow], extra_comments: list[str] = ()) -> str:
    """CSV text: version comment, optional comments, header, rows, summary row."""
    buf = io.StringIO()
    buf.write(CSV_HEADER_COMMENT + "\n")
    for line in extra_comments:
        buf.write(f"# {line}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for row in list(rows) + [summary_row(rows)]:
        writer.writerow([_fmt(getattr(row, c)) for c in COLUMNS])
    return buf.getvalue()


def write_csv(path, rows: list[EvalRow]):
    s = summary_row(rows)
    comments = [
        f"mean_drr_improvement_db={_fmt(s.drr_improvement_db)}",
        f"mean_widrow_improvement_db={_fmt(s.drr_widrow_improvement_db)}",
        f"proposed_minus_widrow_db={_fmt(s.drr_improvement_db - s.drr_widrow_improvement_db)}",
    ]
    atomic_write_text(path, rows_to_csv(rows, comments))


def read_csv(path) -> list[dict]:
    with open(path) as f:
        lines = [line for line in f if not line.startswith("#")]
    return list(csv.DictReader(lines))


def merge_scores(csv_path, scores_path, out_path, prefix: str = "pesq"):
    """Join externally computed scores onto an evaluation CSV by ``rir_id``.

    ``scores_path`` is a CSV with ``rir_id`` plus ``before`` and ``after``
    columns; they land as ``<prefix>_before``/``<prefix>_after``.
    """
    rows = read_csv(csv_path)
    with open(scores_path) as f:
        scores = {r["rir_id"]: r for r in csv.DictReader(f)}
    buf = io.StringIO()
    buf.write(CSV_HEADER_COMMENT + "\n")
    cols = list(rows[0].keys()) + [f"{prefix}_before", f"{prefix}_after"]
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(cols)
    for r in rows:
        sc = scores.get(r["rir_id"], {})
        writer.writerow([r[c] for c in rows[0].keys()] + [sc.get("before", ""), sc.get("after", "")])
    atomic_write_text(out_path, buf.getvalue())
