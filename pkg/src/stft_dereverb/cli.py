"""Command-line entry point: ``stft-dereverb <subcommand>``.

Subcommands: gen-rir, solve, enhance, evaluate, baseline. Log level comes
from ``STFT_DEREVERB_LOG`` (default WARNING).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import ExperimentConfig
from .experiment import enhance, merge_scores, run_evaluation, solve_channel, write_csv
from .metrics import cap_db, drr
from .rir import RoomRanges, batch_rooms, generate_rir, rir_from_json, rir_to_json
from .signals import ImpulseResponse, convolve
from .solver import effective_channel, filter_bank_from_json, filter_bank_to_json
from .stft import Signal
from .wavio import WavError, atomic_write_text, read_wav, write_wav
from .widrow import equalize, widrow_inverse

log = logging.getLogger("stft_dereverb")


class CliError(Exception):
    pass


def load_rir(path) -> ImpulseResponse:
    """RIR from a ``.json`` sidecar or a mono WAV."""
    path = Path(path)
    if path.suffix.lower() == ".json":
        return rir_from_json(path.read_text())
    sig = read_wav(path)
    return ImpulseResponse(sig.samples, sig.sample_rate)


def _config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg, rir=replace(cfg.rir, seed=args.seed))
    if getattr(args, "rooms", None) is not None:
        cfg = replace(cfg, rir=replace(cfg.rir, n_rooms=args.rooms))
    if getattr(args, "positions", None) is not None:
        cfg = replace(cfg, rir=replace(cfg.rir, n_positions=args.positions))
    if getattr(args, "full", False):
        cfg = cfg.full_scale()
    if getattr(args, "utterances", None) is not None:
        cfg = replace(cfg, speech=replace(cfg.speech, utterances_per_rir=args.utterances))
    if getattr(args, "speech_dir", None):
        cfg = replace(cfg, speech=replace(cfg.speech, speech_dir=args.speech_dir))
    if getattr(args, "A", None) is not None or getattr(args, "B", None) is not None:
        cfg = replace(cfg, filter=replace(cfg.filter,
                                          A=cfg.filter.A if args.A is None else args.A,
                                          B=cfg.filter.B if args.B is None else args.B))
    return cfg


def _out(args, cfg: ExperimentConfig) -> str:
    out = args.out or cfg.out
    if not out:
        raise CliError("no output path: pass --out or set io.out in the config")
    return out


def cmd_gen_rir(args) -> int:
    cfg = _config(args)
    out_dir = Path(_out(args, cfg))
    out_dir.mkdir(parents=True, exist_ok=True)
    if not os.access(out_dir, os.W_OK):
        raise CliError(f"output directory {out_dir} is not writable")
    specs = batch_rooms(cfg.rir.n_rooms, cfg.rir.n_positions, cfg.rir.ranges, cfg.rir.seed)
    for i, spec in enumerate(specs):
        h = generate_rir(spec)
        stem = out_dir / f"rir{i:04d}"
        write_wav(stem.with_suffix(".wav"), h.as_signal(), "float32")
        atomic_write_text(stem.with_suffix(".json"), rir_to_json(h, spec))
    print(f"wrote {len(specs)} RIRs to {out_dir}")
    return 0


def cmd_solve(args) -> int:
    cfg = _config(args)
    if not args.rir:
        raise CliError("--rir is required")
    h = load_rir(args.rir)
    _, _, bank = solve_channel(h, cfg.stft_config(), cfg.filter.A, cfg.filter.B)
    atomic_write_text(_out(args, cfg), filter_bank_to_json(bank))
    for msg in bank.diagnostics:
        print(f"warning: {msg}", file=sys.stderr)
    print(f"solved {bank.n_bins} bins, A={bank.A} B={bank.B}")
    return 0


def _fmt_db(v: float) -> str:
    capped, flag = cap_db(v)
    return f"{capped:.2f} dB" + (" (capped)" if flag else "")


def cmd_enhance(args) -> int:
    cfg = _config(args)
    if not args.rir:
        raise CliError("--rir is required")
    y = read_wav(args.input)
    h = load_rir(args.rir)
    if y.sample_rate != h.sample_rate:
        raise CliError(f"sample-rate mismatch: input {y.sample_rate:g} Hz, RIR {h.sample_rate:g} Hz")
    if args.convolve:
        y = convolve(y, h)
    stft = cfg.stft_config()
    if args.bank:
        bank = filter_bank_from_json(Path(args.bank).read_text())
        channel = None
    else:
        channel, _, bank = solve_channel(h, stft, cfg.filter.A, cfg.filter.B)
    s_hat = enhance(y, bank)
    write_wav(_out(args, cfg), s_hat, "float32")
    before = drr(h, cfg.metrics)
    if channel is not None:
        per_shift, _ = effective_channel(channel, bank)
        print(f"DRR before {_fmt_db(before)}, after {_fmt_db(drr(per_shift, cfg.metrics))}")
    else:
        print(f"DRR before {_fmt_db(before)}")
    return 0


def cmd_evaluate(args) -> int:
    cfg = _config(args)
    out = _out(args, cfg)
    rows = run_evaluation(cfg, jobs=args.jobs)
    write_csv(out, rows)
    if args.pesq_scores:
        merge_scores(out, args.pesq_scores, out)
    mean_in = np.mean([r.drr_before_db for r in rows])
    mean_out = np.mean([r.drr_after_db for r in rows])
    mean_w = np.mean([r.drr_widrow_db for r in rows])
    print(f"{len(rows)} RIRs: mean DRR {mean_in:.2f} -> {mean_out:.2f} dB "
          f"(widrow {mean_w:.2f} dB, proposed - widrow {mean_out - mean_w:+.2f} dB)")
    return 0


def cmd_baseline(args) -> int:
    cfg = _config(args)
    if not args.rir:
        raise CliError("--rir is required")
    h = load_rir(args.rir)
    g = widrow_inverse(h, cfg.baseline)
    composite = equalize(h.as_signal(), g)
    out = _out(args, cfg)
    if args.input:
        y = read_wav(args.input)
        if y.sample_rate != h.sample_rate:
            raise CliError(f"sample-rate mismatch: input {y.sample_rate:g} Hz, RIR {h.sample_rate:g} Hz")
        if args.convolve:
            y = convolve(y, h)
        write_wav(out, equalize(y, g), "float32")
    else:
        write_wav(out, Signal(g.taps, g.sample_rate), "float32")
    before = drr(h, cfg.metrics)
    after = drr(ImpulseResponse(composite.samples, h.sample_rate), cfg.metrics)
    print(f"DRR before {_fmt_db(before)}, after inverse filter {_fmt_db(after)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment config")
    common.add_argument("--seed", type=int, help="override rir.seed")
    common.add_argument("--out", help="output path (file or directory)")
    common.add_argument("-A", type=int, default=None, help="future frames")
    common.add_argument("-B", type=int, default=None, help="past frames")

    parser = argparse.ArgumentParser(prog="stft-dereverb", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-rir", parents=[common], help="write an image-method RIR corpus")
    p.add_argument("--rooms", type=int)
    p.add_argument("--positions", type=int)
    p.add_argument("--full", action="store_true", help="40 rooms x 15 placements")
    p.set_defaults(func=cmd_gen_rir)

    p = sub.add_parser("solve", parents=[common], help="solve a filter bank for a RIR")
    p.add_argument("--rir", required=False)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("enhance", parents=[common], help="dereverberate a WAV file")
    p.add_argument("input")
    p.add_argument("--rir")
    p.add_argument("--bank", help="precomputed filter-bank JSON")
    p.add_argument("--convolve", action="store_true", help="input is clean; convolve with the RIR first")
    p.set_defaults(func=cmd_enhance)

    p = sub.add_parser("evaluate", parents=[common], help="batch evaluation to CSV")
    p.add_argument("--rooms", type=int)
    p.add_argument("--positions", type=int)
    p.add_argument("--utterances", type=int, help="utterances per RIR for SRR")
    p.add_argument("--speech-dir", help="folder of mono WAV utterances")
    p.add_argument("--full", action="store_true", help="40 rooms x 15 placements, 240 utterances each (slow)")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--pesq-scores", help="CSV of externally computed scores to merge")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("baseline", parents=[common], help="time-domain least-squares inverse filter")
    p.add_argument("input", nargs="?")
    p.add_argument("--rir")
    p.add_argument("--convolve", action="store_true")
    p.set_defaults(func=cmd_baseline)
    return parser


def main(argv=None) -> int:
    level = os.environ.get("STFT_DEREVERB_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (CliError, WavError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
