"""Experiment configuration, loaded from JSON.

Schema (every key optional, defaults shown)::

    {
      "stft":     {"Q": 4, "R": 64, "window": "sqrt-hann"},
      "filter":   {"A": 9, "B": 9},
      "rir":      {"n_rooms": 4, "n_positions": 5, "seed": 1,
                   "ranges": {<RoomRanges fields>}},
      "baseline": {"filter_len": 1024, "channel_len": 1024, "target_delay": null},
      "metrics":  {"eta": 8, "sigma_step": 0.01, "coherent": true},
      "speech":   {"utterances_per_rir": 2, "duration_s": 1.0, "speech_dir": null,
                   "srr_rirs": null},
      "io":       {"out": null}
    }
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace

from .metrics import DrrParams
from .rir import RoomRanges
from .stft import StftConfig, make_window
from .widrow import InverseFilterSpec

FULL_ROOMS = 40
FULL_POSITIONS = 15
FULL_UTTERANCES = 240


@dataclass(frozen=True)
class StftSection:
    Q: int = 4
    R: int = 64
    window: str = "sqrt-hann"


@dataclass(frozen=True)
class FilterSection:
    A: int = 9
    B: int = 9


@dataclass(frozen=True)
class RirSection:
    n_rooms: int = 4
    n_positions: int = 5
    seed: int = 1
    ranges: RoomRanges = field(default_factory=RoomRanges)


@dataclass(frozen=True)
class SpeechSection:
    utterances_per_rir: int = 2
    duration_s: float = 1.0
    speech_dir: str | None = None
    # Only the first ``srr_rirs`` RIRs get SRR columns; None means all.
    srr_rirs: int | None = None


@dataclass(frozen=True)
class ExperimentConfig:
    stft: StftSection = field(default_factory=StftSection)
    filter: FilterSection = field(default_factory=FilterSection)
    rir: RirSection = field(default_factory=RirSection)
    baseline: InverseFilterSpec = field(default_factory=InverseFilterSpec)
    metrics: DrrParams = field(default_factory=DrrParams)
    speech: SpeechSection = field(default_factory=SpeechSection)
    out: str | None = None

    def stft_config(self) -> StftConfig:
        return make_window(self.stft.window, self.stft.Q, self.stft.R)

    def full_scale(self) -> "ExperimentConfig":
        """Large corpus: 40 rooms x 15 placements, 240 utterances per RIR."""
        return replace(
            self,
            rir=replace(self.rir, n_rooms=FULL_ROOMS, n_positions=FULL_POSITIONS),
            speech=replace(self.speech, utterances_per_rir=FULL_UTTERANCES),
        )

    def to_dict(self) -> dict:
        d = asdict(self)
        d["io"] = {"out": d.pop("out")}
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {"stft", "filter", "rir", "baseline", "metrics", "speech", "io"}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config sections: {sorted(unknown)}")
        rir = dict(d.get("rir", {}))
        if "ranges" in rir:
            rir["ranges"] = RoomRanges.from_dict(rir["ranges"])
        return cls(
            stft=StftSection(**d.get("stft", {})),
            filter=FilterSection(**d.get("filter", {})),
            rir=RirSection(**rir),
            baseline=InverseFilterSpec(**d.get("baseline", {})),
            metrics=DrrParams(**d.get("metrics", {})),
            speech=SpeechSection(**d.get("speech", {})),
            out=d.get("io", {}).get("out"),
        )

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path) as f:
            return cls.from_dict(json.load(f))
