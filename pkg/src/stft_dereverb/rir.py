"""Shoebox room impulse responses by the image-source method."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from . import _backend
from .signals import ImpulseResponse

KERNEL_HALF_WIDTH = 8
MIN_SOURCE_MIC_DISTANCE = 0.5
# Early images (order <= 2) may reach at most this fraction of the direct tap.
DIRECT_DOMINANCE = 0.9


@dataclass(frozen=True)
class RoomSpec:
    dimensions: tuple[float, float, float]
    source: tuple[float, float, float]
    mic: tuple[float, float, float]
    reflection_coeff: float = 0.8
    sample_rate: float = 16000.0
    rir_len: int = 1024
    max_order: int = 50
    speed_of_sound: float = 343.0

    def __post_init__(self):
        dims = np.asarray(self.dimensions, dtype=float)
        src = np.asarray(self.source, dtype=float)
        mic = np.asarray(self.mic, dtype=float)
        if dims.shape != (3,) or src.shape != (3,) or mic.shape != (3,):
            raise ValueError("dimensions, source and mic must be 3-vectors")
        if np.any(dims <= 0):
            raise ValueError(f"room dimensions must be positive, got {self.dimensions}")
        for name, p in (("source", src), ("mic", mic)):
            if np.any(p <= 0) or np.any(p >= dims):
                raise ValueError(f"{name} {tuple(p)} is not strictly inside the room {tuple(dims)}")
        if np.allclose(src, mic):
            raise ValueError("source and mic coincide")
        if not 0 <= self.reflection_coeff < 1:
            raise ValueError(f"reflection_coeff must lie in [0, 1), got {self.reflection_coeff}")
        if self.rir_len < 1 or self.max_order < 0:
            raise ValueError("rir_len must be >= 1 and max_order >= 0")

    @property
    def distance(self) -> float:
        return float(np.linalg.norm(np.subtract(self.source, self.mic)))

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RoomSpec":
        d = dict(d)
        for key in ("dimensions", "source", "mic"):
            d[key] = tuple(float(v) for v in d[key])
        return cls(**d)


def image_sources(spec: RoomSpec, min_order: int = 0, max_order: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Delays (samples) and amplitudes of images with reflection count in ``[min_order, max_order]``.

    Images arriving after ``rir_len + KERNEL_HALF_WIDTH`` samples are dropped.
    """
    max_order = spec.max_order if max_order is None else max_order
    L = np.asarray(spec.dimensions, dtype=float)
    s = np.asarray(spec.source, dtype=float)
    m = np.asarray(spec.mic, dtype=float)
    fs, c, beta = spec.sample_rate, spec.speed_of_sound, spec.reflection_coeff
    max_dist = (spec.rir_len + KERNEL_HALF_WIDTH) * c / fs
    # Per axis: image coordinate offset and reflection count for each (p, k).
    axes = []
    for ax in range(3):
        kmax = int(np.ceil(max_dist / (2 * L[ax]))) + 1
        k = np.arange(-kmax, kmax + 1)
        entries = []
        for p in (0, 1):
            offset = (1 - 2 * p) * s[ax] + 2 * k * L[ax] - m[ax]
            order = np.abs(k - p) + np.abs(k)
            entries.append((offset, order))
        off = np.concatenate([e[0] for e in entries])
        order = np.concatenate([e[1] for e in entries])
        keep = (np.abs(off) <= max_dist) & (order <= max_order)
        axes.append((off[keep], order[keep]))
    (dx, ox), (dy, oy), (dz, oz) = axes
    dist2 = dx[:, None, None] ** 2 + dy[None, :, None] ** 2 + dz[None, None, :] ** 2
    order = ox[:, None, None] + oy[None, :, None] + oz[None, None, :]
    sel = (order >= min_order) & (order <= max_order) & (dist2 <= max_dist ** 2)
    dist = np.sqrt(dist2[sel])
    order = order[sel]
    # Fixed ordering keeps the accumulation bit-for-bit reproducible.
    idx = np.lexsort((dist, order))
    dist, order = dist[idx], order[idx]
    amps = np.power(beta, order) / (4 * np.pi * dist)
    return dist * fs / c, amps


def generate_rir(spec: RoomSpec, seed: int = 0) -> ImpulseResponse:
    """Image-method RIR with Hann-tapered sinc fractional delays.

    The method is deterministic; ``seed`` is accepted for interface symmetry
    with randomised variants and does not change the result.
    """
    delays, amps = image_sources(spec)
    taps = _backend.deposit_images(np.ascontiguousarray(delays), np.ascontiguousarray(amps),
                                   spec.rir_len, KERNEL_HALF_WIDTH)
    taps = np.asarray(taps)
    direct = spec.distance * spec.sample_rate / spec.speed_of_sound
    n_d = min(int(round(direct)), spec.rir_len - 1)
    return ImpulseResponse(taps, spec.sample_rate, direct_index=n_d)


@dataclass(frozen=True)
class RoomRanges:
    """Sampling ranges for :func:`batch_rooms` (metres unless noted)."""

    length: tuple[float, float] = (4.0, 8.0)
    width: tuple[float, float] = (3.0, 6.0)
    height: tuple[float, float] = (2.5, 3.5)
    reflection_coeff: tuple[float, float] = (0.7, 0.92)
    distance: tuple[float, float] = (1.5, 3.0)
    wall_margin: float = 0.5
    sample_rate: float = 16000.0
    rir_len: int = 1024
    max_order: int = 50

    def __post_init__(self):
        for name in ("length", "width", "height", "reflection_coeff", "distance"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ValueError(f"range {name} is empty: {lo} > {hi}")
        if self.distance[0] < MIN_SOURCE_MIC_DISTANCE:
            raise ValueError(f"range distance must start at >= {MIN_SOURCE_MIC_DISTANCE} m")
        lo, hi = self.reflection_coeff
        if lo < 0 or hi >= 1:
            raise ValueError("range reflection_coeff must lie in [0, 1)")
        smallest = np.array([self.length[0], self.width[0], self.height[0]]) - 2 * self.wall_margin
        if np.any(smallest <= 0):
            raise ValueError("range length/width/height too small for wall_margin")
        if self.distance[0] > np.linalg.norm(smallest):
            raise ValueError(
                f"range distance {self.distance} infeasible: the smallest room fits at most "
                f"{np.linalg.norm(smallest):.2f} m")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RoomRanges":
        d = dict(d)
        for key in ("length", "width", "height", "reflection_coeff", "distance"):
            if key in d:
                d[key] = tuple(float(v) for v in d[key])
        return cls(**d)


def direct_dominance(spec: "RoomSpec", max_order: int = 2) -> float:
    """Largest early-reflection tap relative to the direct-path tap.

    Only images up to ``max_order`` reflections are deposited, so coincident
    arrivals that sum are caught while the check stays cheap.
    """
    d0 = spec.distance * spec.sample_rate / spec.speed_of_sound
    n_d = int(round(d0))
    n = n_d + int(np.ceil(2 * max(spec.dimensions) * max_order * spec.sample_rate / spec.speed_of_sound)) + 2 * KERNEL_HALF_WIDTH
    delays, amps = image_sources(RoomSpec(**{**spec.to_dict(), "max_order": max_order, "rir_len": n}))
    taps = np.abs(np.asarray(_backend.deposit_images(delays, amps, n, KERNEL_HALF_WIDTH)))
    direct = taps[n_d]
    taps[n_d] = 0.0
    return float(taps.max() / direct)


def _place(rng: np.random.Generator, dims: np.ndarray, beta: float, ranges: RoomRanges, tries: int = 2000):
    lo, hi = ranges.wall_margin, dims - ranges.wall_margin
    for _ in range(tries):
        src = rng.uniform(lo, hi)
        d = rng.uniform(*ranges.distance)
        direction = rng.standard_normal(3)
        direction /= np.linalg.norm(direction)
        mic = src + d * direction
        if not (np.all(mic > lo) and np.all(mic < hi)):
            continue
        spec = RoomSpec(tuple(dims), tuple(src), tuple(mic), beta, ranges.sample_rate,
                        ranges.rir_len, ranges.max_order)
        if direct_dominance(spec) < DIRECT_DOMINANCE:
            return src, mic
    return None


def batch_rooms(n_rooms: int, n_positions: int, ranges: RoomRanges = RoomRanges(), seed: int = 0) -> list[RoomSpec]:
    """``n_rooms * n_positions`` reproducible room/placement draws.

    Placements keep ``wall_margin`` from every wall, respect the distance
    range, and reject geometries where early reflections come close to the
    direct-path tap.

    Raises ``ValueError`` naming the offending range when a placement cannot
    be found.
    """
    if n_rooms < 1 or n_positions < 1:
        raise ValueError("n_rooms and n_positions must be >= 1")
    rng = np.random.default_rng(seed)
    specs = []
    for room in range(n_rooms):
        dims = np.array([rng.uniform(*ranges.length), rng.uniform(*ranges.width),
                         rng.uniform(*ranges.height)])
        beta = float(rng.uniform(*ranges.reflection_coeff))
        for pos in range(n_positions):
            placed = _place(rng, dims, beta, ranges)
            if placed is None:
                raise ValueError(
                    f"range distance {ranges.distance} infeasible in room {tuple(np.round(dims, 2))} "
                    f"with wall_margin {ranges.wall_margin}")
            src, mic = placed
            specs.append(RoomSpec(
                dimensions=tuple(float(v) for v in dims),
                source=tuple(float(v) for v in src),
                mic=tuple(float(v) for v in mic),
                reflection_coeff=beta,
                sample_rate=ranges.sample_rate,
                rir_len=ranges.rir_len,
                max_order=ranges.max_order,
            ))
    return specs


def rir_to_json(h: ImpulseResponse, spec: RoomSpec | None = None) -> str:
    doc = {"sample_rate": h.sample_rate, "direct_index": h.direct_index, "taps": h.taps.tolist()}
    if spec is not None:
        doc["room"] = spec.to_dict()
    return json.dumps(doc)


def rir_from_json(text: str) -> ImpulseResponse:
    doc = json.loads(text)
    return ImpulseResponse(np.array(doc["taps"], dtype=np.float64), float(doc["sample_rate"]),
                           doc.get("direct_index"))
