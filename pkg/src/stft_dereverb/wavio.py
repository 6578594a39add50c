"""Mono WAV reading/writing: 16-bit PCM and 32-bit IEEE float."""

from __future__ import annotations

import os
import struct
import tempfile

import numpy as np

from .stft import Signal

PCM = 1
IEEE_FLOAT = 3
EXTENSIBLE = 0xFFFE


class WavError(ValueError):
    pass


def _chunks(data: bytes):
    if len(data) < 12:
        raise WavError(f"truncated RIFF header at offset {len(data)} (need 12 bytes)")
    riff, _, wave = struct.unpack_from("<4sI4s", data, 0)
    if riff != b"RIFF" or wave != b"WAVE":
        raise WavError("not a RIFF/WAVE file at offset 0")
    pos = 12
    while pos < len(data):
        if pos + 8 > len(data):
            raise WavError(f"truncated chunk header at offset {pos}")
        cid, size = struct.unpack_from("<4sI", data, pos)
        body = pos + 8
        if body + size > len(data):
            raise WavError(f"chunk {cid!r} at offset {pos} claims {size} bytes, "
                           f"only {len(data) - body} present")
        yield cid, body, size
        pos = body + size + (size & 1)


def read_wav(path) -> Signal:
    """Read a mono WAV as float64 samples in [-1, 1].

    Stereo and other codecs raise :class:`WavError` (no implicit downmix).
    """
    with open(path, "rb") as f:
        data = f.read()
    fmt = None
    payload = None
    for cid, body, size in _chunks(data):
        if cid == b"fmt ":
            if size < 16:
                raise WavError(f"fmt chunk at offset {body - 8} is {size} bytes, need 16")
            tag, channels, rate, _, _, bits = struct.unpack_from("<HHIIHH", data, body)
            if tag == EXTENSIBLE and size >= 26:
                tag = struct.unpack_from("<H", data, body + 24)[0]
            fmt = (tag, channels, rate, bits)
        elif cid == b"data":
            payload = (body, size)
    if fmt is None:
        raise WavError("missing fmt chunk")
    if payload is None:
        raise WavError("missing data chunk")
    tag, channels, rate, bits = fmt
    if channels != 1:
        raise WavError(f"expected mono audio, got {channels} channels")
    body, size = payload
    raw = data[body:body + size]
    if tag == PCM and bits == 16:
        x = np.frombuffer(raw[:size - size % 2], dtype="<i2").astype(np.float64) / 32768.0
    elif tag == IEEE_FLOAT and bits == 32:
        x = np.frombuffer(raw[:size - size % 4], dtype="<f4").astype(np.float64)
    else:
        raise WavError(f"unsupported codec: format tag {tag}, {bits} bits")
    return Signal(x, float(rate))


def _atomic_write(path, blob: bytes):
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(blob)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_wav(path, signal: Signal, fmt: str = "float32"):
    """Write ``signal`` as a mono WAV (``float32`` or ``pcm16``) via temp file + rename."""
    rate = int(round(signal.sample_rate))
    if fmt == "float32":
        payload = signal.samples.astype("<f4").tobytes()
        tag, bits = IEEE_FLOAT, 32
    elif fmt == "pcm16":
        q = np.clip(np.round(signal.samples * 32768.0), -32768, 32767)
        payload = q.astype("<i2").tobytes()
        tag, bits = PCM, 16
    else:
        raise ValueError(f"unsupported WAV format {fmt!r}")
    block = bits // 8
    header = struct.pack("<4sI4s", b"RIFF", 4 + 24 + 8 + len(payload) + (len(payload) & 1), b"WAVE")
    fmt_chunk = struct.pack("<4sIHHIIHH", b"fmt ", 16, tag, 1, rate, rate * block, block, bits)
    data_chunk = struct.pack("<4sI", b"data", len(payload)) + payload + (b"\0" if len(payload) & 1 else b"")
    _atomic_write(path, header + fmt_chunk + data_chunk)


def atomic_write_text(path, text: str):
    _atomic_write(path, text.encode("utf-8"))
