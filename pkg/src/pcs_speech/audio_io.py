"""Mono RIFF/WAVE reading and writing.

Only two encodings are understood: 16-bit integer PCM (format code 1) and
32-bit IEEE float (format code 3). Integer samples are scaled by 1/32768, so
the representable range is [-1, 32767/32768].
"""
from __future__ import annotations

import os
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    ChannelCountError,
    CorruptHeader,
    InvalidBuffer,
    MissingFile,
    UnsupportedEncoding,
)

PCM16_SCALE = 32768.0
WAVE_FORMAT_PCM = 1
WAVE_FORMAT_IEEE_FLOAT = 3
ENCODINGS = ("pcm16", "float32")


@dataclass(frozen=True, eq=False)
class AudioBuffer:
    """Mono waveform with its sample rate.

    ``samples`` is stored as a read-only float64 array.
    """

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.array(self.samples, dtype=np.float64, copy=True)
        if samples.ndim != 1:
            raise InvalidBuffer(f"expected 1-D samples, got shape {samples.shape}")
        if not np.all(np.isfinite(samples)):
            raise InvalidBuffer("samples contain NaN or Inf")
        rate = int(self.sample_rate)
        if rate != self.sample_rate or rate <= 0:
            raise InvalidBuffer(f"sample_rate must be a positive integer, got {self.sample_rate!r}")
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", rate)

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def duration(self) -> float:
        return len(self) / self.sample_rate

    @property
    def peak(self) -> float:
        return float(np.max(np.abs(self.samples))) if len(self) else 0.0

    def with_samples(self, samples) -> "AudioBuffer":
        return AudioBuffer(samples, self.sample_rate)


def _iter_chunks(data: bytes):
    pos = 12
    while pos + 8 <= len(data):
        cid, size = struct.unpack_from("<4sI", data, pos)
        body = pos + 8
        if body + size > len(data):
            raise CorruptHeader(f"chunk {cid!r} runs past end of file")
        yield cid, data[body:body + size]
        pos = body + size + (size & 1)


def read_wav(path: str | os.PathLike) -> AudioBuffer:
    """Read a mono 16-bit PCM or 32-bit float WAV file.

    Raises:
        MissingFile: ``path`` does not exist.
        CorruptHeader: malformed RIFF structure, or no fmt/data chunk.
        UnsupportedEncoding: any encoding other than pcm16 / float32.
        ChannelCountError: more or fewer than one channel.
    """
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"no such file: {path}")
    data = path.read_bytes()
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise CorruptHeader(f"{path}: not a RIFF/WAVE file")

    fmt = None
    payload = None
    for cid, body in _iter_chunks(data):
        if cid == b"fmt ":
            if len(body) < 16:
                raise CorruptHeader(f"{path}: fmt chunk too short")
            fmt = struct.unpack_from("<HHIIHH", body)
        elif cid == b"data":
            payload = body
            break
    if fmt is None or payload is None:
        raise CorruptHeader(f"{path}: missing fmt or data chunk")

    tag, channels, rate, _, block_align, bits = fmt
    if (tag, bits) == (WAVE_FORMAT_PCM, 16):
        dtype = np.dtype("<i2")
    elif (tag, bits) == (WAVE_FORMAT_IEEE_FLOAT, 32):
        dtype = np.dtype("<f4")
    else:
        raise UnsupportedEncoding(f"{path}: format tag {tag} with {bits} bits per sample")
    if channels != 1:
        raise ChannelCountError(f"{path}: expected mono, found {channels} channels")
    if rate == 0 or block_align != dtype.itemsize:
        raise CorruptHeader(f"{path}: inconsistent fmt chunk")

    n = len(payload) // dtype.itemsize
    if n == 0:
        raise CorruptHeader(f"{path}: data chunk holds no samples")
    raw = np.frombuffer(payload, dtype=dtype, count=n)
    if dtype.kind == "i":
        samples = raw.astype(np.float64) / PCM16_SCALE
    else:
        samples = raw.astype(np.float64)
    return AudioBuffer(samples, rate)


def quantize_pcm16(samples: np.ndarray) -> np.ndarray:
    """Round half away from zero onto the int16 grid, clamping out-of-range values."""
    scaled = np.asarray(samples, dtype=np.float64) * PCM16_SCALE
    rounded = np.sign(scaled) * np.floor(np.abs(scaled) + 0.5)
    return np.clip(rounded, -32768, 32767).astype("<i2")


def write_wav(path: str | os.PathLike, buffer: AudioBuffer, encoding: str = "float32") -> None:
    """Write ``buffer`` with only a fmt and a data chunk.

    float32 round trips exactly for samples representable in single precision;
    pcm16 is within 1/32768 for samples in [-1, 32767/32768].
    """
    if not isinstance(buffer, AudioBuffer):
        raise InvalidBuffer("write_wav expects an AudioBuffer")
    if not np.all(np.isfinite(buffer.samples)):
        raise InvalidBuffer("samples contain NaN or Inf")
    if encoding == "pcm16":
        tag, payload = WAVE_FORMAT_PCM, quantize_pcm16(buffer.samples).tobytes()
        width = 2
    elif encoding == "float32":
        tag, payload = WAVE_FORMAT_IEEE_FLOAT, buffer.samples.astype("<f4").tobytes()
        width = 4
    else:
        raise ValueError(f"unknown encoding {encoding!r}; choose from {ENCODINGS}")

    rate = buffer.sample_rate
    fmt = struct.pack("<HHIIHH", tag, 1, rate, rate * width, width, 8 * width)
    pad = b"\x00" if len(payload) & 1 else b""
    riff_size = 4 + (8 + len(fmt)) + (8 + len(payload) + len(pad))
    with open(path, "wb") as fh:
        fh.write(struct.pack("<4sI4s", b"RIFF", riff_size, b"WAVE"))
        fh.write(struct.pack("<4sI", b"fmt ", len(fmt)) + fmt)
        fh.write(struct.pack("<4sI", b"data", len(payload)) + payload + pad)
