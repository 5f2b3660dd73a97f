"""PCSF feature files.

Layout, all little-endian::

    b"PCSF"  u32 version(=1)  u32 n_frames  u32 n_bins
    f64 sample_rate  u32 fft_size  u32 hop_size
    n_frames * n_bins float32, frame-major

No padding and no checksum.
"""
from __future__ import annotations

import os
import struct
from dataclasses import dataclass

import numpy as np

from .errors import CorruptHeader

MAGIC = b"PCSF"
VERSION = 1
HEADER = struct.Struct("<4sIIIdII")


@dataclass(eq=False)
class FeatureMatrix:
    values: np.ndarray
    sample_rate: float
    fft_size: int
    hop_size: int

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype="<f4")
        if self.values.ndim != 2:
            raise ValueError(f"feature matrix must be 2-D, got shape {self.values.shape}")


def write_pcsf(path: str | os.PathLike, features: FeatureMatrix) -> None:
    n_frames, n_bins = features.values.shape
    header = HEADER.pack(
        MAGIC, VERSION, n_frames, n_bins,
        float(features.sample_rate), features.fft_size, features.hop_size,
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(features.values, dtype="<f4").tobytes())


def read_pcsf(path: str | os.PathLike) -> FeatureMatrix:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < HEADER.size:
        raise CorruptHeader(f"{path}: shorter than the PCSF header")
    magic, version, n_frames, n_bins, rate, fft_size, hop = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise CorruptHeader(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise CorruptHeader(f"{path}: unsupported PCSF version {version}")
    expected = HEADER.size + 4 * n_frames * n_bins
    if len(data) != expected:
        raise CorruptHeader(f"{path}: expected {expected} bytes, found {len(data)}")
    values = np.frombuffer(data, dtype="<f4", offset=HEADER.size).reshape(n_frames, n_bins)
    return FeatureMatrix(values.copy(), rate, fft_size, hop)
