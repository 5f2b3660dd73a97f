"""Perceptual contrast stretching of speech spectra.

Each frequency band gets its own exponent, linearly rescaled from the
critical-band importance weights so that the most important band (400-4400 Hz)
receives the full ``gamma_max`` and a zero-importance band receives
``gamma_min``. Stretching acts on linear magnitude ``M`` as

    Y = expm1(gamma * log1p(M))

which is the same as multiplying log1p features by ``gamma``.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .audio_io import AudioBuffer
from .errors import DegenerateTable, InvalidRange, LengthMismatch, NegativeMagnitude, ShapeMismatch
from .features import FeatureMatrix, write_pcsf
from .stft import Spectrogram, StftConfig, istft, recombine, split, stft

DEFAULT_GAMMA = 1.4
DEFAULT_GAMMA_MIN = 1.0


@dataclass(frozen=True)
class BandImportanceTable:
    """Contiguous ``(f_low, f_high, bif)`` rows in Hz."""

    rows: tuple[tuple[float, float, float], ...]

    def __post_init__(self):
        rows = tuple((float(lo), float(hi), float(w)) for lo, hi, w in self.rows)
        if not rows:
            raise DegenerateTable("band importance table is empty")
        for lo, hi, w in rows:
            if not lo < hi:
                raise InvalidRange(f"band [{lo}, {hi}) is empty")
            if not 0.0 <= w <= 1.0:
                raise InvalidRange(f"band importance {w} outside [0, 1]")
        for (_, hi, _), (lo, _, _) in zip(rows, rows[1:]):
            if hi != lo:
                raise InvalidRange(f"bands are not contiguous at {hi} / {lo} Hz")
        object.__setattr__(self, "rows", rows)

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for _, _, w in self.rows])

    @property
    def edges(self) -> np.ndarray:
        return np.array([self.rows[0][0]] + [hi for _, hi, _ in self.rows])

    def __len__(self) -> int:
        return len(self.rows)


# Critical band importance, ANSI S3.5 style grouping.
DEFAULT_BIF_TABLE = BandImportanceTable((
    (0, 100, 0.000),
    (100, 200, 0.010),
    (200, 300, 0.026),
    (300, 400, 0.041),
    (400, 4400, 0.057),
    (4400, 5300, 0.046),
    (5300, 6400, 0.034),
    (6400, 7700, 0.023),
    (7700, 9500, 0.011),
))


def rescale_bif(
    table: BandImportanceTable = DEFAULT_BIF_TABLE,
    gamma_max: float = DEFAULT_GAMMA,
    gamma_min: float = DEFAULT_GAMMA_MIN,
) -> np.ndarray:
    """Map band importances linearly onto exponents, one per table row.

    ``gamma[k] = (gamma_max - gamma_min) / (bif_max - bif_min) * bif[k] + gamma_min``

    Note the offset is ``gamma_min`` alone, not ``gamma_min - bif_min * slope``;
    with the default table ``bif_min`` is 0 and the two readings coincide.
    """
    if not gamma_max > gamma_min > 0:
        raise InvalidRange(f"need gamma_max > gamma_min > 0, got {gamma_max}, {gamma_min}")
    bif = table.weights
    spread = bif.max() - bif.min()
    if spread <= 0:
        raise DegenerateTable("all band importances are equal; rescaling is undefined")
    return (gamma_max - gamma_min) / spread * bif + gamma_min


@dataclass(frozen=True, eq=False)
class GammaSchedule:
    """Per-bin exponents for one (sample rate, FFT size) pair."""

    gamma_per_bin: np.ndarray
    fft_size: int
    sample_rate: float
    kind: str = "pcs"

    def __post_init__(self):
        g = np.array(self.gamma_per_bin, dtype=np.float64, copy=True)
        if g.ndim != 1 or g.shape[0] != self.fft_size // 2 + 1:
            raise ShapeMismatch(f"schedule needs {self.fft_size // 2 + 1} bins, got shape {g.shape}")
        if np.any(g < 0) or not np.all(np.isfinite(g)):
            raise InvalidRange("gamma values must be finite and non-negative")
        g.flags.writeable = False
        object.__setattr__(self, "gamma_per_bin", g)

    @property
    def n_bins(self) -> int:
        return self.gamma_per_bin.shape[0]

    @classmethod
    def fixed(cls, gamma: float, config: StftConfig, sample_rate: float) -> "GammaSchedule":
        if not gamma > 0:
            raise InvalidRange(f"gamma must be positive, got {gamma}")
        g = np.full(config.n_bins, float(gamma))
        return cls(g, config.fft_size, sample_rate, kind=f"fixed({gamma:g})")


def build_schedule(
    table: BandImportanceTable = DEFAULT_BIF_TABLE,
    config: StftConfig | None = None,
    sample_rate: float = 16000,
    gamma_max: float = DEFAULT_GAMMA,
    gamma_min: float = DEFAULT_GAMMA_MIN,
) -> GammaSchedule:
    """Assign each FFT bin the exponent of the band holding its centre frequency.

    Bands are half-open ``[f_low, f_high)``. Bins outside every band get 1.0,
    i.e. they pass through unchanged.
    """
    config = config or StftConfig()
    if not sample_rate > 0:
        raise InvalidRange(f"sample_rate must be positive, got {sample_rate}")
    band_gamma = rescale_bif(table, gamma_max, gamma_min)
    freqs = config.bin_frequencies(sample_rate)
    edges = table.edges
    idx = np.searchsorted(edges, freqs, side="right") - 1
    inside = (idx >= 0) & (idx < len(table))
    gamma = np.ones(config.n_bins)
    gamma[inside] = band_gamma[idx[inside]]
    return GammaSchedule(gamma, config.fft_size, sample_rate, kind="pcs")


def stretch_magnitude(mag: np.ndarray, schedule: GammaSchedule | np.ndarray) -> np.ndarray:
    """Contrast-stretch a ``(n_frames, n_bins)`` magnitude matrix bin by bin."""
    gamma = schedule.gamma_per_bin if isinstance(schedule, GammaSchedule) else np.asarray(schedule, float)
    mag = np.asarray(mag, dtype=np.float64)
    if mag.shape[-1] != gamma.shape[-1]:
        raise ShapeMismatch(f"magnitude has {mag.shape[-1]} bins, schedule has {gamma.shape[-1]}")
    if np.any(mag < 0):
        raise NegativeMagnitude("magnitudes must be non-negative")
    stretched = np.expm1(gamma * np.log1p(mag))
    # Unit exponent must be an exact pass-through, which expm1(log1p(.)) is not.
    return np.where(gamma == 1.0, mag, stretched)


MagnitudeTransform = Callable[[np.ndarray], np.ndarray]


def process_magnitude(spec: Spectrogram, transform: MagnitudeTransform) -> Spectrogram:
    """Apply ``transform`` to the magnitude, keeping the phase of ``spec``."""
    mp = split(spec)
    new_mag = transform(mp.magnitude)
    return recombine(type(mp)(new_mag, mp.phase), spec)


def pcs_spectrogram(spec: Spectrogram, schedule: GammaSchedule) -> Spectrogram:
    return process_magnitude(spec, lambda m: stretch_magnitude(m, schedule))


def match_peak(out: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """Scale ``out`` so its peak equals that of ``reference``; all-zero output is left alone."""
    peak_out = np.max(np.abs(out)) if out.size else 0.0
    if peak_out == 0:
        return out
    return out * (np.max(np.abs(reference)) / peak_out)


def pp_process(noisy: AudioBuffer, config: StftConfig, transform: MagnitudeTransform) -> AudioBuffer:
    """Generic magnitude-domain post-processor with peak renormalisation."""
    spec = stft(noisy, config)
    out = istft(process_magnitude(spec, transform)).samples
    return noisy.with_samples(match_peak(out, noisy.samples))


def pp_pcs(noisy: AudioBuffer, config: StftConfig | None = None, schedule: GammaSchedule | None = None) -> AudioBuffer:
    """PCS as a waveform post-processor.

    The stretched magnitude is recombined with the phase of ``noisy`` itself,
    whatever system produced it, and the result is scaled back to the input
    peak. Output length equals input length.
    """
    config = config or StftConfig()
    if schedule is None:
        schedule = build_schedule(config=config, sample_rate=noisy.sample_rate)
    if schedule.n_bins != config.n_bins:
        raise ShapeMismatch(f"schedule has {schedule.n_bins} bins, STFT produces {config.n_bins}")
    return pp_process(noisy, config, lambda m: stretch_magnitude(m, schedule))


def log1p_features(buffer: AudioBuffer, config: StftConfig) -> np.ndarray:
    return np.log1p(np.abs(stft(buffer, config).frames))


def export_training_targets(
    clean: AudioBuffer,
    noisy: AudioBuffer,
    config: StftConfig,
    schedule: GammaSchedule,
    out_dir: str | os.PathLike,
    stem: str = "features",
) -> tuple[Path, Path]:
    """Write the input/target log1p feature pair for training a PCS model.

    Writes ``<stem>.in.pcsf`` holding ``log1p|STFT(noisy)|`` and
    ``<stem>.tgt.pcsf`` holding ``gamma[b] * log1p|STFT(clean)|``; the phase is
    not part of either stream.
    """
    if len(clean) != len(noisy) or clean.sample_rate != noisy.sample_rate:
        raise LengthMismatch(
            f"clean ({len(clean)} @ {clean.sample_rate} Hz) and noisy "
            f"({len(noisy)} @ {noisy.sample_rate} Hz) differ"
        )
    if schedule.n_bins != config.n_bins:
        raise ShapeMismatch(f"schedule has {schedule.n_bins} bins, STFT produces {config.n_bins}")
    inputs = log1p_features(noisy, config)
    target = schedule.gamma_per_bin * log1p_features(clean, config)

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = (out_dir / f"{stem}.in.pcsf", out_dir / f"{stem}.tgt.pcsf")
    for path, values in zip(paths, (inputs, target)):
        write_pcsf(path, FeatureMatrix(values, noisy.sample_rate, config.fft_size, config.hop_size))
    return paths


def fixed_gamma_grid(lo: float = 0.5, hi: float = 2.0, step: float = 0.1) -> Sequence[float]:
    """Inclusive grid ``lo, lo+step, ..., hi``; 0.5-2.0 by 0.1 gives 16 values."""
    if step <= 0 or hi < lo or lo <= 0:
        raise InvalidRange(f"invalid sweep range lo={lo} hi={hi} step={step}")
    n = int(np.floor((hi - lo) / step + 1e-9)) + 1
    return [round(lo + i * step, 10) for i in range(n)]
