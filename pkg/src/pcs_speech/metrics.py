"""Objective before/after measures: segmental SNR and log-spectral distance."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audio_io import AudioBuffer
from .errors import AllFramesSilent, InvalidRange, LengthMismatch
from .stft import StftConfig, stft

SEGSNR_MIN_DB = -10.0
SEGSNR_MAX_DB = 35.0
SILENCE_ENERGY = 1e-12
LSD_EPS = 1e-8


@dataclass(frozen=True)
class EnhancementReport:
    file_id: str
    seg_snr_db: float
    lsd_db: float
    n_frames_scored: int


def _check_pair(reference: AudioBuffer, test: AudioBuffer) -> None:
    if len(reference) != len(test) or reference.sample_rate != test.sample_rate:
        raise LengthMismatch(
            f"reference ({len(reference)} @ {reference.sample_rate} Hz) and test "
            f"({len(test)} @ {test.sample_rate} Hz) are not aligned"
        )


def _segsnr_frames(reference: AudioBuffer, test: AudioBuffer, frame_len: int, hop: int) -> np.ndarray:
    _check_pair(reference, test)
    if frame_len < 32 or hop < 1:
        raise InvalidRange(f"frame_len must be >= 32 and hop >= 1, got {frame_len}, {hop}")
    ref, err = reference.samples, reference.samples - test.samples
    n = len(ref)
    starts = np.arange(0, max(n - frame_len, 0) + 1, hop)
    idx = starts[:, None] + np.arange(min(frame_len, n))
    sig_e = np.sum(ref[idx] ** 2, axis=1)
    err_e = np.sum(err[idx] ** 2, axis=1)
    keep = sig_e >= SILENCE_ENERGY
    if not np.any(keep):
        raise AllFramesSilent("every reference frame is below the silence threshold")
    with np.errstate(divide="ignore"):
        snr = 10.0 * np.log10(sig_e[keep] / err_e[keep])
    return np.clip(snr, SEGSNR_MIN_DB, SEGSNR_MAX_DB)


def segmental_snr(reference: AudioBuffer, test: AudioBuffer, frame_len: int = 512, hop: int = 256) -> float:
    """Mean per-frame SNR in dB, each frame clamped to [-10, 35].

    Frames whose reference energy is below 1e-12 are skipped. A signal shorter
    than ``frame_len`` is scored as one frame.
    """
    return float(np.mean(_segsnr_frames(reference, test, frame_len, hop)))


def log_spectral_distance(reference: AudioBuffer, test: AudioBuffer, config: StftConfig | None = None) -> float:
    """Frame-averaged RMS of ``20 log10((|R| + eps) / (|T| + eps))`` over bins."""
    _check_pair(reference, test)
    config = config or StftConfig()
    r = np.abs(stft(reference, config).frames)
    t = np.abs(stft(test, config).frames)
    diff = 20.0 * np.log10((r + LSD_EPS) / (t + LSD_EPS))
    return float(np.mean(np.sqrt(np.mean(diff ** 2, axis=1))))


def evaluate(
    reference: AudioBuffer,
    test: AudioBuffer,
    config: StftConfig | None = None,
    file_id: str = "",
    frame_len: int = 512,
    hop: int = 256,
) -> EnhancementReport:
    frames = _segsnr_frames(reference, test, frame_len, hop)
    return EnhancementReport(
        file_id=file_id,
        seg_snr_db=float(np.mean(frames)),
        lsd_db=log_spectral_distance(reference, test, config),
        n_frames_scored=int(frames.shape[0]),
    )
