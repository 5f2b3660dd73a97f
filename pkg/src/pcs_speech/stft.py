"""Short-time Fourier analysis and weighted overlap-add synthesis.

Synthesis divides by the overlap-added squared window, so ``istft(stft(x))``
reconstructs ``x`` to rounding error for any window/hop pair whose
normalisation never vanishes inside the signal. The stricter condition that
the squared window itself overlap-adds to a constant is only enforced when a
caller asks for it with ``strict=True``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .audio_io import AudioBuffer
from .errors import DegenerateNormalization, EmptySignal, InvalidConfig, ShapeMismatch

WINDOWS = ("hann", "hamming", "rectangular")
COLA_TOLERANCE = 1e-10
NORM_FLOOR = 1e-10


def make_window(name: str, size: int) -> np.ndarray:
    """Periodic (DFT-even) analysis window."""
    n = np.arange(size)
    if name == "hann":
        return 0.5 - 0.5 * np.cos(2.0 * np.pi * n / size)
    if name == "hamming":
        return 0.54 - 0.46 * np.cos(2.0 * np.pi * n / size)
    if name == "rectangular":
        return np.ones(size)
    raise InvalidConfig(f"unknown window {name!r}; choose from {WINDOWS}")


@dataclass(frozen=True)
class StftConfig:
    fft_size: int = 512
    hop_size: int = 256
    window: str = "hann"
    center_padding: bool = True

    def __post_init__(self):
        if not isinstance(self.fft_size, (int, np.integer)) or self.fft_size <= 0 or self.fft_size % 2:
            raise InvalidConfig(f"fft_size must be a positive even integer, got {self.fft_size!r}")
        if not isinstance(self.hop_size, (int, np.integer)) or not 0 < self.hop_size <= self.fft_size:
            raise InvalidConfig(f"hop_size must be in [1, fft_size], got {self.hop_size!r}")
        if self.window not in WINDOWS:
            raise InvalidConfig(f"unknown window {self.window!r}; choose from {WINDOWS}")

    @property
    def n_bins(self) -> int:
        return self.fft_size // 2 + 1

    @cached_property
    def window_array(self) -> np.ndarray:
        w = make_window(self.window, self.fft_size)
        w.flags.writeable = False
        return w

    def bin_frequencies(self, sample_rate: float) -> np.ndarray:
        return np.arange(self.n_bins) * (sample_rate / self.fft_size)

    def cola_deviation(self) -> float:
        """Relative peak-to-peak ripple of the steady-state overlap-added squared window."""
        w2 = self.window_array ** 2
        hop = self.hop_size
        n_shift = -(-self.fft_size // hop)
        padded = np.zeros(n_shift * hop)
        padded[: self.fft_size] = w2
        ola = padded.reshape(n_shift, hop).sum(axis=0)
        mean = ola.mean()
        if mean <= 0:
            return float("inf")
        return float((ola.max() - ola.min()) / mean)

    def check_cola(self) -> None:
        dev = self.cola_deviation()
        if dev > COLA_TOLERANCE:
            raise InvalidConfig(
                f"squared {self.window} window with fft {self.fft_size} / hop {self.hop_size} "
                f"is not constant-overlap-add (relative ripple {dev:.3g})"
            )


@dataclass(frozen=True, eq=False)
class Spectrogram:
    """Complex STFT frames, shape ``(n_frames, n_bins)``."""

    frames: np.ndarray
    config: StftConfig
    sample_rate: int
    original_length: int

    def __post_init__(self):
        frames = np.array(self.frames, dtype=np.complex128, copy=True)
        if frames.ndim != 2 or frames.shape[1] != self.config.n_bins:
            raise ShapeMismatch(
                f"frames must have shape (n_frames, {self.config.n_bins}), got {frames.shape}"
            )
        if not np.all(np.isfinite(frames)):
            raise ValueError("spectrogram contains non-finite values")
        frames.flags.writeable = False
        object.__setattr__(self, "frames", frames)

    @property
    def shape(self) -> tuple[int, int]:
        return self.frames.shape

    def with_frames(self, frames) -> "Spectrogram":
        return Spectrogram(frames, self.config, self.sample_rate, self.original_length)


@dataclass(frozen=True, eq=False)
class MagnitudePhase:
    magnitude: np.ndarray
    phase: np.ndarray


def _n_frames(padded_length: int, config: StftConfig) -> int:
    excess = max(padded_length - config.fft_size, 0)
    return 1 + -(-excess // config.hop_size)


def _overlap_add(segments: np.ndarray, hop: int) -> np.ndarray:
    n_frames, size = segments.shape
    stripes = -(-size // hop)
    acc = np.zeros((n_frames + stripes, hop))
    for j in range(stripes):
        lo, hi = j * hop, min((j + 1) * hop, size)
        acc[j:j + n_frames, : hi - lo] += segments[:, lo:hi]
    return acc.ravel()[: (n_frames - 1) * hop + size]


def stft(buffer: AudioBuffer, config: StftConfig | None = None, strict: bool = False) -> Spectrogram:
    """Windowed real FFT of ``buffer`` on hops of ``config.hop_size``.

    With centre padding, frame ``t`` is centred on sample ``t * hop`` and the
    signal is reflection-padded by ``fft_size // 2`` at both ends. The tail is
    zero-padded so the last frame is complete.
    """
    config = config or StftConfig()
    if strict:
        config.check_cola()
    x = buffer.samples
    if x.shape[0] == 0:
        raise EmptySignal("cannot analyse an empty signal")
    size, hop = config.fft_size, config.hop_size
    if config.center_padding:
        x = np.pad(x, size // 2, mode="reflect")
    n_frames = _n_frames(x.shape[0], config)
    total = (n_frames - 1) * hop + size
    x = np.pad(x, (0, total - x.shape[0]))
    segments = sliding_window_view(x, size)[::hop] * config.window_array
    frames = np.fft.rfft(segments, axis=1)
    return Spectrogram(frames, config, buffer.sample_rate, buffer.samples.shape[0])


def istft(spec: Spectrogram, strict: bool = False) -> AudioBuffer:
    """Weighted overlap-add inverse of :func:`stft`, truncated to the original length.

    Raises:
        DegenerateNormalization: the squared-window sum falls below 1e-10 at a
            sample that is at least one FFT length away from both padded edges.
    """
    config = spec.config
    if strict:
        config.check_cola()
    size, hop = config.fft_size, config.hop_size
    w = config.window_array
    n_frames = spec.frames.shape[0]

    segments = np.fft.irfft(spec.frames, n=size, axis=1) * w
    y = _overlap_add(segments, hop)
    norm = _overlap_add(np.broadcast_to(w * w, (n_frames, size)), hop)

    weak = norm < NORM_FLOOR
    interior = np.zeros_like(weak)
    interior[size: max(norm.shape[0] - size, size)] = True
    if np.any(weak & interior):
        raise DegenerateNormalization(
            f"overlap-add normalisation vanishes for window {config.window}, "
            f"fft {size}, hop {hop}"
        )
    out = np.divide(y, norm, out=np.zeros_like(y), where=~weak)

    start = size // 2 if config.center_padding else 0
    out = out[start:start + spec.original_length]
    if out.shape[0] < spec.original_length:
        out = np.pad(out, (0, spec.original_length - out.shape[0]))
    return AudioBuffer(out, spec.sample_rate)


def split(spec: Spectrogram) -> MagnitudePhase:
    """Magnitude and phase in (-pi, pi]; the phase of an exact zero is 0."""
    magnitude = np.abs(spec.frames)
    phase = np.angle(spec.frames)
    phase[phase <= -np.pi] = np.pi
    return MagnitudePhase(magnitude, phase)


def recombine(mp: MagnitudePhase, like: Spectrogram) -> Spectrogram:
    """Rebuild a spectrogram from ``mp`` carrying over the metadata of ``like``."""
    mag = np.asarray(mp.magnitude, dtype=np.float64)
    phase = np.asarray(mp.phase, dtype=np.float64)
    if mag.shape != phase.shape or mag.shape != like.frames.shape:
        raise ShapeMismatch(
            f"magnitude {mag.shape} / phase {phase.shape} do not match spectrogram {like.frames.shape}"
        )
    return like.with_frames(mag * np.exp(1j * phase))
