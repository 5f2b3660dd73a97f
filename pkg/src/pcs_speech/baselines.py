"""Conventional enhancement and contrast-enhancement baselines.

``wiener_enhance`` and ``spectral_subtraction`` are waveform-to-waveform and
can be chained ahead of :func:`pcs_speech.pcs.pp_pcs`. The three feature
methods (min-max, histogram equalisation, adaptive equalisation) act on a
``(n_frames, n_bins)`` magnitude matrix and can stand in for
``stretch_magnitude`` via :func:`pcs_speech.pcs.pp_process`.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audio_io import AudioBuffer
from .errors import InvalidRange, NegativeMagnitude, SignalTooShort
from .stft import StftConfig, istft, recombine, split, stft

# Lower bound on the noise power estimate; keeps posterior SNR finite for a
# digitally silent noise segment.
NOISE_POWER_FLOOR = 1e-12


@dataclass(frozen=True)
class WienerConfig:
    noise_estimation_frames: int = 6
    smoothing_alpha: float = 0.98
    gain_floor: float = 0.1

    def __post_init__(self):
        if self.noise_estimation_frames < 1:
            raise InvalidRange("noise_estimation_frames must be >= 1")
        if not 0 < self.smoothing_alpha < 1:
            raise InvalidRange("smoothing_alpha must lie in (0, 1)")
        if not 0 < self.gain_floor < 1:
            raise InvalidRange("gain_floor must lie in (0, 1)")


def _require_length(buffer: AudioBuffer, config: StftConfig, n_frames: int) -> None:
    need = n_frames * config.hop_size + config.fft_size
    if len(buffer) < need:
        raise SignalTooShort(
            f"need at least {need} samples to estimate noise from {n_frames} frames, got {len(buffer)}"
        )


def decision_directed_gain(power: np.ndarray, noise_power: np.ndarray, alpha: float, floor: float) -> np.ndarray:
    """Wiener gains from decision-directed a priori SNR tracking.

    ``power`` is ``|X|^2`` with shape ``(n_frames, n_bins)``. For frame t,

        xi_t = alpha * G_{t-1}^2 * snr_post_{t-1} + (1 - alpha) * max(snr_post_t - 1, 0)
        G_t  = max(xi_t / (1 + xi_t), floor)

    The first frame uses the maximum-likelihood estimate ``max(snr_post_0 - 1, 0)``.
    """
    noise_power = np.maximum(noise_power, NOISE_POWER_FLOOR)
    post = power / noise_power
    ml = np.maximum(post - 1.0, 0.0)
    gains = np.empty_like(post)
    prev = ml[0]
    for t in range(post.shape[0]):
        xi = alpha * prev + (1.0 - alpha) * ml[t]
        g = np.maximum(xi / (1.0 + xi), floor)
        gains[t] = g
        prev = g * g * post[t]
    return gains


def wiener_enhance(noisy: AudioBuffer, config: StftConfig | None = None, wcfg: WienerConfig | None = None) -> AudioBuffer:
    """Decision-directed Wiener filter with a noise PSD from the leading frames."""
    config = config or StftConfig()
    wcfg = wcfg or WienerConfig()
    _require_length(noisy, config, wcfg.noise_estimation_frames)
    spec = stft(noisy, config)
    mp = split(spec)
    power = mp.magnitude ** 2
    noise_power = power[: wcfg.noise_estimation_frames].mean(axis=0)
    gains = decision_directed_gain(power, noise_power, wcfg.smoothing_alpha, wcfg.gain_floor)
    out = recombine(type(mp)(gains * mp.magnitude, mp.phase), spec)
    return istft(out)


def subtract_magnitude(mag: np.ndarray, noise_mag: np.ndarray, oversubtraction: float = 1.0, floor: float = 0.01) -> np.ndarray:
    """``max(|X| - oversubtraction * N, floor * |X|)`` elementwise."""
    return np.maximum(mag - oversubtraction * noise_mag, floor * mag)


def spectral_subtraction(
    noisy: AudioBuffer,
    config: StftConfig | None = None,
    oversubtraction: float = 1.0,
    floor: float = 0.01,
    noise_frames: int = 6,
    noise_mag: np.ndarray | None = None,
) -> AudioBuffer:
    """Magnitude spectral subtraction keeping the noisy phase.

    The noise magnitude is the mean over the first ``noise_frames`` frames
    unless ``noise_mag`` (one value per bin) is given.
    """
    config = config or StftConfig()
    if oversubtraction < 1:
        raise InvalidRange("oversubtraction must be >= 1")
    if not 0 < floor < 1:
        raise InvalidRange("floor must lie in (0, 1)")
    if noise_mag is None:
        _require_length(noisy, config, noise_frames)
    spec = stft(noisy, config)
    mp = split(spec)
    if noise_mag is None:
        noise_mag = mp.magnitude[:noise_frames].mean(axis=0)
    enhanced = subtract_magnitude(mp.magnitude, np.asarray(noise_mag, float), oversubtraction, floor)
    return istft(recombine(type(mp)(enhanced, mp.phase), spec))


def _check_magnitude(mag) -> np.ndarray:
    mag = np.asarray(mag, dtype=np.float64)
    if np.any(mag < 0):
        raise NegativeMagnitude("magnitudes must be non-negative")
    return mag


def minmax_normalize(mag: np.ndarray) -> np.ndarray:
    """Scale the whole matrix onto [0, 1]; a constant matrix maps to zeros."""
    mag = _check_magnitude(mag)
    lo, hi = mag.min(), mag.max()
    if hi == lo:
        return np.zeros_like(mag)
    return (mag - lo) / (hi - lo)


def histogram_equalize(mag: np.ndarray, n_levels: int = 256) -> np.ndarray:
    """Equalise each frequency bin along time.

    Every value is mapped through its bin's empirical CDF (midpoint rank for
    ties) and placed back on the bin's original [min, max]. Constant bins pass
    through. The CDF is rank-exact, so ``n_levels`` only sets the histogram
    grid and does not change the result.
    """
    mag = _check_magnitude(mag)
    if n_levels < 2:
        raise InvalidRange("n_levels must be >= 2")
    out = mag.copy()
    lo, hi = mag.min(axis=0), mag.max(axis=0)
    for b in np.flatnonzero(hi > lo):
        out[:, b] = _tile_map(mag[:, b], mag[:, b], lo[b], hi[b], n_levels, np.inf)
    return out


def adaptive_equalize(mag: np.ndarray, tile_frames: int = 64, clip_limit: float = 2.0, n_levels: int = 64) -> np.ndarray:
    """Contrast-limited adaptive equalisation along time, bin by bin.

    Tiles of ``tile_frames`` frames overlap by half. Each tile builds its own
    clipped-histogram mapping onto the bin's global [min, max]; a frame's
    output blends the mappings of the two nearest tile centres linearly.
    ``tile_frames`` larger than the utterance falls back to one tile, which
    with ``clip_limit=inf`` is :func:`histogram_equalize`.

    Because neighbouring tiles use different mappings, value order is only
    guaranteed within a single tile.
    """
    mag = _check_magnitude(mag)
    if tile_frames < 1:
        raise InvalidRange("tile_frames must be >= 1")
    if not clip_limit > 0:
        raise InvalidRange("clip_limit must be positive")
    if n_levels < 2:
        raise InvalidRange("n_levels must be >= 2")
    n_frames = mag.shape[0]
    tile = min(tile_frames, n_frames)
    step = max(tile // 2, 1)
    starts = list(range(0, max(n_frames - tile, 0) + 1, step))
    if starts[-1] + tile < n_frames:
        starts.append(n_frames - tile)
    centres = np.array([s + (tile - 1) / 2.0 for s in starts])

    # Frame t blends tile k (weight 1 - frac) and tile k + 1 (weight frac).
    t = np.arange(n_frames, dtype=np.float64)
    pos = np.interp(t, centres, np.arange(len(centres), dtype=np.float64))
    k = np.minimum(np.floor(pos).astype(np.int64), len(centres) - 1)
    frac = pos - k
    k_next = np.minimum(k + 1, len(centres) - 1)

    out = mag.copy()
    lo, hi = mag.min(axis=0), mag.max(axis=0)
    for b in np.flatnonzero(hi > lo):
        col = mag[:, b]
        mapped = np.empty((len(starts), n_frames))
        for i, s in enumerate(starts):
            seg = col[s:s + tile]
            # Evaluate tile i's mapping at every frame by ranking against the tile.
            mapped[i] = _tile_map(seg, col, lo[b], hi[b], n_levels, clip_limit)
        out[:, b] = (1.0 - frac) * mapped[k, np.arange(n_frames)] + frac * mapped[k_next, np.arange(n_frames)]
    return out


def _tile_map(tile: np.ndarray, query: np.ndarray, lo: float, hi: float, n_levels: int, clip_limit: float) -> np.ndarray:
    """Evaluate the clipped-histogram mapping built from ``tile`` at ``query`` values.

    ``tile`` is quantised into ``n_levels`` equal-width levels on [lo, hi].
    Each level's count is clipped at ``clip_limit`` times the uniform height
    and the excess is spread evenly over all levels. Inside a level the mass
    is shared out by midpoint rank, so without clipping the CDF is exactly
    ``(#less + #equal / 2) / n``.
    """
    n = tile.shape[0]
    srt = np.sort(tile)
    q_level = np.clip(((query - lo) / (hi - lo) * n_levels).astype(np.int64), 0, n_levels - 1)
    t_level = np.clip(((srt - lo) / (hi - lo) * n_levels).astype(np.int64), 0, n_levels - 1)
    counts = np.bincount(t_level, minlength=n_levels).astype(np.float64)
    cap = clip_limit * n / n_levels
    if np.isfinite(cap):
        clipped = np.minimum(counts, cap)
        mass = clipped + (n - clipped.sum()) / n_levels
    else:
        mass = counts
    below = np.concatenate(([0.0], np.cumsum(mass)[:-1]))

    less = np.searchsorted(srt, query, side="left")
    equal = np.searchsorted(srt, query, side="right") - less
    level_start = np.searchsorted(t_level, q_level, side="left")
    level_end = np.searchsorted(t_level, q_level, side="right")
    in_level = np.clip(less, level_start, level_end) - level_start + 0.5 * equal
    cnt = counts[q_level]
    share = np.divide(mass[q_level], cnt, out=np.zeros_like(cnt), where=cnt > 0)
    # A query landing in a level the tile never visited sits at that level's midpoint mass.
    empty_part = np.where(cnt > 0, 0.0, 0.5 * mass[q_level])
    cdf = (below[q_level] + share * in_level + empty_part) / n
    return lo + np.clip(cdf, 0.0, 1.0) * (hi - lo)
