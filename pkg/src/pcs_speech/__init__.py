"""Perceptual contrast stretching (PCS) for speech enhancement."""

__version__ = "0.1.0"

from .audio_io import AudioBuffer, read_wav, write_wav
from .baselines import (
    WienerConfig,
    adaptive_equalize,
    histogram_equalize,
    minmax_normalize,
    spectral_subtraction,
    wiener_enhance,
)
from .features import FeatureMatrix, read_pcsf, write_pcsf
from .metrics import EnhancementReport, log_spectral_distance, segmental_snr
from .pcs import (
    DEFAULT_BIF_TABLE,
    BandImportanceTable,
    GammaSchedule,
    build_schedule,
    export_training_targets,
    pp_pcs,
    rescale_bif,
    stretch_magnitude,
)
from .stft import MagnitudePhase, Spectrogram, StftConfig, istft, recombine, split, stft
