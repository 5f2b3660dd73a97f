import math

import numpy as np
import pytest

from pcs_speech import AudioBuffer, StftConfig, log_spectral_distance, segmental_snr
from pcs_speech.errors import AllFramesSilent, InvalidRange, LengthMismatch
from pcs_speech.metrics import evaluate

from oracles import lsd_loop, segsnr_loop


def buf(x, rate=16000):
    return AudioBuffer(x, rate)


class TestSegmentalSnr:
    def test_identical_hits_ceiling(self, rng):
        x = buf(rng.standard_normal(4000))
        assert segmental_snr(x, x) == 35.0

    def test_negated(self, rng):
        x = rng.standard_normal(4096)
        # error = 2 * ref, so every frame scores 10 log10(1/4)
        assert segmental_snr(buf(x), buf(-x)) == pytest.approx(10 * math.log10(0.25), abs=1e-12)
        assert segmental_snr(buf(x), buf(-x)) == pytest.approx(-6.0206, abs=1e-4)

    def test_zero_test(self, rng):
        x = rng.standard_normal(4096)
        assert segmental_snr(buf(x), buf(np.zeros_like(x))) == pytest.approx(0.0, abs=1e-12)

    def test_floor_clamp(self, rng):
        x = 1e-3 * rng.standard_normal(4096)
        assert segmental_snr(buf(x), buf(x + rng.standard_normal(4096))) == -10.0

    def test_silent_frames_skipped(self, rng):
        x = np.concatenate([np.zeros(2048), rng.standard_normal(2048)])
        y = x.copy()
        y[2048:] *= -1
        assert segmental_snr(buf(x), buf(y), 512, 512) == pytest.approx(10 * math.log10(0.25))

    def test_all_silent(self):
        with pytest.raises(AllFramesSilent):
            segmental_snr(buf(np.zeros(2000)), buf(np.ones(2000)))

    def test_mismatch(self):
        with pytest.raises(LengthMismatch):
            segmental_snr(buf(np.ones(2000)), buf(np.ones(1999)))
        with pytest.raises(LengthMismatch):
            segmental_snr(buf(np.ones(2000)), buf(np.ones(2000), 8000))

    def test_frame_len(self):
        with pytest.raises(InvalidRange):
            segmental_snr(buf(np.ones(2000)), buf(np.ones(2000)), frame_len=16)

    @pytest.mark.parametrize("length,frame,hop", [(3000, 512, 256), (1000, 400, 160), (100, 512, 256), (2048, 32, 32)])
    def test_matches_loop_oracle(self, rng, length, frame, hop):
        x = rng.standard_normal(length)
        y = x + 0.3 * rng.standard_normal(length)
        assert segmental_snr(buf(x), buf(y), frame, hop) == pytest.approx(segsnr_loop(x, y, frame, hop), abs=1e-9)


class TestLsd:
    def test_identical(self, rng):
        x = buf(rng.standard_normal(3000))
        assert log_spectral_distance(x, x) == 0.0

    def test_scaled_by_ten(self, rng):
        x = rng.standard_normal(3000)
        assert log_spectral_distance(buf(x), buf(10 * x)) == pytest.approx(20.0, abs=1e-4)

    @pytest.mark.parametrize("config", [StftConfig(), StftConfig(256, 64, "hamming")])
    def test_matches_loop_oracle(self, rng, config):
        x, y = rng.standard_normal(2000), rng.standard_normal(2000)
        assert log_spectral_distance(buf(x), buf(y), config) == pytest.approx(lsd_loop(x, y, config), abs=1e-9)

    def test_symmetric(self, rng):
        x, y = buf(rng.standard_normal(3000)), buf(rng.standard_normal(3000))
        assert log_spectral_distance(x, y) == pytest.approx(log_spectral_distance(y, x), abs=1e-9)


def test_report(rng):
    x = buf(rng.standard_normal(4000))
    rep = evaluate(x, x, file_id="a.wav")
    assert rep.seg_snr_db == 35.0 and rep.lsd_db == 0.0 and rep.n_frames_scored >= 1
    assert rep.file_id == "a.wav"
