"""Exit criteria. Each test is one criterion; the terminal summary lists PASS/FAIL per line."""
import time

import numpy as np
import pytest

from pcs_speech import (
    AudioBuffer,
    FeatureMatrix,
    GammaSchedule,
    StftConfig,
    WienerConfig,
    build_schedule,
    istft,
    log_spectral_distance,
    pp_pcs,
    read_pcsf,
    read_wav,
    rescale_bif,
    segmental_snr,
    spectral_subtraction,
    split,
    stft,
    stretch_magnitude,
    wiener_enhance,
    write_pcsf,
    write_wav,
)
from pcs_speech.cli import main
from pcs_speech.pcs import pcs_spectrogram

from conftest import tone_plus_noise
from oracles import lsd_loop, segsnr_loop

pytestmark = pytest.mark.acceptance

TABLE_BIF = [0.000, 0.010, 0.026, 0.041, 0.057, 0.046, 0.034, 0.023, 0.011]
PUBLISHED_GAMMA = [1.0000, 1.0702, 1.1825, 1.2877, 1.4000, 1.3228, 1.2386, 1.1614, 1.0772]
PR_CONFIGS = [StftConfig(512, 256, "hann"), StftConfig(512, 128, "hann"), StftConfig(400, 100, "hamming")]


def test_ac01_table1_reproduction():
    gamma = rescale_bif(gamma_max=1.4, gamma_min=1.0)
    for row, expected in enumerate(PUBLISHED_GAMMA):
        assert abs(gamma[row] - expected) <= 1e-3, f"row {row}"
    timings = []
    for _ in range(50):
        t0 = time.perf_counter()
        rescale_bif(gamma_max=1.4, gamma_min=1.0)
        timings.append(time.perf_counter() - t0)
    assert min(timings) < 1e-3


def test_ac02_stft_perfect_reconstruction():
    rng = np.random.default_rng(2)
    t0 = time.perf_counter()
    lengths = np.concatenate([[1, 80000], rng.integers(1, 80001, size=48)])
    for i, length in enumerate(lengths):
        rate = (16000, 48000)[i % 2]
        x = rng.standard_normal(int(length))
        for cfg in PR_CONFIGS:
            y = istft(stft(AudioBuffer(x, rate), cfg))
            assert len(y) == length
            assert np.linalg.norm(y.samples - x) / np.linalg.norm(x) < 1e-6
    assert time.perf_counter() - t0 < 10.0


def test_ac03_stretch_algebraic_identity():
    rng = np.random.default_rng(3)
    m = rng.uniform(0, 100, size=100_000)
    g = rng.uniform(0.5, 2.0, size=100_000)
    t0 = time.perf_counter()
    y = stretch_magnitude(m[None, :], g)[0]
    err = np.abs(np.log1p(y) - g * np.log1p(m))
    assert time.perf_counter() - t0 < 1.0
    assert np.max(err) < 1e-9


def test_ac04_identity_pipeline():
    rng = np.random.default_rng(4)
    cfg = StftConfig()
    t0 = time.perf_counter()
    for _ in range(10):
        x = AudioBuffer(rng.uniform(-0.9, 0.9) * rng.standard_normal(rng.integers(2000, 40000)), 16000)
        y = pp_pcs(x, cfg, GammaSchedule.fixed(1.0, cfg, 16000))
        assert np.linalg.norm(y.samples - x.samples) / np.linalg.norm(x.samples) < 1e-6
    assert time.perf_counter() - t0 < 5.0


def test_ac05_contrast_amplification():
    _, noisy = tone_plus_noise(freq=1000.0, snr_db=5.0, seconds=1.0)
    cfg = StftConfig()
    sched = build_schedule(config=cfg, sample_rate=16000)
    spec = stft(noisy, cfg)
    before = np.log1p(split(spec).magnitude)
    after = np.log1p(split(pcs_spectrogram(spec, sched)).magnitude)

    # Oracle exponents straight from the band table, bin by bin.
    edges = [0, 100, 200, 300, 400, 4400, 5300, 6400, 7700, 9500]
    gamma_oracle = np.ones(cfg.n_bins)
    for b in range(cfg.n_bins):
        f = b * 16000 / cfg.fft_size
        for k, bif in enumerate(TABLE_BIF):
            if edges[k] <= f < edges[k + 1]:
                gamma_oracle[b] = 0.4 / 0.057 * bif + 1.0
    np.testing.assert_allclose(sched.gamma_per_bin, gamma_oracle, rtol=1e-14)

    d_before = before[:, None, :] - before[None, :, :]
    d_after = after[:, None, :] - after[None, :, :]
    assert np.max(np.abs(d_after - gamma_oracle * d_before)) < 1e-9
    in_band = (cfg.bin_frequencies(16000) >= 400) & (cfg.bin_frequencies(16000) < 4400)
    assert np.max(np.abs(d_after[..., in_band] - 1.4 * d_before[..., in_band])) < 1e-9


def test_ac06_sweep_contract(tmp_path, capsys):
    clean_dir, noisy_dir = tmp_path / "clean", tmp_path / "noisy"
    clean_dir.mkdir()
    noisy_dir.mkdir()
    for i in range(3):
        clean, noisy = tone_plus_noise(freq=300.0 * (i + 2), seconds=0.8, seed=10 + i, amp=0.3)
        write_wav(clean_dir / f"f{i}.wav", clean)
        write_wav(noisy_dir / f"f{i}.wav", noisy)

    assert main(["sweep", str(noisy_dir), "--ref", str(clean_dir)]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    rows = [line.split("\t") for line in lines[1:]]
    assert len(rows) == 17
    assert [r[0] for r in rows[:16]] == [f"{0.5 + 0.1 * i:.2f}" for i in range(16)]
    assert rows[16][0] == "pcs"
    unit = next(r for r in rows if r[0] == "1.00")

    assert main(["compare", str(noisy_dir), "--ref", str(clean_dir)]) == 0
    mean = capsys.readouterr().out.strip().splitlines()[-1].split("\t")
    assert mean[0] == "MEAN"
    assert abs(float(unit[1]) - float(mean[1])) <= 0.01 + 1e-9
    assert abs(float(unit[2]) - float(mean[2])) <= 0.01 + 1e-9


def test_ac07_baseline_sanity():
    rng = np.random.default_rng(7)
    noise = AudioBuffer(0.1 * rng.standard_normal(16000 * 10), 16000)
    cfg = StftConfig()
    # Noise estimate long enough to match the stationary noise it is applied to.
    wcfg = WienerConfig(noise_estimation_frames=80, smoothing_alpha=0.98, gain_floor=0.1)
    out = wiener_enhance(noise, cfg, wcfg).samples
    skip = 20 * cfg.hop_size
    p_in = np.mean(noise.samples[skip:] ** 2)
    p_out = np.mean(out[skip:] ** 2)
    assert p_out <= 1.05 * wcfg.gain_floor ** 2 * p_in

    x = AudioBuffer(rng.standard_normal(16000), 16000)
    y = spectral_subtraction(x, cfg, noise_mag=np.zeros(cfg.n_bins))
    assert np.max(np.abs(y.samples - x.samples)) < 1e-6


def test_ac08_metric_oracles():
    rng = np.random.default_rng(8)
    cfg = StftConfig()
    for _ in range(20):
        n = int(rng.integers(600, 3000))
        ref = rng.standard_normal(n)
        test = ref + rng.uniform(0.05, 2.0) * rng.standard_normal(n)
        a, b = AudioBuffer(ref, 16000), AudioBuffer(test, 16000)
        assert abs(segmental_snr(a, b, 512, 256) - segsnr_loop(ref, test, 512, 256)) < 1e-9
        assert abs(log_spectral_distance(a, b, cfg) - lsd_loop(ref, test, cfg)) < 1e-9
    x = AudioBuffer(rng.standard_normal(5000), 16000)
    assert f"{segmental_snr(x, x):.2f}" == "35.00"


def test_ac09_format_round_trip(tmp_path):
    rng = np.random.default_rng(9)
    vals = rng.standard_normal((123, 257)).astype(np.float32)
    write_pcsf(tmp_path / "x.pcsf", FeatureMatrix(vals, 16000, 512, 256))
    assert read_pcsf(tmp_path / "x.pcsf").values.tobytes() == vals.tobytes()

    samples = rng.uniform(-1.0, 32767 / 32768, size=50_000)
    samples[:3] = [-1.0, 32767 / 32768, 0.0]
    write_wav(tmp_path / "x.wav", AudioBuffer(samples, 16000), "pcm16")
    assert np.max(np.abs(read_wav(tmp_path / "x.wav").samples - samples)) <= 1 / 32768


def test_ac10_wiener_pcs_chain(record_property):
    rate = 16000
    t = np.arange(10 * rate) / rate
    # Speech-like fixture: syllable-rate gated harmonic complex with a gliding pitch.
    f0 = 120 + 30 * np.sin(2 * np.pi * 0.3 * t)
    phase = 2 * np.pi * np.cumsum(f0) / rate
    voiced = sum(np.sin(k * phase) / k for k in range(1, 20))
    gate = (np.sin(2 * np.pi * 3 * t) > 0) & (t > 1.0)
    clean = 0.2 * voiced * gate
    noise = np.random.default_rng(10).standard_normal(t.shape[0])
    noise *= np.sqrt(np.mean(clean ** 2) / np.mean(noise ** 2) / 10 ** (5 / 10))
    noisy = AudioBuffer(clean + noise, rate)
    ref = AudioBuffer(clean, rate)

    cfg = StftConfig()
    stage1 = wiener_enhance(noisy, cfg)
    out = pp_pcs(stage1, cfg, build_schedule(config=cfg, sample_rate=rate))
    assert len(out) == len(noisy)
    assert np.all(np.isfinite(out.samples))
    assert out.peak == pytest.approx(stage1.peak, rel=1e-12)

    before = segmental_snr(ref, noisy)
    after = segmental_snr(ref, out)
    record_property("segsnr_noisy_db", round(before, 2))
    record_property("segsnr_wiener_pcs_db", round(after, 2))
