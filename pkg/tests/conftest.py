import numpy as np
import pytest

from pcs_speech import AudioBuffer

_acceptance = []


def pytest_runtest_logreport(report):
    if report.when == "call" and "acceptance" in report.keywords:
        _acceptance.append((report.nodeid.split("::")[-1], report.outcome, report.user_properties))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome, props in _acceptance:
        extra = "  ".join(f"{k}={v}" for k, v in props)
        terminalreporter.write_line(f"{'PASS' if outcome == 'passed' else 'FAIL'}  {name}  {extra}".rstrip())


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def tone_plus_noise(freq=1000.0, snr_db=5.0, seconds=1.0, rate=16000, seed=0, amp=0.5):
    """Sine at ``freq`` plus white Gaussian noise at ``snr_db``; returns (clean, noisy)."""
    gen = np.random.default_rng(seed)
    t = np.arange(int(seconds * rate)) / rate
    clean = amp * np.sin(2 * np.pi * freq * t)
    noise = gen.standard_normal(t.shape[0])
    noise *= np.sqrt(np.mean(clean ** 2) / np.mean(noise ** 2) / 10 ** (snr_db / 10))
    return AudioBuffer(clean, rate), AudioBuffer(clean + noise, rate)


@pytest.fixture
def tone_noise():
    return tone_plus_noise()
