import numpy as np
import pytest

from sepmetrics.fixtures import speech_like


@pytest.fixture(scope="session")
def speech():
    """The shipped 2 s / 16 kHz speech-like fixture."""
    return speech_like()


@pytest.fixture(scope="session")
def short_speech():
    """A short fixture slice for gradient checks and quick loops."""
    sig = speech_like(duration_s=0.25, sample_rate_hz=16000, seed=3)
    return sig


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
