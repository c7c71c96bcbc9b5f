import numpy as np
import pytest

from blindmask import AudioBuffer
from blindmask.corpus import babble_noise, factory_noise, synth_utterance, white_noise

FS = 16000


@pytest.fixture(scope="session")
def speech() -> AudioBuffer:
    return synth_utterance(0)


@pytest.fixture(scope="session")
def babble() -> AudioBuffer:
    return babble_noise(1)


@pytest.fixture(scope="session")
def factory() -> AudioBuffer:
    return factory_noise(2)


@pytest.fixture(scope="session")
def white() -> AudioBuffer:
    return white_noise(3)


def tone(freq, seconds=1.0, fs=FS, amp=0.5):
    t = np.arange(int(seconds * fs)) / fs
    return AudioBuffer(amp * np.sin(2 * np.pi * freq * t), fs)


def snr_db(ref, est):
    ref, est = np.asarray(ref), np.asarray(est)
    return 10 * np.log10(np.sum(ref ** 2) / np.sum((ref - est) ** 2))
