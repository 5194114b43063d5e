import sys
import wave
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))


def _write_wav(path, pcm, sample_rate=16000, channels=1, sample_width=2):
    pcm = np.asarray(pcm)
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(channels)
        wf.setsampwidth(sample_width)
        wf.setframerate(sample_rate)
        if sample_width == 2:
            wf.writeframes(pcm.astype("<i2").tobytes())
        else:
            wf.writeframes(pcm.tobytes())


@pytest.fixture
def write_wav():
    return _write_wav


@pytest.fixture
def tone_wav(tmp_path):
    """One second of a 1 kHz tone at 16 kHz, 16-bit mono."""
    t = np.arange(16000) / 16000.0
    pcm = np.round(0.5 * 32767 * np.sin(2 * np.pi * 1000.0 * t)).astype(np.int64)
    path = tmp_path / "tone.wav"
    _write_wav(path, pcm)
    return path
