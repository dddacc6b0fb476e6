import numpy as np
import pytest

from pulsepipe.dsp import WINDOW_SAMPLES, Segment
from pulsepipe.synth import synth_class, synth_doppler


@pytest.fixture(scope="session")
def good_segment() -> Segment:
    return synth_class("Good", seed=1)


@pytest.fixture(scope="session")
def noise_segment() -> Segment:
    return synth_class("Interference", seed=1)


@pytest.fixture(scope="session")
def silent_segment() -> Segment:
    return Segment(samples=np.zeros(WINDOW_SAMPLES), start_time_s=0.0, index=0)


@pytest.fixture(scope="session")
def beat_stream_140():
    """10 s of the 140 BPM fixture used across the pipeline tests."""
    return synth_doppler(140.0, 10.0, 0.05, seed=1).samples
