"""Chunked sample sources the gateway feeds from.

A source yields float chunks at the internal 4 kHz rate. The synthetic one
can be degraded mid-stream (the UI's "probe displaced" knob): raising the
level adds noise and flattens the beat envelope for all subsequent samples,
so the stream stays deterministic given the control history.
"""
from __future__ import annotations

from typing import Iterator, Optional

import numpy as np

from ..dsp import INTERNAL_RATE_HZ, SampleStream, resample
from ..errors import OutOfRangeValue
from ..synth import Lcg, doppler_samples

DEFAULT_CHUNK = 400  # 100 ms

BASE_NOISE = 0.05
NOISE_PER_LEVEL = 0.45
DEPTH_LOSS_PER_LEVEL = 0.9


class SynthSource:
    """Endless-phase chunk generator over the heartbeat fixture."""

    synthetic = True

    def __init__(self, bpm: float = 140.0, duration_s: float = 60.0,
                 noise_level: float = 0.05, seed: int = 1,
                 chunk_samples: int = DEFAULT_CHUNK):
        if not 60.0 <= bpm <= 240.0:
            raise OutOfRangeValue(f"bpm {bpm} outside [60, 240]")
        if duration_s <= 0:
            raise OutOfRangeValue("duration_s must be positive")
        if noise_level < 0:
            raise OutOfRangeValue("noise_level must be >= 0")
        if chunk_samples <= 0:
            raise OutOfRangeValue("chunk_samples must be positive")
        self.bpm = bpm
        self.seed = seed
        self.noise_level = noise_level
        self.beat_depth = 1.0
        self.chunk_samples = chunk_samples
        self._total = round(duration_s * INTERNAL_RATE_HZ)
        self._emitted = 0
        self._rng = Lcg(seed)
        self.describe = (f"synth:bpm={bpm:g},dur={duration_s:g},"
                         f"noise={noise_level:g},seed={seed}")

    def set_noise(self, level: float) -> None:
        """Map a 0..2 degradation level onto noise amplitude and beat depth."""
        if not 0.0 <= level <= 2.0:
            raise OutOfRangeValue(f"level {level} outside [0, 2]")
        self.noise_level = BASE_NOISE + NOISE_PER_LEVEL * level
        self.beat_depth = max(0.0, 1.0 - DEPTH_LOSS_PER_LEVEL * level)

    def chunks(self) -> Iterator[np.ndarray]:
        while self._emitted < self._total:
            n = min(self.chunk_samples, self._total - self._emitted)
            yield doppler_samples(self.bpm, n / INTERNAL_RATE_HZ,
                                  self.noise_level, self.seed,
                                  beat_depth=self.beat_depth,
                                  start_sample=self._emitted, rng=self._rng)
            self._emitted += n


class FileSource:
    """Chunk generator over a loaded (and internally resampled) recording."""

    synthetic = False

    def __init__(self, stream: SampleStream, name: str = "file",
                 chunk_samples: int = DEFAULT_CHUNK):
        if chunk_samples <= 0:
            raise OutOfRangeValue("chunk_samples must be positive")
        self._samples = resample(stream, INTERNAL_RATE_HZ).samples
        self.chunk_samples = chunk_samples
        self.describe = name

    def set_noise(self, level: float) -> None:
        raise OutOfRangeValue("set_noise applies only to synthetic sources")

    def chunks(self) -> Iterator[np.ndarray]:
        for begin in range(0, len(self._samples), self.chunk_samples):
            yield self._samples[begin:begin + self.chunk_samples]
