"""Deterministic signal fixtures for tests, demos and cross-implementation checks.

All randomness comes from one pinned 32-bit linear congruential generator so
any reimplementation, in any language, can reproduce every fixture bit for bit
from the same seed.
"""
from __future__ import annotations

import numpy as np

from . import dsp
from .dsp import INTERNAL_RATE_HZ, WINDOW_SAMPLES, SampleStream, Segment
from .errors import OutOfRangeValue

LCG_A = 1664525
LCG_C = 1013904223
LCG_MOD = 2 ** 32

CARRIER_HZ = 400.0
CARRIER_AMPLITUDE = 0.6
BURST_SECONDS = 0.12

BPM_MIN = 60.0
BPM_MAX = 240.0

# Poor-quality fixture calibration (see synth_class): broadband noise plus a
# mostly flattened beat leaves the window periodic enough to register but too
# weak to trust. The periodicity target is the center of the indeterminate
# band; beat depth is bisected per seed because the noise realization shifts
# the achieved score by more than the band is wide.
POOR_NOISE_LEVEL = 0.40
POOR_RHO_TARGET = (0.38, 0.42)
_POOR_DEPTH_BRACKET = (0.02, 0.35)

QUALITY_CLASS_NAMES = ("Good", "Poor", "Interference", "Talking", "Silent")


class Lcg:
    """The pinned 32-bit LCG: x <- (1664525*x + 1013904223) mod 2^32."""

    def __init__(self, seed: int):
        self.state = int(seed) % LCG_MOD

    def next_u32(self) -> int:
        self.state = (LCG_A * self.state + LCG_C) % LCG_MOD
        return self.state

    def fill_u32(self, n: int) -> np.ndarray:
        """Next n raw states as uint32, vectorized.

        Uses the closed form x_{i} = a^i x_0 + c(a^i-1)/(a-1) mod 2^32;
        products are taken mod 2^64 (numpy wraparound) and masked, which is
        exact because 2^32 divides 2^64.
        """
        if n <= 0:
            return np.empty(0, dtype=np.uint32)
        a_powers = np.multiply.accumulate(np.full(n, LCG_A, dtype=np.uint64))
        a_powers &= np.uint64(0xFFFFFFFF)
        # geometric partial sums 1 + a + ... + a^(i-1), again mod 2^32
        geo = np.concatenate(([np.uint64(1)], a_powers[:-1]))
        geo = np.add.accumulate(geo) & np.uint64(0xFFFFFFFF)
        x0 = np.uint64(self.state)
        out = (a_powers * x0 + np.uint64(LCG_C) * geo) & np.uint64(0xFFFFFFFF)
        self.state = int(out[-1])
        return out.astype(np.uint32)

    def uniform(self, n: int) -> np.ndarray:
        """n floats uniform in [0, 1)."""
        return self.fill_u32(n).astype(np.float64) / LCG_MOD

    def centered(self, n: int, amplitude: float) -> np.ndarray:
        """n floats uniform in [-amplitude, +amplitude)."""
        return amplitude * (2.0 * self.uniform(n) - 1.0)

    def gauss_pairs(self, n: int) -> np.ndarray:
        """n standard normal draws via Box-Muller (n rounded up to even)."""
        m = (n + 1) // 2
        u1 = np.maximum(self.uniform(m), 1.0 / LCG_MOD)  # avoid log(0)
        u2 = self.uniform(m)
        radius = np.sqrt(-2.0 * np.log(u1))
        z = np.concatenate([radius * np.cos(2 * np.pi * u2),
                            radius * np.sin(2 * np.pi * u2)])
        return z[:n]


def _beat_envelope(t: np.ndarray, bpm: float, depth: float) -> np.ndarray:
    """Raised-cosine burst train: one 120 ms burst per beat interval.

    depth=1 gives full on/off beats; depth=0 leaves the carrier steady.
    """
    period = 60.0 / bpm
    phase = np.mod(t, period)
    burst = np.where(phase < BURST_SECONDS,
                     0.5 * (1.0 - np.cos(2 * np.pi * phase / BURST_SECONDS)),
                     0.0)
    return (1.0 - depth) + depth * burst


def doppler_samples(bpm: float, duration_s: float, noise_level: float, seed: int,
                    beat_depth: float = 1.0, carrier_amplitude: float = CARRIER_AMPLITUDE,
                    start_sample: int = 0, rng: Lcg | None = None) -> np.ndarray:
    """Raw sample array for the amplitude-modulated carrier fixture.

    Split out from synth_doppler so live sources can generate the stream in
    chunks with continuous phase (start_sample) and a persistent LCG.
    """
    n = round(duration_s * INTERNAL_RATE_HZ)
    if n <= 0:
        return np.empty(0, dtype=np.float64)
    t = (np.arange(n, dtype=np.float64) + start_sample) / INTERNAL_RATE_HZ
    rng = rng if rng is not None else Lcg(seed)
    signal = carrier_amplitude * _beat_envelope(t, bpm, beat_depth) * np.cos(2 * np.pi * CARRIER_HZ * t)
    if noise_level > 0:
        signal = signal + rng.centered(n, noise_level)
    return np.clip(signal, -1.0, 1.0)


def synth_doppler(bpm: float, duration_s: float, noise_level: float = 0.05,
                  seed: int = 1, beat_depth: float = 1.0) -> SampleStream:
    """Synthetic heartbeat audio: a 400 Hz carrier gated by beat bursts.

    bpm must lie in [60, 240]; noise is uniform, seeded by the pinned LCG, so
    identical arguments always produce identical samples.
    """
    if not (BPM_MIN <= bpm <= BPM_MAX):
        raise OutOfRangeValue(f"bpm {bpm} outside [{BPM_MIN:.0f}, {BPM_MAX:.0f}]")
    if duration_s <= 0:
        raise OutOfRangeValue("duration_s must be positive")
    if noise_level < 0:
        raise OutOfRangeValue("noise_level must be >= 0")
    samples = doppler_samples(bpm, duration_s, noise_level, seed, beat_depth=beat_depth)
    return SampleStream(rate_hz=INTERNAL_RATE_HZ, samples=samples)


def _talking_samples(n: int, seed: int) -> np.ndarray:
    """Voiced-interference stand-in: equal-amplitude 150 Hz harmonic stack.

    Five harmonics with 3 Hz syllabic amplitude modulation and no beat
    structure. Equal amplitudes keep the short-lag autocorrelation
    incoherent, the way real glottal-rich speech behaves.
    """
    t = np.arange(n, dtype=np.float64) / INTERNAL_RATE_HZ
    stack = np.zeros(n)
    for k in range(1, 6):
        stack += np.cos(2 * np.pi * 150.0 * k * t + 0.7 * k)
    syllable = 0.55 + 0.45 * np.sin(2 * np.pi * 3.0 * t)
    voice = 0.11 * syllable * stack
    noise = Lcg(seed).centered(n, 0.01)
    return np.clip(voice + noise, -1.0, 1.0)


def _poor_samples(seed: int) -> np.ndarray:
    """Bisect the beat depth until the window's periodicity score sits inside
    POOR_RHO_TARGET. Pure in seed: the same seed always converges to the same
    depth because every iteration regenerates the identical noise stream."""
    from .fhr import band_periodicity  # local import: fhr has no synth dependency

    lo, hi = _POOR_DEPTH_BRACKET
    samples = None
    for _ in range(24):
        depth = 0.5 * (lo + hi)
        samples = doppler_samples(140.0, dsp.WINDOW_SECONDS, POOR_NOISE_LEVEL, seed,
                                  beat_depth=depth)
        rho = band_periodicity(Segment(samples=samples, start_time_s=0.0, index=0))
        if rho < POOR_RHO_TARGET[0]:
            lo = depth
        elif rho > POOR_RHO_TARGET[1]:
            hi = depth
        else:
            break
    return samples


def synth_class(class_name: str, seed: int = 1) -> Segment:
    """One analysis window engineered to land in the named quality class."""
    n = WINDOW_SAMPLES
    if class_name == "Good":
        samples = doppler_samples(140.0, dsp.WINDOW_SECONDS, 0.05, seed)
    elif class_name == "Poor":
        samples = _poor_samples(seed)
    elif class_name == "Interference":
        samples = Lcg(seed).centered(n, 0.3)
    elif class_name == "Talking":
        samples = _talking_samples(n, seed)
    elif class_name == "Silent":
        samples = Lcg(seed).centered(n, 0.0005)
    else:
        raise ValueError(f"unknown quality class {class_name!r}")
    return Segment(samples=samples, start_time_s=0.0, index=0)
