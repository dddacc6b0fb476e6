"""Fetal heart rate estimation via normalized autocorrelation of the envelope.

The estimator measures how similar the amplitude envelope is to itself at
delays between 0.25 s and 1.0 s (240 down to 60 BPM) and converts the best
delay to beats per minute, with parabolic refinement between integer lags.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dsp import INTERNAL_RATE_HZ, Segment, envelope
from .errors import NoPeriodicity, ZeroEnergy

LAG_MIN = 1000   # 240 BPM
LAG_MAX = 4000   # 60 BPM
RHO_FLOOR = 0.3
ENERGY_FLOOR = 1e-12

# The mean-removed envelope is peak-normalized and snapped to this grid before
# autocorrelation. The grid is coarse enough that ulp-level drift from a pure
# gain change lands on the same points, so (bpm, rho) is literally
# bit-identical under scaling, yet fine enough to be inaudible in the result.
_QUANT = 2.0 ** 20


@dataclass(frozen=True)
class FhrEstimate:
    """A heart-rate reading: bpm = 60*4000/lag_samples by construction."""

    bpm: float
    rho: float
    lag_samples: float


def autocorr_normalized(x: np.ndarray, lag_min: int, lag_max: int) -> np.ndarray:
    """r[tau] = sum_n x[n]*x[n+tau] / sum_n x[n]^2 for tau in [lag_min, lag_max].

    x is assumed mean-removed. Returns an array of length lag_max-lag_min+1
    with r[0] corresponding to lag_min. Computed via FFT (exact up to float
    rounding against the definitional double loop). Raises ZeroEnergy when
    the denominator is below 1e-12.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("x must be one-dimensional")
    if not (1 <= lag_min <= lag_max < x.size):
        raise ValueError("need 1 <= lag_min <= lag_max < len(x)")
    energy = float(np.dot(x, x))
    if energy < ENERGY_FLOOR:
        raise ZeroEnergy(f"signal energy {energy:.3e} below {ENERGY_FLOOR:.0e}")
    nfft = 1 << int(x.size + lag_max).bit_length()
    spectrum = np.fft.rfft(x, nfft)
    acf = np.fft.irfft(spectrum.real ** 2 + spectrum.imag ** 2, nfft)
    return acf[lag_min:lag_max + 1] / energy


def modulation_profile(segment: Segment) -> np.ndarray | None:
    """Envelope, mean-removed, peak-normalized and quantized; None if flat."""
    env = envelope(segment)
    centered = env - env.mean()
    peak = float(np.max(np.abs(centered))) if centered.size else 0.0
    if peak < ENERGY_FLOOR:
        return None
    y = centered / peak
    return np.round(y * _QUANT) / _QUANT


def band_periodicity(segment: Segment) -> float:
    """Peak autocorrelation of the envelope in the heart-rate band, in [0, 1].

    This is the same quantity the estimator maximizes (before parabolic
    refinement), exposed for the quality gate; 0.0 when the envelope is flat.
    """
    profile = modulation_profile(segment)
    if profile is None:
        return 0.0
    r = autocorr_normalized(profile, LAG_MIN, LAG_MAX)
    return float(min(max(float(r.max()), 0.0), 1.0))


def estimate_fhr(segment: Segment) -> FhrEstimate:
    """Estimate heart rate from one analysis window.

    Callers should gate on quality first; this function happily reports the
    periodicity of talking or hum. Raises ZeroEnergy for flat input and
    NoPeriodicity when the best correlation peak is under 0.3.
    """
    profile = modulation_profile(segment)
    if profile is None:
        raise ZeroEnergy("envelope carries no modulation")
    r = autocorr_normalized(profile, LAG_MIN, LAG_MAX)
    i = int(np.argmax(r))  # first occurrence: smallest lag wins ties
    lag = float(LAG_MIN + i)
    rho = float(r[i])
    if 0 < i < r.size - 1:
        a, b, c = float(r[i - 1]), float(r[i]), float(r[i + 1])
        curvature = a - 2.0 * b + c
        if curvature < 0.0:
            delta = 0.5 * (a - c) / curvature
            lag = lag + delta
            rho = b - 0.25 * (a - c) * delta
    # Band edges skip refinement, so lag stays within [LAG_MIN, LAG_MAX].
    rho = float(min(max(rho, 0.0), 1.0))
    if rho < RHO_FLOOR:
        raise NoPeriodicity(f"best correlation {rho:.3f} below {RHO_FLOOR}")
    bpm = 60.0 * INTERNAL_RATE_HZ / lag
    return FhrEstimate(bpm=bpm, rho=rho, lag_samples=lag)
