"""Sample-stream primitives: resampling, ring buffer, windowing, envelope, spectrum.

Everything downstream of ingestion runs at a fixed internal rate of 4000 Hz,
with 3.75 s analysis windows hopped by exactly 1 s — so a window is always
15000 samples and consecutive windows share 11000.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataLost, EmptyStream

INTERNAL_RATE_HZ = 4000
WINDOW_SAMPLES = 15000
HOP_SAMPLES = 4000
WINDOW_SECONDS = WINDOW_SAMPLES / INTERNAL_RATE_HZ

# ~25 ms moving average; odd so the window stays centered on each sample.
ENVELOPE_SMOOTH_SAMPLES = 101

DEFAULT_RING_CAPACITY = 32000


@dataclass(frozen=True)
class SampleStream:
    """Mono amplitudes in [-1, +1] at a known sample rate.

    PCM16 input maps to sample/32768, so full negative scale is exactly -1.0.
    """

    rate_hz: int
    samples: np.ndarray

    def __post_init__(self):
        if int(self.rate_hz) <= 0:
            raise ValueError("rate_hz must be positive")
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError("samples must be one-dimensional")
        if samples.size and not np.isfinite(samples).all():
            raise ValueError("amplitudes must be finite")
        if samples.size and (np.abs(samples) > 1.0).any():
            raise ValueError("amplitudes must lie in [-1, +1]")
        object.__setattr__(self, "rate_hz", int(self.rate_hz))
        object.__setattr__(self, "samples", samples)

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.rate_hz


@dataclass(frozen=True)
class Segment:
    """One 3.75 s analysis window at the internal rate.

    start_time_s is always index * 1.0 because windows hop by one second.
    """

    samples: np.ndarray
    start_time_s: float
    index: int

    def __post_init__(self):
        samples = np.ascontiguousarray(self.samples, dtype=np.float64)
        if samples.shape != (WINDOW_SAMPLES,):
            raise ValueError(f"segment must hold exactly {WINDOW_SAMPLES} samples")
        if not np.isfinite(samples).all():
            raise ValueError("segment samples must be finite")
        object.__setattr__(self, "samples", samples)

    @property
    def end_time_s(self) -> float:
        return self.start_time_s + WINDOW_SECONDS


def resample(stream: SampleStream, target_rate_hz: int) -> SampleStream:
    """Linear-interpolation resample to target_rate_hz.

    Output length is round(n_in * target/input), ties to even. Equal rates
    return the input stream unchanged (bit-identical); an empty stream is an
    error because there is nothing to interpolate over.
    """
    if int(target_rate_hz) <= 0:
        raise ValueError("target_rate_hz must be positive")
    if stream.samples.size == 0:
        raise EmptyStream("cannot resample an empty stream")
    if int(target_rate_hz) == stream.rate_hz:
        return stream

    n_in = stream.samples.size
    n_out = round(n_in * target_rate_hz / stream.rate_hz)
    if n_out <= 0:
        raise EmptyStream("resampled stream would be empty")
    # Output sample m sits at input position m * in/target; positions past the
    # last input sample clamp to it (np.interp semantics).
    positions = np.arange(n_out, dtype=np.float64) * (stream.rate_hz / target_rate_hz)
    out = np.interp(positions, np.arange(n_in, dtype=np.float64), stream.samples)
    np.clip(out, -1.0, 1.0, out=out)
    return SampleStream(rate_hz=int(target_rate_hz), samples=out)


class RingBuffer:
    """Fixed-capacity sample ring with overwrite-oldest semantics.

    Tracks the total number of samples ever written, so stream positions are
    absolute: position p lives at p % capacity while p >= write_count - capacity.
    Designed for one writer and one reader running concurrently; the reader
    re-checks residency after copying, so a torn read surfaces as DataLost
    instead of silently corrupt data.
    """

    def __init__(self, capacity: int = DEFAULT_RING_CAPACITY):
        if int(capacity) <= 0:
            raise ValueError("capacity must be positive")
        self.capacity = int(capacity)
        self._buf = np.zeros(self.capacity, dtype=np.float64)
        self._write_count = 0

    @property
    def write_count(self) -> int:
        """Total samples written since construction (monotone)."""
        return self._write_count

    def write(self, chunk) -> None:
        """Append samples, overwriting the oldest once capacity is exceeded."""
        chunk = np.asarray(chunk, dtype=np.float64)
        if chunk.ndim != 1:
            raise ValueError("chunk must be one-dimensional")
        n = chunk.size
        if n == 0:
            return
        cap = self.capacity
        wc = self._write_count
        if n >= cap:
            # Only the tail survives; lay it out at the positions it occupies.
            data = chunk[n - cap:]
            start = (wc + n - cap) % cap
            first = cap - start
            self._buf[start:] = data[:first]
            self._buf[:start] = data[first:]
        else:
            pos = wc % cap
            end = pos + n
            if end <= cap:
                self._buf[pos:end] = chunk
            else:
                first = cap - pos
                self._buf[pos:] = chunk[:first]
                self._buf[:end - cap] = chunk[first:]
        # Publish after the data is in place.
        self._write_count = wc + n

    @property
    def contents(self) -> np.ndarray:
        """The last min(write_count, capacity) samples in write order."""
        wc = self._write_count
        size = min(wc, self.capacity)
        return self._read_span(wc - size, wc)

    def _read_span(self, start: int, stop: int) -> np.ndarray:
        n = stop - start
        out = np.empty(n, dtype=np.float64)
        if n == 0:
            return out
        pos = start % self.capacity
        first = min(n, self.capacity - pos)
        out[:first] = self._buf[pos:pos + first]
        out[first:] = self._buf[:n - first]
        return out

    def pop_segment(self, index: int) -> Segment | None:
        """Return analysis window `index`, or None if it is not complete yet.

        Window k covers absolute positions [k*4000, k*4000 + 15000). Raises
        DataLost when any of those samples has already been overwritten.
        """
        if index < 0:
            raise ValueError("window index must be >= 0")
        start = index * HOP_SAMPLES
        stop = start + WINDOW_SAMPLES
        wc = self._write_count
        if wc < stop:
            return None
        if start < wc - self.capacity:
            raise DataLost(f"window {index} starts at {start}, oldest resident sample is {wc - self.capacity}")
        data = self._read_span(start, stop)
        if start < self._write_count - self.capacity:
            # A concurrent writer lapped us mid-copy.
            raise DataLost(f"window {index} was overwritten during read")
        return Segment(samples=data, start_time_s=float(index), index=index)


def stream_segments(samples) -> list[Segment]:
    """All complete analysis windows of a flat 4000 Hz sample array."""
    samples = np.asarray(samples, dtype=np.float64)
    out = []
    k = 0
    while k * HOP_SAMPLES + WINDOW_SAMPLES <= samples.size:
        start = k * HOP_SAMPLES
        out.append(Segment(samples=samples[start:start + WINDOW_SAMPLES].copy(),
                           start_time_s=float(k), index=k))
        k += 1
    return out


def envelope(segment: Segment) -> np.ndarray:
    """Amplitude envelope: mean-removed, full-wave rectified, then smoothed.

    Smoothing is a centered 101-sample moving average whose window shrinks at
    the segment edges, so the output has the same length as the input and
    never ramps in from zero padding.
    """
    x = segment.samples - segment.samples.mean()
    r = np.abs(x)
    half = ENVELOPE_SMOOTH_SAMPLES // 2
    csum = np.concatenate(([0.0], np.cumsum(r)))
    n = r.size
    idx = np.arange(n)
    lo = np.maximum(idx - half, 0)
    hi = np.minimum(idx + half + 1, n)
    return (csum[hi] - csum[lo]) / (hi - lo)


def power_spectrum(segment: Segment) -> np.ndarray:
    """One-sided power spectrum of the mean-removed window, bins 0..7500.

    Bin k corresponds to k * 4000/15000 Hz, so bin 7500 is the 2000 Hz
    Nyquist. Interior bins carry weight 2 (they fold in the conjugate half)
    and the whole thing is scaled by 1/N, so the bin sum equals the
    time-domain energy of the mean-removed window (Parseval).
    """
    x = segment.samples - segment.samples.mean()
    spectrum = np.fft.rfft(x)
    p = spectrum.real ** 2 + spectrum.imag ** 2
    weights = np.full(p.size, 2.0)
    weights[0] = 1.0
    weights[-1] = 1.0  # WINDOW_SAMPLES is even: last bin is the real Nyquist bin
    return weights * p / WINDOW_SAMPLES
