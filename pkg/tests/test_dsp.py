"""Resampling, ring buffer, envelope, and spectrum tests.

Every nontrivial expectation is checked against a slow, independently
coded reference in this file rather than against the implementation's
own helpers.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pulsepipe.dsp import (
    DEFAULT_RING_CAPACITY,
    ENVELOPE_SMOOTH_SAMPLES,
    HOP_SAMPLES,
    INTERNAL_RATE_HZ,
    WINDOW_SAMPLES,
    RingBuffer,
    SampleStream,
    Segment,
    envelope,
    power_spectrum,
    resample,
    stream_segments,
)
from pulsepipe.errors import DataLost, EmptyStream


# ---------------------------------------------------------------------------
# reference implementations (oracles)


def lerp_resample(x, rate_in: int, rate_out: int) -> list[float]:
    """Plain-Python linear interpolation, clamping past the last sample."""
    n_in = len(x)
    n_out = round(n_in * rate_out / rate_in)
    out = []
    for m in range(n_out):
        pos = m * rate_in / rate_out
        i = int(math.floor(pos))
        if i >= n_in - 1:
            out.append(float(x[n_in - 1]))
            continue
        frac = pos - i
        out.append(float(x[i]) + (float(x[i + 1]) - float(x[i])) * frac)
    return out


class FlatListRing:
    """Oracle for RingBuffer: keeps every sample ever written in a list."""

    def __init__(self, capacity: int) -> None:
        self.capacity = capacity
        self.history: list[float] = []

    def write(self, chunk) -> None:
        self.history.extend(float(v) for v in chunk)

    @property
    def write_count(self) -> int:
        return len(self.history)

    def contents(self) -> list[float]:
        return self.history[-self.capacity:]

    def window(self, index: int) -> list[float] | None:
        """Samples of window `index`, or None if not fully written yet.

        Raises DataLost if the window start has been overwritten.
        """
        start = index * HOP_SAMPLES
        end = start + WINDOW_SAMPLES
        if end > len(self.history):
            return None
        if start < len(self.history) - self.capacity:
            raise DataLost(f"window {index} overwritten")
        return self.history[start:end]


def loop_envelope(x) -> list[float]:
    """Mean removal, rectification, then a shrinking-edge moving average."""
    n = len(x)
    mu = sum(float(v) for v in x) / n
    rect = [abs(float(v) - mu) for v in x]
    half = ENVELOPE_SMOOTH_SAMPLES // 2
    out = []
    for i in range(n):
        lo = max(0, i - half)
        hi = min(n, i + half + 1)
        out.append(sum(rect[lo:hi]) / (hi - lo))
    return out


def dft_power_bin(x, k: int) -> float:
    """Power-spectrum bin k evaluated directly from the DFT definition,
    with the same one-sided weighting and 1/N scale the pipeline uses."""
    x = np.asarray(x, dtype=float)
    x = x - x.mean()
    n = len(x)
    coeff = complex(np.sum(x * np.exp(-2j * np.pi * k * np.arange(n) / n)))
    weight = 1.0 if k in (0, n // 2) else 2.0
    return weight * abs(coeff) ** 2 / n


def _segment(samples) -> Segment:
    return Segment(samples=np.asarray(samples, dtype=float), start_time_s=0.0, index=0)


# ---------------------------------------------------------------------------
# resample


def test_resample_identity_at_internal_rate():
    x = np.sin(np.linspace(0.0, 20.0, 8000))
    stream = SampleStream(rate_hz=INTERNAL_RATE_HZ, samples=x)
    out = resample(stream, INTERNAL_RATE_HZ)
    assert np.array_equal(out.samples, x)
    assert out.rate_hz == INTERNAL_RATE_HZ


def test_resample_empty_stream_rejected():
    stream = SampleStream(rate_hz=44100, samples=np.array([]))
    with pytest.raises(EmptyStream):
        resample(stream, INTERNAL_RATE_HZ)


def test_resample_44100_matches_lerp_oracle():
    rate_in = 44100
    t = np.arange(int(rate_in * 0.25)) / rate_in
    x = np.sin(2.0 * np.pi * 100.0 * t)
    out = resample(SampleStream(rate_hz=rate_in, samples=x), INTERNAL_RATE_HZ)
    ref = lerp_resample(x, rate_in, INTERNAL_RATE_HZ)
    assert out.samples.size == len(ref) == round(len(x) * INTERNAL_RATE_HZ / rate_in)
    assert np.max(np.abs(out.samples - np.array(ref))) < 1e-9


def test_resample_integer_decimation_picks_exact_samples():
    # 8000 -> 4000 with an even sample count reads every other input exactly.
    x = np.array([0.3, -0.1, 0.4, -0.1, 0.5, -0.9, 0.2, 0.6])
    out = resample(SampleStream(rate_hz=8000, samples=x), INTERNAL_RATE_HZ)
    assert np.array_equal(out.samples, x[::2])


@given(
    rate=st.sampled_from([8000, 16000, 22050, 44100, 48000]),
    n=st.integers(min_value=2, max_value=400),
    seed=st.integers(min_value=0, max_value=2**31 - 1),
)
@settings(max_examples=40, deadline=None)
def test_resample_matches_oracle_property(rate, n, seed):
    rng = np.random.default_rng(seed)
    x = rng.uniform(-1.0, 1.0, n)
    stream = SampleStream(rate_hz=rate, samples=x)
    ref = lerp_resample(x, rate, INTERNAL_RATE_HZ)
    if not ref:
        with pytest.raises(EmptyStream):
            resample(stream, INTERNAL_RATE_HZ)
        return
    out = resample(stream, INTERNAL_RATE_HZ)
    assert out.samples.size == len(ref)
    assert np.max(np.abs(out.samples - np.array(ref))) < 1e-9


# ---------------------------------------------------------------------------
# ring buffer


def test_ring_default_capacity():
    assert RingBuffer().capacity == DEFAULT_RING_CAPACITY == 32000


def test_ring_contents_matches_oracle_interleaved():
    ring = RingBuffer(capacity=16000)
    flat = FlatListRing(16000)
    rng = np.random.default_rng(7)
    for size in [1, 399, 4000, 12345, 16000, 17, 8000, 40000]:
        chunk = rng.uniform(-1.0, 1.0, size)
        ring.write(chunk)
        flat.write(chunk)
        assert ring.write_count == flat.write_count
        assert np.array_equal(ring.contents, np.array(flat.contents()))


def test_ring_overwrite_oldest():
    ring = RingBuffer(capacity=10)
    ring.write(np.arange(7, dtype=float))
    ring.write(np.arange(7, 15, dtype=float))
    assert ring.write_count == 15
    assert np.array_equal(ring.contents, np.arange(5, 15, dtype=float))


def test_pop_segment_not_ready_returns_none():
    ring = RingBuffer()
    ring.write(np.zeros(WINDOW_SAMPLES - 1))
    assert ring.pop_segment(0) is None


def test_pop_segment_exact_boundary():
    ring = RingBuffer()
    ring.write(np.ones(WINDOW_SAMPLES))
    seg = ring.pop_segment(0)
    assert seg is not None
    assert seg.index == 0
    assert seg.start_time_s == 0.0
    assert seg.samples.size == WINDOW_SAMPLES


def test_pop_segment_index_one_span():
    # After 19000 samples, window 1 covers samples 4000..18999 and starts
    # one second into the stream.
    ring = RingBuffer()
    ring.write(np.arange(19000, dtype=float) / 19000.0)
    seg = ring.pop_segment(1)
    assert seg is not None
    assert seg.start_time_s == pytest.approx(1.0)
    assert seg.samples[0] == 4000.0 / 19000.0
    assert seg.samples[-1] == 18999.0 / 19000.0


def test_pop_segment_data_lost():
    ring = RingBuffer()
    ring.write(np.zeros(50000))
    with pytest.raises(DataLost):
        ring.pop_segment(1)  # starts at 4000 < 50000 - 32000


@given(
    sizes=st.lists(st.integers(min_value=1, max_value=6000), min_size=1, max_size=12),
    pops=st.lists(st.integers(min_value=0, max_value=12), max_size=6),
)
@settings(max_examples=60, deadline=None)
def test_ring_pop_matches_flat_oracle(sizes, pops):
    ring = RingBuffer(capacity=DEFAULT_RING_CAPACITY)
    flat = FlatListRing(DEFAULT_RING_CAPACITY)
    rng = np.random.default_rng(sum(sizes))
    for size in sizes:
        chunk = rng.uniform(-1.0, 1.0, size)
        ring.write(chunk)
        flat.write(chunk)
    for index in pops:
        try:
            expected = flat.window(index)
        except DataLost:
            with pytest.raises(DataLost):
                ring.pop_segment(index)
            continue
        got = ring.pop_segment(index)
        if expected is None:
            assert got is None
        else:
            assert got is not None
            assert np.array_equal(got.samples, np.array(expected))
            assert got.index == index


def test_stream_segments_tick_law():
    # floor((N - 15000) / 4000) + 1 windows for N >= 15000
    for n, expected in [(14999, 0), (15000, 1), (18999, 1), (19000, 2), (103000, 23)]:
        segs = stream_segments(np.zeros(n))
        assert len(segs) == expected, f"N={n}"
        for i, seg in enumerate(segs):
            assert seg.index == i
            assert seg.start_time_s == pytest.approx(i * 1.0)


# ---------------------------------------------------------------------------
# envelope


def test_envelope_zeros():
    out = envelope(_segment(np.zeros(WINDOW_SAMPLES)))
    assert np.array_equal(out, np.zeros(WINDOW_SAMPLES))


def test_envelope_constant_input_is_zero():
    # Mean removal wipes any DC offset before rectification.
    out = envelope(_segment(np.full(WINDOW_SAMPLES, 0.7)))
    assert np.max(np.abs(out)) < 1e-12


def test_envelope_matches_loop_oracle():
    rng = np.random.default_rng(3)
    x = rng.uniform(-1.0, 1.0, WINDOW_SAMPLES)
    out = envelope(_segment(x))
    ref = loop_envelope(x)
    assert np.max(np.abs(out - np.array(ref))) < 1e-12


def test_envelope_impulse_plateau():
    x = np.zeros(WINDOW_SAMPLES)
    x[7000] = 1.0
    out = envelope(_segment(x))
    # A lone impulse smears into a flat plateau of width 101 centred on it;
    # the tiny DC residue from mean removal keeps values near but not at the
    # ideal 1/101 and 0.
    plateau = out[6950:7051]
    assert np.max(np.abs(plateau - 1.0 / 101.0)) < 2e-4
    outside = np.concatenate([out[:6900], out[7101:]])
    assert np.max(outside) < 1e-3
    assert out[6950] == pytest.approx(out[7050], abs=1e-12)


def test_envelope_sign_flip_invariance():
    rng = np.random.default_rng(11)
    x = rng.uniform(-1.0, 1.0, WINDOW_SAMPLES)
    x -= x.mean()  # zero-mean so the rectified signals coincide exactly
    assert np.array_equal(envelope(_segment(x)), envelope(_segment(-x)))


# ---------------------------------------------------------------------------
# power spectrum


def test_power_spectrum_zeros():
    spec = power_spectrum(_segment(np.zeros(WINDOW_SAMPLES)))
    assert np.all(spec == 0.0)
    assert spec.size == WINDOW_SAMPLES // 2 + 1


def test_power_spectrum_tone_in_expected_bin():
    # 400 Hz at 4000 Hz over 15000 samples lands exactly in bin 1500.
    t = np.arange(WINDOW_SAMPLES) / INTERNAL_RATE_HZ
    spec = power_spectrum(_segment(np.sin(2.0 * np.pi * 400.0 * t)))
    assert int(np.argmax(spec)) == 1500
    assert spec[1500] / np.sum(spec) > 0.99


def test_power_spectrum_bins_match_direct_dft():
    rng = np.random.default_rng(5)
    x = rng.uniform(-1.0, 1.0, WINDOW_SAMPLES)
    spec = power_spectrum(_segment(x))
    for k in (0, 17, 400, 1500, 4999, 7500):
        assert spec[k] == pytest.approx(dft_power_bin(x, k), rel=1e-9, abs=1e-9)


def test_power_spectrum_parseval():
    # The 1/N, weight-2 scaling makes the bin sum equal the time-domain
    # energy of the mean-removed window.
    rng = np.random.default_rng(9)
    x = rng.uniform(-1.0, 1.0, WINDOW_SAMPLES)
    spec = power_spectrum(_segment(x))
    centered = x - x.mean()
    assert float(np.sum(spec)) == pytest.approx(float(np.sum(centered * centered)), rel=1e-6)
