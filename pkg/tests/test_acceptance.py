"""Release gate: one test per go/no-go criterion for the screening engine.

Each test prints a single ``[PASS]``/``[FAIL]`` line with the measured
figures, so ``pytest -v tests/test_acceptance.py`` reads as a checklist.
Thresholds are the shipped contract — do not loosen them to make a red
build green.
"""
import json
import random
import statistics
import time

import numpy as np

from pulsepipe.bp import render_lcd, transcribe_bp
from pulsepipe.cli import main
from pulsepipe.dsp import (HOP_SAMPLES, WINDOW_SAMPLES, RingBuffer, Segment,
                           stream_segments)
from pulsepipe.errors import DataLost, NoGoodWindows
from pulsepipe.fhr import estimate_fhr
from pulsepipe.ga import estimate_ga
from pulsepipe.pipeline import run_stream
from pulsepipe.quality import QualityClass, classify, quality_report
from pulsepipe.sessionio import tick_to_row
from pulsepipe.synth import Lcg, synth_class, synth_doppler

CLASS_NAMES = ["Good", "Poor", "Interference", "Talking", "Silent"]


def _verdict(name: str, ok: bool, detail: str) -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, f"{name}: {detail}"


def _p99(values) -> float:
    ordered = sorted(values)
    return ordered[min(len(ordered) - 1, int(0.99 * len(ordered)))]


def test_determinism_parity(tmp_path, capsys):
    """Two identical runs must agree sample-for-sample on reported FHR."""
    started = time.perf_counter()
    logs = [tmp_path / "a.jsonl", tmp_path / "b.jsonl"]
    for path in logs:
        code = main(["run", "--synth", "bpm=140,dur=60,noise=0.05,seed=1",
                     "--speed", "max", "--out", str(path)])
        assert code == 0
    assert main(["compare", "--a", str(logs[0]), "--b", str(logs[1]),
                 "--field", "fhr_bpm"]) == 0
    elapsed = time.perf_counter() - started

    report = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    ok = (report["mae"] == 0.0 and report["sd_error"] == 0.0
          and report["n"] > 0 and elapsed < 10.0)
    with capsys.disabled():
        _verdict("determinism-parity",
                 ok, f"mae={report['mae']} sd={report['sd_error']} "
                     f"n={report['n']} elapsed={elapsed:.2f}s (budget 10s)")


def test_fhr_accuracy_sweep():
    """65..235 BPM in 5-BPM steps: every window within +/-1 BPM, no
    half-rate (sub-harmonic) picks."""
    started = time.perf_counter()
    worst = 0.0
    subharmonic_picks = 0
    windows = 0
    for bpm in range(65, 236, 5):
        stream = synth_doppler(float(bpm), 6.0, 0.05, 1)
        for segment in stream_segments(stream.samples):
            estimate = estimate_fhr(segment)
            worst = max(worst, abs(estimate.bpm - bpm))
            if abs(estimate.bpm - bpm / 2.0) < 10.0:
                subharmonic_picks += 1
            windows += 1
    elapsed = time.perf_counter() - started

    ok = worst <= 1.0 and subharmonic_picks == 0 and elapsed < 30.0
    _verdict("fhr-accuracy-sweep",
             ok, f"windows={windows} worst_abs_err={worst:.4f} BPM "
                 f"(tol 1.0) subharmonics={subharmonic_picks} "
                 f"elapsed={elapsed:.2f}s (budget 30s)")


def test_fhr_distribution_recovery():
    """100 beat fixtures drawn from N(139.68, 13.03) BPM: the estimator
    must hand back a sample whose mean and SD sit within +/-1 BPM of the
    generator parameters."""
    rng = Lcg(2062)
    draws = list(139.68 + 13.03 * rng.gauss_pairs(100))
    recovered = []
    for i, bpm in enumerate(draws):
        stream = synth_doppler(bpm, 4.0, 0.05, 3000 + i)
        segment = stream_segments(stream.samples)[0]
        recovered.append(estimate_fhr(segment).bpm)

    mean = statistics.mean(recovered)
    sd = statistics.stdev(recovered)
    ok = abs(mean - 139.68) <= 1.0 and abs(sd - 13.03) <= 1.0
    _verdict("fhr-distribution-recovery",
             ok, f"recovered mean={mean:.3f} (target 139.68+/-1.0) "
                 f"sd={sd:.3f} (target 13.03+/-1.0)")


def test_quality_gate_accuracy():
    """50 seeds per class: every class at >= 95% accuracy, and the
    confusion report exposes the full 5x5 table."""
    predicted, truth = [], []
    for name in CLASS_NAMES:
        for seed in range(50):
            predicted.append(classify(synth_class(name, seed)).cls)
            truth.append(QualityClass(name))

    report = quality_report(predicted, truth)
    per_class = report.per_class_accuracy()
    floor = min(per_class.values())
    shape_ok = (report.matrix.shape == (5, 5)
                and len(report.classes) == 5
                and int(report.matrix.sum()) == 250)
    ok = floor >= 0.95 and shape_ok
    summary = " ".join(f"{c.value}={per_class[c]:.2f}" for c in report.classes)
    _verdict("quality-gate-accuracy",
             ok, f"{summary} overall={report.accuracy:.3f} (floor 0.95)")


def test_tick_law_and_chunking_equivalence():
    """Tick count follows floor((N-15000)/4000)+1, and feed granularity
    (1 / 400 / 16000 samples) never changes anything but timing."""
    law_ok = True
    for n in (14999, 15000, 19000, 23000, 103000):
        reports, _ = run_stream(np.zeros(n))
        expected = 0 if n < WINDOW_SAMPLES else (n - WINDOW_SAMPLES) // HOP_SAMPLES + 1
        law_ok = law_ok and len(reports) == expected

    stream = synth_doppler(140.0, 25.75, 0.05, 1)
    assert len(stream.samples) == 103000

    def stripped_rows(chunk):
        reports, summary = run_stream(stream.samples, chunk_samples=chunk)
        rows = []
        for report in reports:
            row = tick_to_row(report)
            row.pop("processing_ms")
            row.pop("deadline_missed")
            rows.append(row)
        return rows, summary

    base_rows, base_summary = stripped_rows(1)
    chunk_ok = True
    for chunk in (400, 16000):
        rows, summary = stripped_rows(chunk)
        chunk_ok = chunk_ok and rows == base_rows
        chunk_ok = chunk_ok and summary.ga_weeks == base_summary.ga_weeks
    ga_ok = base_summary.ga_weeks == 41.89862209019702

    ok = law_ok and chunk_ok and ga_ok
    _verdict("tick-law-and-chunking",
             ok, f"law={law_ok} chunk_invariant={chunk_ok} "
                 f"ticks={len(base_rows)} ga={base_summary.ga_weeks!r}")


class _ConstantScorer:
    name = "constant"

    def __init__(self, weeks: float):
        self.weeks = weeks

    def score(self, segment) -> float:
        return self.weeks


class _IndexScorer:
    name = "by-index"

    def score(self, segment) -> float:
        return 30.0 + (segment.index % 10) * 0.7


def _good_windows(count: int) -> list[tuple[Segment, QualityClass]]:
    return [(Segment(samples=np.zeros(WINDOW_SAMPLES), start_time_s=float(i),
                     index=i), QualityClass.GOOD)
            for i in range(count)]


def test_ga_aggregation_rules():
    """At most ten windows feed the estimate; a constant scorer passes
    through verbatim; reordering the same windows never moves a bit."""
    twelve = _good_windows(12)
    constant = estimate_ga(twelve, scorer=_ConstantScorer(33.3))
    cap_ok = constant.n_windows_used == 10
    verbatim_ok = constant.weeks == 33.3

    ten = _good_windows(10)
    shuffled = list(ten)
    random.Random(99).shuffle(shuffled)
    forward = estimate_ga(ten, scorer=_IndexScorer())
    permuted = estimate_ga(shuffled, scorer=_IndexScorer())
    permutation_ok = (forward.weeks == permuted.weeks
                      and forward.n_windows_used == permuted.n_windows_used == 10)

    empty_ok = False
    try:
        estimate_ga([], scorer=_ConstantScorer(30.0))
    except NoGoodWindows:
        empty_ok = True

    ok = cap_ok and verbatim_ok and permutation_ok and empty_ok
    _verdict("ga-aggregation",
             ok, f"cap10={cap_ok} constant_verbatim={verbatim_ok} "
                 f"permutation_bit_identical={permutation_ok} "
                 f"empty_raises={empty_ok}")


def _digit_errors(expected: int, actual: int) -> tuple[int, int]:
    """(mismatched digits, compared digits), right-aligned."""
    a, b = str(expected), str(actual)
    width = max(len(a), len(b))
    a, b = a.rjust(width), b.rjust(width)
    return sum(x != y for x, y in zip(a, b)), width


def test_bp_round_trip_and_noise_floor():
    """500 valid readings survive render->transcribe exactly; under 5%
    salt-and-pepper noise the digit error rate stays below 1% and
    systolic/diastolic MAE below 2 mmHg."""
    started = time.perf_counter()
    rng = random.Random(818)
    noise_rng = np.random.default_rng(415)
    triples = []
    for _ in range(500):
        systolic = rng.randint(60, 260)
        diastolic = rng.randint(30, min(systolic - 1, 160))
        pulse = rng.randint(30, 220)
        triples.append((systolic, diastolic, pulse))

    clean_misses = 0
    digit_errors = digits_total = 0
    abs_errors = []
    for systolic, diastolic, pulse in triples:
        image = render_lcd(systolic, diastolic, pulse)

        reading = transcribe_bp(image)
        if (reading.systolic_mmhg, reading.diastolic_mmhg,
                reading.pulse_bpm) != (systolic, diastolic, pulse):
            clean_misses += 1

        pixels = image.pixels.copy()
        mask = noise_rng.random(pixels.shape) < 0.05
        pepper = noise_rng.integers(0, 2, size=pixels.shape).astype(np.uint8) * 255
        pixels[mask] = pepper[mask]
        try:
            noisy = transcribe_bp(type(image)(pixels=pixels))
        except Exception:
            digit_errors += sum(len(str(v)) for v in (systolic, diastolic, pulse))
            digits_total += sum(len(str(v)) for v in (systolic, diastolic, pulse))
            continue
        for expected, actual in ((systolic, noisy.systolic_mmhg),
                                 (diastolic, noisy.diastolic_mmhg),
                                 (pulse, noisy.pulse_bpm)):
            bad, width = _digit_errors(expected, actual)
            digit_errors += bad
            digits_total += width
        abs_errors.append(abs(noisy.systolic_mmhg - systolic))
        abs_errors.append(abs(noisy.diastolic_mmhg - diastolic))
    elapsed = time.perf_counter() - started

    digit_rate = digit_errors / digits_total
    mae = statistics.mean(abs_errors) if abs_errors else float("inf")
    ok = (clean_misses == 0 and digit_rate < 0.01 and mae <= 2.0
          and elapsed < 60.0)
    _verdict("bp-round-trip",
             ok, f"clean_misses={clean_misses}/500 "
                 f"noisy_digit_rate={digit_rate:.4f} (cap 0.01) "
                 f"sys/dia MAE={mae:.3f} mmHg (cap 2.0) "
                 f"elapsed={elapsed:.1f}s (budget 60s)")


def test_latency_budget():
    """On the 60 s reference fixture: p99 tick processing < 250 ms and
    p99 heart-rate estimation < 50 ms per window."""
    stream = synth_doppler(140.0, 60.0, 0.05, 1)
    reports, _ = run_stream(stream.samples)
    tick_p99 = _p99([report.processing_ms for report in reports])

    fhr_times = []
    for segment in stream_segments(stream.samples):
        started = time.perf_counter()
        estimate_fhr(segment)
        fhr_times.append((time.perf_counter() - started) * 1000.0)
    fhr_p99 = _p99(fhr_times)

    ok = tick_p99 < 250.0 and fhr_p99 < 50.0
    _verdict("latency-budget",
             ok, f"ticks={len(reports)} p99_tick={tick_p99:.2f}ms (cap 250) "
                 f"p99_fhr={fhr_p99:.2f}ms (cap 50)")


class _FlatRing:
    """Keep-everything oracle the real ring buffer must agree with."""

    def __init__(self, capacity: int):
        self.capacity = capacity
        self.history = np.zeros(0)

    def write(self, chunk) -> None:
        self.history = np.concatenate([self.history, np.asarray(chunk, dtype=float)])

    def window(self, index: int):
        start = index * HOP_SAMPLES
        end = start + WINDOW_SAMPLES
        if end > len(self.history):
            return None
        if start < len(self.history) - self.capacity:
            raise DataLost("overwritten")
        return self.history[start:end]


def test_ring_buffer_randomized_schedules():
    """1000 random write/read schedules: the ring and the flat oracle
    agree on every outcome (samples, not-ready, data loss)."""
    rng = random.Random(777)
    mismatches = 0
    pops = 0
    for _ in range(1000):
        capacity = rng.choice([17000, 23000, 32000])
        ring = RingBuffer(capacity)
        oracle = _FlatRing(capacity)
        fill = 0
        next_index = 0
        for _ in range(rng.randint(6, 18)):
            if rng.random() < 0.6:
                size = rng.randint(1, 6000)
                chunk = np.arange(fill, fill + size, dtype=float)
                fill += size
                ring.write(chunk)
                oracle.write(chunk)
            else:
                pops += 1
                got_lost = want_lost = False
                got = want = None
                try:
                    got = ring.pop_segment(next_index)
                except DataLost:
                    got_lost = True
                try:
                    want = oracle.window(next_index)
                except DataLost:
                    want_lost = True
                if got_lost or want_lost:
                    if got_lost != want_lost:
                        mismatches += 1
                    next_index = max(0, (ring.write_count - WINDOW_SAMPLES)
                                     // HOP_SAMPLES)
                elif (got is None) != (want is None):
                    mismatches += 1
                elif got is not None:
                    if not (np.array_equal(got.samples, want)
                            and got.index == next_index):
                        mismatches += 1
                    next_index += 1

    ok = mismatches == 0
    _verdict("ring-buffer-schedules",
             ok, f"schedules=1000 pops={pops} mismatches={mismatches}")
