"""Real-time session loop: ring ingestion, per-second ticks, session state.

A PipelineSession owns one monitoring run. Chunks of 4 kHz samples go in via
feed(); every completed 1 s hop yields one TickReport carrying the quality
label, the FHR estimate when (and only when) the window is Good, and the
running gestational-age value over the first ten Good windows. Reports and
session events are fanned out to subscribers over bounded drop-oldest queues
so a stalled consumer can never block ingestion.
"""
from __future__ import annotations

import math
import time
from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Union

import numpy as np

from .config import PipelineConfig
from .dsp import (HOP_SAMPLES, INTERNAL_RATE_HZ, WINDOW_SAMPLES,
                  WINDOW_SECONDS, RingBuffer, Segment)
from .errors import (DataLost, NoPeriodicity, ScorerFailure, SessionStopped,
                     ZeroEnergy)
from .fhr import FhrEstimate, estimate_fhr
from .ga import MAX_WINDOWS, GaEstimate, _checked, get_scorer, mean_weeks
from .quality import CLASS_ORDER, QualityClass, QualityLabel, classify, get_classifier


class Phase(Enum):
    IDLE = "idle"
    WARMING = "warming"
    RUNNING = "running"
    STOPPED = "stopped"


@dataclass(frozen=True)
class TickReport:
    """Everything the pipeline concluded about one analysis window."""

    tick: int
    t_end_s: float
    quality: QualityLabel
    fhr: Optional[FhrEstimate]
    fhr_absent_reason: Optional[str]
    ga: Optional[GaEstimate]
    processing_ms: float
    deadline_missed: bool


@dataclass(frozen=True)
class SessionEvent:
    kind: str          # started | stopped | reposition | data_lost
    t_s: float         # stream time (ingested samples / 4000)
    note: Optional[str] = None


@dataclass(frozen=True)
class SessionSummary:
    ticks: int
    quality_counts: dict
    fhr_mean_bpm: Optional[float]
    fhr_sd_bpm: Optional[float]
    ga_weeks: Optional[float]
    ga_windows: int
    ga_absent_reason: Optional[str]
    deadline_misses: int


class Subscription:
    """Bounded fan-out queue: newest 64 items win, drops are counted."""

    def __init__(self, maxlen: int = 64):
        self._items: deque = deque()
        self._maxlen = maxlen
        self.dropped = 0

    def push(self, item: Union[TickReport, SessionEvent]) -> None:
        if len(self._items) >= self._maxlen:
            self._items.popleft()
            self.dropped += 1
        self._items.append(item)

    def drain(self) -> list:
        out = []
        while self._items:
            out.append(self._items.popleft())
        return out

    def __len__(self) -> int:
        return len(self._items)


class PipelineSession:
    """One monitoring run from start() to stop().

    >>> session = PipelineSession()
    >>> session.start("bedside")
    >>> reports = session.feed(samples)      # 4 kHz float chunk, any length
    >>> summary = session.stop()

    Ticks are indexed by window position in the stream, so t_end_s is always
    3.75 + tick * 1.0 regardless of how the stream was chunked. If a consumer
    stalls long enough for the ring to lap the processor, a data_lost event is
    recorded and processing resynchronizes at the newest complete window.
    """

    def __init__(self, config: PipelineConfig | None = None,
                 classifier=None, scorer=None):
        self.config = config or PipelineConfig()
        self._classifier = classifier or get_classifier(self.config.classifier, self.config)
        self._scorer = scorer or get_scorer(self.config.scorer)
        self._sequence_scorer = hasattr(self._scorer, "score_sequence")
        self._ring = RingBuffer(self.config.ring_capacity)
        self.phase = Phase.IDLE
        self.input_name = ""
        self.events: list[SessionEvent] = []
        self.ticks_emitted = 0
        self._next_index = 0
        self._quality_counts = {cls.value: 0 for cls in CLASS_ORDER}
        self._good_fhr_bpm: list[float] = []
        self._ga_scores: list[float] = []
        self._ga_segments: list[Segment] = []
        self._ga: Optional[GaEstimate] = None
        self._deadline_misses = 0
        self._subscribers: list[Subscription] = []
        self._summary: Optional[SessionSummary] = None

    # -- lifecycle -----------------------------------------------------------

    def start(self, input_name: str = "") -> None:
        if self.phase is not Phase.IDLE:
            raise SessionStopped("session already started")
        self.input_name = input_name
        self.phase = Phase.WARMING
        self._record_event("started", 0.0)

    def stop(self) -> SessionSummary:
        if self._summary is not None:
            return self._summary
        if self.phase is not Phase.IDLE:
            self._record_event("stopped", self.stream_time_s)
        self.phase = Phase.STOPPED
        n = len(self._good_fhr_bpm)
        mean = math.fsum(self._good_fhr_bpm) / n if n else None
        sd = None
        if n >= 2:
            sd = math.sqrt(math.fsum((v - mean) ** 2 for v in self._good_fhr_bpm) / (n - 1))
        if self._ga is not None:
            ga_weeks, ga_windows, ga_reason = self._ga.weeks, self._ga.n_windows_used, None
        else:
            ga_weeks, ga_windows, ga_reason = None, 0, "no_good_windows"
        self._summary = SessionSummary(
            ticks=self.ticks_emitted,
            quality_counts=dict(self._quality_counts),
            fhr_mean_bpm=mean,
            fhr_sd_bpm=sd,
            ga_weeks=ga_weeks,
            ga_windows=ga_windows,
            ga_absent_reason=ga_reason,
            deadline_misses=self._deadline_misses,
        )
        return self._summary

    def mark_reposition(self, note: str = "") -> None:
        if self.phase not in (Phase.WARMING, Phase.RUNNING):
            raise SessionStopped("cannot mark a reposition on a stopped session")
        self._record_event("reposition", self.stream_time_s, note or None)

    @property
    def stream_time_s(self) -> float:
        return self._ring.write_count / INTERNAL_RATE_HZ

    @property
    def ga_running(self) -> Optional[GaEstimate]:
        return self._ga

    @property
    def summary(self) -> Optional[SessionSummary]:
        """The final summary, present only once stop() has run."""
        return self._summary

    def subscribe(self, maxlen: int = 64) -> Subscription:
        sub = Subscription(maxlen)
        self._subscribers.append(sub)
        return sub

    def unsubscribe(self, sub: Subscription) -> None:
        try:
            self._subscribers.remove(sub)
        except ValueError:
            pass

    # -- ingestion -----------------------------------------------------------

    def feed(self, chunk) -> list[TickReport]:
        if self.phase not in (Phase.WARMING, Phase.RUNNING):
            raise SessionStopped(f"feed() requires a live session (phase={self.phase.value})")
        samples = np.asarray(chunk, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError("chunk must be one-dimensional")
        if samples.size and not np.isfinite(samples).all():
            raise ValueError("chunk contains non-finite samples")
        self._ring.write(samples)
        if self.phase is Phase.WARMING and self._ring.write_count >= WINDOW_SAMPLES:
            self.phase = Phase.RUNNING

        reports = []
        while True:
            started = time.perf_counter()
            try:
                segment = self._ring.pop_segment(self._next_index)
            except DataLost:
                write_count = self._ring.write_count
                newest = (write_count - WINDOW_SAMPLES) // HOP_SAMPLES
                if newest <= self._next_index:
                    raise
                self._record_event("data_lost", write_count / INTERNAL_RATE_HZ)
                self._next_index = newest
                continue
            if segment is None:
                return reports
            report = self._process(segment, started)
            reports.append(report)
            self._next_index = segment.index + 1

    # -- per-tick work -------------------------------------------------------

    def _process(self, segment: Segment, started: float) -> TickReport:
        label = classify(segment, self._classifier)
        self._quality_counts[label.cls.value] += 1

        fhr: Optional[FhrEstimate] = None
        reason: Optional[str] = None
        if label.cls is QualityClass.GOOD:
            try:
                fhr = estimate_fhr(segment)
            except ZeroEnergy:
                reason = "zero_energy"
            except NoPeriodicity:
                reason = "no_periodicity"
            if fhr is not None:
                self._good_fhr_bpm.append(fhr.bpm)
                self._offer_ga_window(segment)
        else:
            reason = "quality_not_good"

        processing_ms = (time.perf_counter() - started) * 1000.0
        missed = processing_ms > self.config.tick_budget_ms
        if missed:
            self._deadline_misses += 1
        report = TickReport(
            tick=segment.index,
            t_end_s=WINDOW_SECONDS + segment.index * 1.0,
            quality=label,
            fhr=fhr,
            fhr_absent_reason=reason,
            ga=self._ga,
            processing_ms=processing_ms,
            deadline_missed=missed,
        )
        self.ticks_emitted += 1
        self._broadcast(report)
        return report

    def _offer_ga_window(self, segment: Segment) -> None:
        """Collect the first ten Good windows; a failing scorer skips a window
        rather than killing the live session."""
        if len(self._ga_segments) >= MAX_WINDOWS:
            return
        if self._sequence_scorer:
            candidate = self._ga_segments + [segment]
            try:
                weeks = _checked(self._scorer.score_sequence(candidate), self._scorer.name)
            except (ScorerFailure, ZeroEnergy, NoPeriodicity):
                return
            self._ga_segments.append(segment)
            self._ga = GaEstimate(weeks=weeks, n_windows_used=len(self._ga_segments),
                                  window_scores=())
            return
        try:
            score = _checked(self._scorer.score(segment), self._scorer.name)
        except (ScorerFailure, ZeroEnergy, NoPeriodicity):
            return
        self._ga_segments.append(segment)
        self._ga_scores.append(score)
        self._ga = GaEstimate(weeks=mean_weeks(self._ga_scores),
                              n_windows_used=len(self._ga_scores),
                              window_scores=tuple(self._ga_scores))

    def _record_event(self, kind: str, t_s: float, note: Optional[str] = None) -> None:
        event = SessionEvent(kind=kind, t_s=t_s, note=note)
        self.events.append(event)
        self._broadcast(event)

    def _broadcast(self, item: Union[TickReport, SessionEvent]) -> None:
        for sub in self._subscribers:
            sub.push(item)


def run_stream(samples, config: PipelineConfig | None = None,
               chunk_samples: int | None = None,
               classifier=None, scorer=None) -> tuple[list[TickReport], SessionSummary]:
    """Convenience batch driver: feed a whole stream through a fresh session.

    chunk_samples controls the feed granularity (default: the config's
    chunk_samples); the reports are chunking-invariant apart from timing
    metadata as long as a chunk never exceeds ring capacity minus one window.
    """
    session = PipelineSession(config=config, classifier=classifier, scorer=scorer)
    cfg_chunk = chunk_samples or session.config.chunk_samples
    session.start()
    samples = np.asarray(samples, dtype=np.float64)
    reports: list[TickReport] = []
    for begin in range(0, len(samples), cfg_chunk):
        reports.extend(session.feed(samples[begin:begin + cfg_chunk]))
    summary = session.stop()
    return reports, summary
