"""Gestational-age aggregation over quality-gated analysis windows.

Only Good windows carry usable signal, and past the first ten they stop
adding information, so the estimate is the mean of per-window scores over the
first (up to) ten Good windows in arrival order. The per-window scorer is a
plug-in; the bundled reference is a deliberately simple affine map of heart
rate so the plumbing is exercised end to end with a verifiable closed form.
"""
from __future__ import annotations

import importlib
import math
from dataclasses import dataclass
from typing import Iterable, Protocol, runtime_checkable

from .dsp import Segment
from .errors import NoGoodWindows, ScorerFailure
from .fhr import estimate_fhr
from .quality import QualityClass, QualityLabel

WEEKS_MIN = 10.0
WEEKS_MAX = 45.0
MAX_WINDOWS = 10


@dataclass(frozen=True)
class GaEstimate:
    weeks: float
    n_windows_used: int
    window_scores: tuple[float, ...]


@runtime_checkable
class WindowScorer(Protocol):
    """Maps one Good window to gestational weeks."""

    name: str

    def score(self, segment: Segment) -> float:
        ...


@runtime_checkable
class SequenceScorer(Protocol):
    """Variant for models that need the whole selected window sequence."""

    name: str

    def score_sequence(self, segments: list[Segment]) -> float:
        ...


def reference_score(segment: Segment) -> float:
    """weeks = clamp(44.0 - 0.07 * (bpm - 110.0), 10, 45).

    A placeholder with the right shape (higher rate, earlier age), kept
    affine so tests can verify aggregation arithmetic exactly.
    """
    bpm = estimate_fhr(segment).bpm
    weeks = 44.0 - 0.07 * (bpm - 110.0)
    return min(max(weeks, WEEKS_MIN), WEEKS_MAX)


class AffineFhrScorer:
    name = "affine-fhr-v0"

    def score(self, segment: Segment) -> float:
        return reference_score(segment)


def select_windows(labeled: Iterable[tuple[Segment, QualityLabel | QualityClass]]) -> list[Segment]:
    """First <= 10 Good windows in sequence order; NoGoodWindows if none."""
    picked: list[Segment] = []
    for segment, label in labeled:
        cls = label.cls if isinstance(label, QualityLabel) else QualityClass(label)
        if cls is QualityClass.GOOD:
            picked.append(segment)
            if len(picked) == MAX_WINDOWS:
                break
    if not picked:
        raise NoGoodWindows("no window labeled Good")
    return picked


def _checked(value, scorer_name: str) -> float:
    try:
        weeks = float(value)
    except (TypeError, ValueError) as exc:
        raise ScorerFailure(f"{scorer_name} returned non-numeric {value!r}") from exc
    if not math.isfinite(weeks) or not (WEEKS_MIN <= weeks <= WEEKS_MAX):
        raise ScorerFailure(f"{scorer_name} returned {weeks!r}, outside [{WEEKS_MIN}, {WEEKS_MAX}]")
    return weeks


def mean_weeks(scores: list[float]) -> float:
    """Exactly-rounded mean; identical scores return that score verbatim."""
    if all(s == scores[0] for s in scores):
        return scores[0]
    return math.fsum(scores) / len(scores)


def estimate_ga(labeled, scorer: WindowScorer | SequenceScorer | None = None) -> GaEstimate:
    """Aggregate gestational age over the selected windows.

    Accepts either scorer interface. Per-window scorers produce the mean of
    their scores (window_scores retained); sequence scorers produce a single
    value over the whole selection (window_scores left empty).
    """
    scorer = scorer or AffineFhrScorer()
    selected = select_windows(labeled)
    if hasattr(scorer, "score_sequence"):
        weeks = _checked(scorer.score_sequence(list(selected)), scorer.name)
        return GaEstimate(weeks=weeks, n_windows_used=len(selected), window_scores=())
    scores = [_checked(scorer.score(seg), scorer.name) for seg in selected]
    return GaEstimate(weeks=mean_weeks(scores), n_windows_used=len(scores),
                      window_scores=tuple(scores))


def get_scorer(name: str):
    """Resolve a scorer by registry name or 'module:attr' import path."""
    if name == AffineFhrScorer.name:
        return AffineFhrScorer()
    if ":" in name:
        mod_name, attr = name.split(":", 1)
        obj = getattr(importlib.import_module(mod_name), attr)
        if callable(obj) and not (hasattr(obj, "score") or hasattr(obj, "score_sequence")):
            obj = obj()
        if not (hasattr(obj, "score") or hasattr(obj, "score_sequence")):
            raise ScorerFailure(f"{name} provides neither score nor score_sequence")
        return obj
    raise ScorerFailure(f"unknown scorer {name!r}")
