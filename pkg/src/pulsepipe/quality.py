"""Signal-quality gate: five classes decided by an ordered rule cascade.

Each analysis window is summarized by a handful of features and routed to
exactly one of Good / Poor / Interference / Talking / Silent. The reference
classifier is a transparent rule list; alternative models plug in behind the
same scoring interface and are validated before their output is trusted.
"""
from __future__ import annotations

import importlib
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Protocol, Sequence, runtime_checkable

import numpy as np

from .config import PipelineConfig
from .dsp import INTERNAL_RATE_HZ, WINDOW_SECONDS, Segment, power_spectrum
from .errors import LengthMismatch, ModelFailure, ZeroEnergy
from .fhr import autocorr_normalized, band_periodicity


class QualityClass(str, Enum):
    GOOD = "Good"
    POOR = "Poor"
    INTERFERENCE = "Interference"
    TALKING = "Talking"
    SILENT = "Silent"


# Fixed order: also the tie-break priority for score argmax.
CLASS_ORDER: tuple[QualityClass, ...] = tuple(QualityClass)

# Voiced-fundamental lag band: 85..300 Hz at the internal rate.
VOICE_LAG_MIN = -(-INTERNAL_RATE_HZ // 300)   # ceil -> 14 samples (300 Hz)
VOICE_LAG_MAX = INTERNAL_RATE_HZ // 85        # floor -> 47 samples (85 Hz)
_SUB_VOICE_LAG_MIN = 2

# Spectral flatness is taken over block means of the power spectrum so that a
# broadband signal reads near 1.0 instead of the raw-periodogram limit ~0.56.
_FLATNESS_BLOCK = 50


@dataclass(frozen=True)
class QualityFeatures:
    """Per-window summary statistics feeding the rule cascade."""

    rms: float
    zcr_hz: float
    flatness: float
    rho_fhr: float
    rho_voice: float
    peak_bin_fraction: float


@dataclass(frozen=True)
class QualityLabel:
    """Winning class plus a full per-class score breakdown (sums to 1)."""

    cls: QualityClass
    scores: Mapping[QualityClass, float]


@runtime_checkable
class QualityClassifier(Protocol):
    """Anything that scores a window across the five classes."""

    name: str

    def scores(self, segment: Segment) -> Mapping:
        ...


def _voice_prominence(x: np.ndarray) -> float:
    """Voiced-band periodicity: the 85-300 Hz autocorrelation peak, discounted
    by the best peak at shorter (higher-pitched) lags.

    A bare carrier repeats at its own short period and therefore also at every
    multiple inside the voice band; subtracting the short-lag peak keeps such
    signals from masquerading as speech, while a harmonic-rich voiced sound
    keeps its full band peak.
    """
    try:
        r = autocorr_normalized(x, _SUB_VOICE_LAG_MIN, VOICE_LAG_MAX)
    except ZeroEnergy:
        return 0.0
    split = VOICE_LAG_MIN - _SUB_VOICE_LAG_MIN
    sub_peak = float(r[:split].max())
    band_peak = float(r[split:].max())
    return float(min(max(band_peak - max(sub_peak, 0.0), 0.0), 1.0))


def extract_features(segment: Segment) -> QualityFeatures:
    """Compute the feature record for one window."""
    x = segment.samples
    rms = float(np.sqrt(np.mean(x * x)))

    centered = x - x.mean()
    crossings = int(np.count_nonzero(centered[:-1] * centered[1:] < 0.0))
    zcr_hz = crossings / WINDOW_SECONDS

    p = power_spectrum(segment)[1:]  # drop DC
    total = float(p.sum())
    if total > 0.0:
        peak_bin_fraction = float(p.max()) / total
        blocks = p.reshape(-1, _FLATNESS_BLOCK).mean(axis=1)
        amean = float(blocks.mean())
        gmean = float(np.exp(np.mean(np.log(np.maximum(blocks, 1e-300)))))
        flatness = min(gmean / amean, 1.0) if amean > 0.0 else 0.0
    else:
        peak_bin_fraction = 0.0
        flatness = 0.0

    rho_fhr = band_periodicity(segment)
    rho_voice = _voice_prominence(centered)

    return QualityFeatures(rms=rms, zcr_hz=zcr_hz, flatness=flatness,
                           rho_fhr=rho_fhr, rho_voice=rho_voice,
                           peak_bin_fraction=peak_bin_fraction)


class HeuristicClassifier:
    """Reference rule cascade, first match wins:

    1. Silent:        rms below the silence floor
    2. Interference:  broadband (flatness) or single-tone (peak bin share)
    3. Talking:       voiced-band periodicity
    4. Good:          heart-rate-band envelope periodicity
    5. Poor:          everything else

    The winning class gets score 0.6 + 0.4 * margin (margin = how far past
    its threshold the deciding feature sits, clamped to [0,1]); the remaining
    mass is split evenly across the other four classes.
    """

    name = "heuristic-v1"

    def __init__(self, config: PipelineConfig | None = None):
        self.config = config or PipelineConfig()

    def decide(self, features: QualityFeatures) -> tuple[QualityClass, float]:
        """(winning class, margin in [0,1]) for a feature record."""
        cfg = self.config
        if features.rms < cfg.silent_rms:
            return QualityClass.SILENT, (cfg.silent_rms - features.rms) / cfg.silent_rms
        if features.flatness > cfg.interference_flatness or \
                features.peak_bin_fraction > cfg.interference_peak_fraction:
            margin = max(
                (features.flatness - cfg.interference_flatness) / (1.0 - cfg.interference_flatness),
                (features.peak_bin_fraction - cfg.interference_peak_fraction) / (1.0 - cfg.interference_peak_fraction),
            )
            return QualityClass.INTERFERENCE, margin
        if features.rho_voice > cfg.talking_rho_voice:
            return QualityClass.TALKING, (features.rho_voice - cfg.talking_rho_voice) / (1.0 - cfg.talking_rho_voice)
        if features.rho_fhr >= cfg.good_rho_fhr:
            return QualityClass.GOOD, (features.rho_fhr - cfg.good_rho_fhr) / (1.0 - cfg.good_rho_fhr)
        return QualityClass.POOR, 0.0

    def scores(self, segment: Segment) -> dict[QualityClass, float]:
        winner, margin = self.decide(extract_features(segment))
        margin = min(max(margin, 0.0), 1.0)
        win_score = 0.6 + 0.4 * margin
        rest = (1.0 - win_score) / (len(CLASS_ORDER) - 1)
        return {cls: (win_score if cls is winner else rest) for cls in CLASS_ORDER}


def _coerce_scores(raw) -> dict[QualityClass, float]:
    """Validate and normalize a model's score mapping; ModelFailure if bogus."""
    if not isinstance(raw, Mapping):
        raise ModelFailure(f"model returned {type(raw).__name__}, expected a mapping")
    try:
        scores = {QualityClass(k): float(v) for k, v in raw.items()}
    except (ValueError, TypeError) as exc:
        raise ModelFailure(f"unusable score mapping: {exc}") from exc
    if set(scores) != set(CLASS_ORDER):
        raise ModelFailure(f"expected scores for exactly {len(CLASS_ORDER)} classes, got {sorted(k.value for k in scores)}")
    values = np.array([scores[c] for c in CLASS_ORDER])
    if not np.isfinite(values).all() or (values < 0.0).any():
        raise ModelFailure("scores must be finite and non-negative")
    total = float(values.sum())
    if total <= 0.0:
        raise ModelFailure("scores are not normalizable (sum <= 0)")
    return {c: float(v / total) for c, v in zip(CLASS_ORDER, values)}


def classify(segment: Segment, model: QualityClassifier | None = None) -> QualityLabel:
    """Label one window. Ties in the scores resolve by class order."""
    model = model or HeuristicClassifier()
    scores = _coerce_scores(model.scores(segment))
    best = max(CLASS_ORDER, key=lambda c: (scores[c], -CLASS_ORDER.index(c)))
    return QualityLabel(cls=best, scores=scores)


@dataclass(frozen=True)
class ConfusionReport:
    """5x5 confusion matrix; rows are truth, columns are predictions."""

    classes: tuple[QualityClass, ...]
    matrix: np.ndarray
    accuracy: float

    def truth_counts(self) -> dict[QualityClass, int]:
        return {c: int(self.matrix[i].sum()) for i, c in enumerate(self.classes)}

    def per_class_accuracy(self) -> dict[QualityClass, float]:
        out = {}
        for i, c in enumerate(self.classes):
            row = self.matrix[i].sum()
            out[c] = float(self.matrix[i, i] / row) if row else 0.0
        return out


def quality_report(predicted: Sequence[QualityClass], truth: Sequence[QualityClass]) -> ConfusionReport:
    """Confusion matrix over aligned prediction/truth sequences."""
    if len(predicted) != len(truth):
        raise LengthMismatch(f"{len(predicted)} predictions vs {len(truth)} truth labels")
    index = {c: i for i, c in enumerate(CLASS_ORDER)}
    matrix = np.zeros((len(CLASS_ORDER), len(CLASS_ORDER)), dtype=np.int64)
    for p, t in zip(predicted, truth):
        matrix[index[QualityClass(t)], index[QualityClass(p)]] += 1
    correct = int(np.trace(matrix))
    accuracy = correct / len(truth) if truth else 0.0
    return ConfusionReport(classes=CLASS_ORDER, matrix=matrix, accuracy=accuracy)


def get_classifier(name: str, config: PipelineConfig | None = None) -> QualityClassifier:
    """Resolve a classifier by registry name or 'module:attr' import path."""
    if name == HeuristicClassifier.name:
        return HeuristicClassifier(config)
    if ":" in name:
        mod_name, attr = name.split(":", 1)
        obj = getattr(importlib.import_module(mod_name), attr)
        if callable(obj) and not hasattr(obj, "scores"):
            obj = obj(config)
        if not hasattr(obj, "scores"):
            raise ModelFailure(f"{name} does not provide a scores(segment) method")
        return obj
    raise ModelFailure(f"unknown classifier {name!r}")
