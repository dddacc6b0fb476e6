"""Runtime configuration: thresholds, plug-in names, pacing.

A config is a flat record with defaults matching the reference behavior. An
optional JSON file can override any subset of fields; the SHA-256 of the
canonical serialization of the *effective* config is stamped into every
session log header so runs are comparable only when their knobs matched.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, replace

from .errors import UnsupportedFormat


@dataclass(frozen=True)
class PipelineConfig:
    silent_rms: float = 0.001
    interference_flatness: float = 0.5
    interference_peak_fraction: float = 0.8
    talking_rho_voice: float = 0.4
    good_rho_fhr: float = 0.5
    classifier: str = "heuristic-v1"
    scorer: str = "affine-fhr-v0"
    detector: str = "classical-v1"
    ring_capacity: int = 32000
    tick_budget_ms: float = 250.0
    chunk_samples: int = 400

    def canonical_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, separators=(",", ":"))

    def sha256(self) -> str:
        return hashlib.sha256(self.canonical_json().encode("ascii")).hexdigest()


def load_config(path: str | None) -> PipelineConfig:
    """Defaults, optionally overridden by a JSON object of known fields."""
    cfg = PipelineConfig()
    if path is None:
        return cfg
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UnsupportedFormat(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise UnsupportedFormat("config file must hold a JSON object")
    known = set(asdict(cfg))
    unknown = set(data) - known
    if unknown:
        raise UnsupportedFormat(f"unknown config fields: {sorted(unknown)}")
    return replace(cfg, **data)
