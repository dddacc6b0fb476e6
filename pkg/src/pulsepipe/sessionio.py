"""File ingestion, session persistence, and the run-parity harness.

Session logs are JSONL: one header line, one JSON document per tick, one
footer line carrying the summary. Writing is deterministic byte for byte —
fixed key order, shortest round-trip float encoding — so two equal logs
compare equal as files, which is what the determinism acceptance check
leans on.

Audio comes in as RIFF/WAVE PCM16 mono; images as binary PGM (P5, maxval
255). Both were picked for being trivially bit-exact, not for glamour.
"""
from __future__ import annotations

import json
import math
import wave
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bp import GrayImage
from .config import PipelineConfig
from .dsp import SampleStream
from .errors import (CorruptHeader, FieldMissing, NoOverlap, SchemaMismatch,
                     TruncatedData, UnsupportedFormat)
from .pipeline import SessionSummary, TickReport
from .quality import CLASS_ORDER

SCHEMA_VERSION = "pulsepipe/1"

ROW_KEYS = ("tick", "t_end_s", "quality", "scores", "fhr_bpm", "fhr_rho",
            "fhr_absent_reason", "ga_weeks", "ga_windows", "processing_ms",
            "deadline_missed")
_NUMERIC_FIELDS = frozenset({"tick", "t_end_s", "fhr_bpm", "fhr_rho",
                             "ga_weeks", "ga_windows", "processing_ms"})


# ---------------------------------------------------------------------------
# Audio (WAV PCM16 mono)
# ---------------------------------------------------------------------------

def load_wav(path) -> SampleStream:
    """Load 16-bit PCM mono audio; amplitudes are sample/32768."""
    raw_head = Path(path).read_bytes()[:12]
    if len(raw_head) < 12 or raw_head[:4] != b"RIFF" or raw_head[8:12] != b"WAVE":
        raise CorruptHeader(f"{path}: not a RIFF/WAVE file")
    try:
        with wave.open(str(path), "rb") as reader:
            channels = reader.getnchannels()
            width = reader.getsampwidth()
            rate = reader.getframerate()
            frames = reader.getnframes()
            payload = reader.readframes(frames)
    except wave.Error as exc:
        raise UnsupportedFormat(f"{path}: {exc}") from None
    if channels != 1:
        raise UnsupportedFormat(f"{path}: expected mono, found {channels} channels")
    if width != 2:
        raise UnsupportedFormat(f"{path}: expected 16-bit PCM, found {8 * width}-bit")
    if len(payload) < 2 * frames:
        raise TruncatedData(f"{path}: header promises {frames} frames, "
                            f"payload holds {len(payload) // 2}")
    samples = np.frombuffer(payload, dtype="<i2").astype(np.float64) / 32768.0
    return SampleStream(samples=samples, rate_hz=rate)


def save_wav(path, stream: SampleStream) -> None:
    quantized = np.clip(np.round(stream.samples * 32768.0), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as writer:
        writer.setnchannels(1)
        writer.setsampwidth(2)
        writer.setframerate(stream.rate_hz)
        writer.writeframes(quantized.tobytes())


# ---------------------------------------------------------------------------
# Images (binary PGM, P5, maxval 255)
# ---------------------------------------------------------------------------

def _pgm_tokens(data: bytes, count: int) -> tuple[list[int], int]:
    """Read `count` whitespace-separated integer tokens after the magic,
    honoring '#' comments; returns (tokens, offset past final whitespace)."""
    tokens: list[int] = []
    i = 2  # past "P5"
    while len(tokens) < count:
        while i < len(data) and data[i:i + 1].isspace():
            i += 1
        if i < len(data) and data[i:i + 1] == b"#":
            while i < len(data) and data[i] != 0x0A:
                i += 1
            continue
        start = i
        while i < len(data) and not data[i:i + 1].isspace():
            i += 1
        if i == start:
            raise UnsupportedFormat("malformed PGM header")
        try:
            tokens.append(int(data[start:i]))
        except ValueError:
            raise UnsupportedFormat(f"bad PGM header token {data[start:i]!r}") from None
    return tokens, i + 1  # single whitespace byte separates header from payload


def pgm_from_bytes(data: bytes, origin: str = "<bytes>") -> GrayImage:
    if data[:2] != b"P5":
        raise UnsupportedFormat(f"{origin}: expected binary PGM (P5)")
    (width, height, maxval), offset = _pgm_tokens(data, 3)
    if maxval != 255:
        raise UnsupportedFormat(f"{origin}: maxval must be 255, found {maxval}")
    if width <= 0 or height <= 0:
        raise UnsupportedFormat(f"{origin}: bad dimensions {width}x{height}")
    payload = data[offset:offset + width * height]
    if len(payload) < width * height:
        raise TruncatedData(f"{origin}: header promises {width * height} bytes, "
                            f"found {len(payload)}")
    pixels = np.frombuffer(payload, dtype=np.uint8).reshape(height, width)
    return GrayImage(pixels=pixels.copy())


def load_pgm(path) -> GrayImage:
    return pgm_from_bytes(Path(path).read_bytes(), origin=str(path))


def save_pgm(path, image: GrayImage) -> None:
    header = f"P5\n{image.width} {image.height}\n255\n".encode("ascii")
    Path(path).write_bytes(header + image.pixels.tobytes())


def rgb_to_gray(rgb: np.ndarray) -> GrayImage:
    """Rec. 601 luma conversion for color captures."""
    rgb = np.asarray(rgb, dtype=np.float64)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise UnsupportedFormat("expected an (h, w, 3) color array")
    luma = 0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]
    return GrayImage(pixels=np.clip(np.round(luma), 0, 255).astype(np.uint8))


# ---------------------------------------------------------------------------
# Session logs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SessionLog:
    config_sha256: str
    input_name: str
    rows: tuple
    summary: dict


def tick_to_row(report: TickReport) -> dict:
    """Flatten a TickReport into the exact JSONL row schema."""
    return {
        "tick": report.tick,
        "t_end_s": report.t_end_s,
        "quality": report.quality.cls.value,
        "scores": {cls.value: float(report.quality.scores[cls]) for cls in CLASS_ORDER},
        "fhr_bpm": report.fhr.bpm if report.fhr is not None else None,
        "fhr_rho": report.fhr.rho if report.fhr is not None else None,
        "fhr_absent_reason": report.fhr_absent_reason,
        "ga_weeks": report.ga.weeks if report.ga is not None else None,
        "ga_windows": report.ga.n_windows_used if report.ga is not None else 0,
        "processing_ms": report.processing_ms,
        "deadline_missed": report.deadline_missed,
    }


def summary_to_dict(summary: SessionSummary) -> dict:
    return {
        "ticks": summary.ticks,
        "quality_counts": {cls.value: summary.quality_counts[cls.value]
                           for cls in CLASS_ORDER},
        "fhr_mean_bpm": summary.fhr_mean_bpm,
        "fhr_sd_bpm": summary.fhr_sd_bpm,
        "ga_weeks": summary.ga_weeks,
        "ga_windows": summary.ga_windows,
        "ga_absent_reason": summary.ga_absent_reason,
        "deadline_misses": summary.deadline_misses,
    }


def log_from_run(config: PipelineConfig, input_name: str,
                 reports, summary: SessionSummary) -> SessionLog:
    return SessionLog(config_sha256=config.sha256(),
                      input_name=input_name,
                      rows=tuple(tick_to_row(r) for r in reports),
                      summary=summary_to_dict(summary))


def _dump(obj) -> str:
    return json.dumps(obj, separators=(",", ":"), allow_nan=False)


class SessionWriter:
    """Streaming JSONL writer: header on open, one row per tick, footer on close."""

    def __init__(self, path, config: PipelineConfig, input_name: str):
        self._fh = open(path, "w", encoding="utf-8", newline="\n")
        self._fh.write(_dump({"schema": SCHEMA_VERSION,
                              "config_sha256": config.sha256(),
                              "input": input_name}) + "\n")

    def write_tick(self, report: TickReport) -> None:
        self._fh.write(_dump(tick_to_row(report)) + "\n")
        self._fh.flush()

    def close(self, summary: SessionSummary) -> None:
        self._fh.write(_dump({"summary": summary_to_dict(summary)}) + "\n")
        self._fh.close()


def write_session(path, log: SessionLog) -> None:
    lines = [_dump({"schema": SCHEMA_VERSION,
                    "config_sha256": log.config_sha256,
                    "input": log.input_name})]
    lines.extend(_dump(row) for row in log.rows)
    lines.append(_dump({"summary": log.summary}))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def read_session(path) -> SessionLog:
    """Parse and validate a session log; SchemaMismatch carries the line number."""
    return read_session_text(Path(path).read_text(encoding="utf-8"))


def read_session_text(text: str) -> SessionLog:
    lines = text.splitlines()
    if len(lines) < 2:
        raise SchemaMismatch("log needs at least a header and a footer line")
    parsed = []
    for number, line in enumerate(lines, start=1):
        try:
            parsed.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise SchemaMismatch(f"invalid JSON ({exc.msg})", line=number) from None

    header = parsed[0]
    if not isinstance(header, dict) or "schema" not in header:
        raise SchemaMismatch("first line is not a header", line=1)
    if header.get("schema") != SCHEMA_VERSION:
        raise SchemaMismatch(f"schema {header.get('schema')!r} is not {SCHEMA_VERSION!r}",
                             line=1)
    for key in ("config_sha256", "input"):
        if key not in header:
            raise SchemaMismatch(f"header missing {key!r}", line=1)

    footer = parsed[-1]
    if not isinstance(footer, dict) or set(footer) != {"summary"}:
        raise SchemaMismatch("last line is not a summary footer", line=len(lines))

    rows = []
    expected_tick = None
    for number, row in enumerate(parsed[1:-1], start=2):
        if not isinstance(row, dict) or set(row) != set(ROW_KEYS):
            raise SchemaMismatch("row keys do not match the tick schema", line=number)
        if expected_tick is not None and row["tick"] != expected_tick:
            raise SchemaMismatch(f"tick {row['tick']} breaks the gap-free order "
                                 f"(expected {expected_tick})", line=number)
        expected_tick = row["tick"] + 1
        rows.append(row)

    return SessionLog(config_sha256=header["config_sha256"],
                      input_name=header["input"],
                      rows=tuple(rows),
                      summary=footer["summary"])


# ---------------------------------------------------------------------------
# Run parity
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ParityReport:
    field_name: str
    n: int
    mae: float
    sd_error: float
    max_abs_error: float


def compare_runs(a: SessionLog, b: SessionLog, field_name: str) -> ParityReport:
    """MAE / error-SD consistency check between two runs, aligned by tick.

    Only ticks where both logs define the field participate; sd_error uses
    the n-1 denominator (0.0 when a single tick overlaps).
    """
    if field_name not in _NUMERIC_FIELDS:
        raise FieldMissing(f"{field_name!r} is not a numeric row field "
                           f"(choose from {sorted(_NUMERIC_FIELDS)})")
    values_a = {row["tick"]: row[field_name] for row in a.rows
                if row[field_name] is not None}
    values_b = {row["tick"]: row[field_name] for row in b.rows
                if row[field_name] is not None}
    shared = sorted(set(values_a) & set(values_b))
    if not shared:
        raise NoOverlap(f"no tick defines {field_name!r} in both logs")
    errors = [float(values_a[t]) - float(values_b[t]) for t in shared]
    n = len(errors)
    mae = math.fsum(abs(e) for e in errors) / n
    if n >= 2:
        mean_error = math.fsum(errors) / n
        sd = math.sqrt(math.fsum((e - mean_error) ** 2 for e in errors) / (n - 1))
    else:
        sd = 0.0
    return ParityReport(field_name=field_name, n=n, mae=mae, sd_error=sd,
                        max_abs_error=max(abs(e) for e in errors))
