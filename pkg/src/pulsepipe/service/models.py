"""Request/response bodies for the REST side of the gateway.

The WebSocket frames deliberately stay raw dicts (their shapes are part of
the wire contract shared with the session-log schema); these models cover
the HTTP endpoints only.
"""
from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field


class ControlRequest(BaseModel):
    action: Literal["start", "stop", "mark_reposition", "set_noise"]
    note: Optional[str] = None
    level: Optional[float] = None


class AckResponse(BaseModel):
    type: Literal["ack"] = "ack"
    action: str


class ControlErrorResponse(BaseModel):
    type: Literal["error"] = "error"
    reason: str


class HealthResponse(BaseModel):
    status: str
    phase: str
    schema_version: str


class EventModel(BaseModel):
    kind: str
    t_s: float


class SummaryModel(BaseModel):
    ticks: int
    quality_counts: dict[str, int]
    fhr_mean_bpm: Optional[float]
    fhr_sd_bpm: Optional[float]
    ga_weeks: Optional[float]
    ga_windows: int
    ga_absent_reason: Optional[str]
    deadline_misses: int


class SessionSnapshot(BaseModel):
    phase: str
    input: str
    ticks: int
    stream_time_s: float
    ga_weeks: Optional[float]
    ga_windows: int
    events: list[EventModel]
    summary: Optional[SummaryModel] = None


class BpTranscribeRequest(BaseModel):
    pgm_base64: str = Field(description="base64-encoded binary PGM (P5) image")
    detector: Optional[str] = None


class BpReadingResponse(BaseModel):
    systolic: int
    diastolic: int
    pulse: int
    valid: bool
    reason: Optional[str]


class CompareRequest(BaseModel):
    a_jsonl: str = Field(description="full JSONL text of the first session log")
    b_jsonl: str = Field(description="full JSONL text of the second session log")
    field: str = "fhr_bpm"


class ParityResponse(BaseModel):
    field: str
    n: int
    mae: float
    sd_error: float
    max_abs_error: float
