"""FastAPI gateway: WebSocket /live plus a small REST surface.

One SessionHub owns one pipeline session and (optionally) a chunk source it
pumps in the background. WebSocket clients subscribing at /live get a hello
frame, then every TickReport (as the session-log row schema plus
"type":"tick") and every session event, each client behind its own bounded
drop-oldest queue so a stalled reader can never back-pressure the pipeline.
"""
from __future__ import annotations

import asyncio
import base64
import binascii
import json
import socket
import sys
from contextlib import asynccontextmanager
from pathlib import Path
from typing import Callable, Optional, Union

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse

from ..bp import get_detector, transcribe_bp
from ..errors import (FieldMissing, NoLcdFound, NoOverlap, OutOfRangeValue,
                      PortInUse, PulsePipeError, RowSplitFailure,
                      SchemaMismatch, SessionStopped, UndecodablePattern)
from ..pipeline import (Phase, PipelineSession, SessionEvent, TickReport)
from ..sessionio import (SCHEMA_VERSION, SessionWriter, compare_runs,
                         pgm_from_bytes, read_session_text, summary_to_dict,
                         tick_to_row)
from .models import (AckResponse, BpReadingResponse, BpTranscribeRequest,
                     CompareRequest, ControlErrorResponse, ControlRequest,
                     EventModel, HealthResponse, ParityResponse,
                     SessionSnapshot, SummaryModel)

_SUBSCRIBER_POLL_S = 0.01


def _dump(obj) -> str:
    return json.dumps(obj, separators=(",", ":"), allow_nan=False)


def _frame(item: Union[TickReport, SessionEvent]) -> dict:
    if isinstance(item, TickReport):
        return {"type": "tick", **tick_to_row(item)}
    return {"type": "event", "kind": item.kind, "t_s": item.t_s}


class SessionHub:
    """Couples a pipeline session with an optional source, writer, and pacing.

    speed: "max" streams as fast as the loop allows; a float paces feeds to
    wall time (1.0 = real time). on_stream_end, when set, fires after the
    source is exhausted and the log footer is written (the CLI uses it to
    shut the server down).
    """

    def __init__(self, session: PipelineSession, source=None,
                 writer: Optional[SessionWriter] = None,
                 speed: Union[float, str] = "max",
                 on_stream_end: Optional[Callable[[], None]] = None):
        self.session = session
        self.source = source
        self.writer = writer
        self.speed = speed
        self.on_stream_end = on_stream_end
        self._finalized = False

    async def pump(self) -> None:
        if self.source is None:
            return
        if self.session.phase is Phase.IDLE:
            self.session.start(getattr(self.source, "describe", ""))
        loop = asyncio.get_running_loop()
        deadline = loop.time()
        try:
            for chunk in self.source.chunks():
                if self.session.phase not in (Phase.WARMING, Phase.RUNNING):
                    break
                reports = self.session.feed(chunk)
                if self.writer is not None:
                    for report in reports:
                        self.writer.write_tick(report)
                if self.speed == "max":
                    await asyncio.sleep(0)
                else:
                    deadline += len(chunk) / 4000.0 / float(self.speed)
                    delay = deadline - loop.time()
                    if delay > 0:
                        await asyncio.sleep(delay)
        finally:
            self.finalize()
        if self.on_stream_end is not None:
            await asyncio.sleep(1.0)  # let subscribers drain the last frames
            self.on_stream_end()

    def finalize(self) -> None:
        if self._finalized:
            return
        self._finalized = True
        summary = self.session.stop()
        if self.writer is not None:
            self.writer.close(summary)

    # -- control actions (shared by WS frames and REST) ----------------------

    def apply_control(self, action, note=None, level=None) -> dict:
        try:
            if action == "start":
                self.session.start(getattr(self.source, "describe", ""))
            elif action == "stop":
                if self.session.phase is Phase.STOPPED:
                    raise SessionStopped("session already stopped")
                self.finalize()
            elif action == "mark_reposition":
                self.session.mark_reposition(note or "")
            elif action == "set_noise":
                if self.source is None or not getattr(self.source, "synthetic", False):
                    return {"type": "error", "reason": "bad_action"}
                if not isinstance(level, (int, float)) or isinstance(level, bool):
                    return {"type": "error", "reason": "bad_action"}
                self.source.set_noise(float(level))
            else:
                return {"type": "error", "reason": "bad_action"}
        except SessionStopped:
            return {"type": "error", "reason": "session_stopped"}
        except OutOfRangeValue:
            return {"type": "error", "reason": "bad_action"}
        return {"type": "ack", "action": action}


def build_app(hub: SessionHub, ui_dir: Optional[str] = None) -> FastAPI:
    @asynccontextmanager
    async def lifespan(app: FastAPI):
        task = None
        if hub.source is not None:
            task = asyncio.create_task(hub.pump())
        yield
        if task is not None and not task.done():
            task.cancel()
            try:
                await task
            except asyncio.CancelledError:
                pass
        hub.finalize()

    app = FastAPI(title="pulsepipe gateway", lifespan=lifespan)
    app.state.hub = hub

    @app.websocket("/live")
    async def live(ws: WebSocket):
        await ws.accept()
        send_lock = asyncio.Lock()
        await ws.send_text(_dump({"type": "hello", "schema": SCHEMA_VERSION}))
        sub = hub.session.subscribe()
        reported_drops = 0

        async def pump_frames():
            nonlocal reported_drops
            while True:
                for item in sub.drain():
                    frame = _frame(item)
                    if frame["type"] == "tick" and sub.dropped > reported_drops:
                        frame["dropped"] = sub.dropped
                        reported_drops = sub.dropped
                    async with send_lock:
                        await ws.send_text(_dump(frame))
                await asyncio.sleep(_SUBSCRIBER_POLL_S)

        sender = asyncio.create_task(pump_frames())
        try:
            while True:
                text = await ws.receive_text()
                try:
                    message = json.loads(text)
                    if not isinstance(message, dict):
                        raise ValueError
                except (json.JSONDecodeError, ValueError):
                    reply = {"type": "error", "reason": "bad_action"}
                else:
                    if message.get("type") != "control":
                        reply = {"type": "error", "reason": "bad_action"}
                    else:
                        reply = hub.apply_control(message.get("action"),
                                                  message.get("note"),
                                                  message.get("level"))
                async with send_lock:
                    await ws.send_text(_dump(reply))
        except WebSocketDisconnect:
            pass
        finally:
            sender.cancel()
            try:
                await sender
            except asyncio.CancelledError:
                pass
            hub.session.unsubscribe(sub)

    @app.get("/health", response_model=HealthResponse)
    def health():
        return HealthResponse(status="ok", phase=hub.session.phase.value,
                              schema_version=SCHEMA_VERSION)

    @app.get("/session", response_model=SessionSnapshot)
    def session_snapshot():
        session = hub.session
        ga = session.ga_running
        summary = session.summary
        return SessionSnapshot(
            phase=session.phase.value,
            input=session.input_name,
            ticks=session.ticks_emitted,
            stream_time_s=session.stream_time_s,
            ga_weeks=ga.weeks if ga is not None else None,
            ga_windows=ga.n_windows_used if ga is not None else 0,
            events=[EventModel(kind=e.kind, t_s=e.t_s) for e in session.events],
            summary=SummaryModel(**summary_to_dict(summary)) if summary else None,
        )

    @app.post("/control", response_model=Union[AckResponse, ControlErrorResponse])
    def control(request: ControlRequest):
        reply = hub.apply_control(request.action, request.note, request.level)
        if reply["type"] == "ack":
            return JSONResponse(reply, status_code=200)
        status = 409 if reply["reason"] == "session_stopped" else 400
        return JSONResponse(reply, status_code=status)

    @app.post("/bp-transcribe", response_model=BpReadingResponse)
    def bp_transcribe(request: BpTranscribeRequest):
        try:
            data = base64.b64decode(request.pgm_base64, validate=True)
        except (binascii.Error, ValueError):
            return JSONResponse({"type": "error", "reason": "bad_base64"}, status_code=400)
        try:
            image = pgm_from_bytes(data)
            detector = get_detector(request.detector) if request.detector else None
            reading = transcribe_bp(image, detector)
        except NoLcdFound:
            return JSONResponse({"type": "error", "reason": "no_lcd_found"}, status_code=422)
        except RowSplitFailure:
            return JSONResponse({"type": "error", "reason": "row_split_failure"}, status_code=422)
        except UndecodablePattern:
            return JSONResponse({"type": "error", "reason": "undecodable_pattern"}, status_code=422)
        except PulsePipeError as exc:
            return JSONResponse({"type": "error", "reason": str(exc)}, status_code=400)
        return BpReadingResponse(systolic=reading.systolic_mmhg,
                                 diastolic=reading.diastolic_mmhg,
                                 pulse=reading.pulse_bpm,
                                 valid=reading.valid,
                                 reason=reading.reason)

    @app.post("/compare", response_model=ParityResponse)
    def compare(request: CompareRequest):
        try:
            log_a = read_session_text(request.a_jsonl)
            log_b = read_session_text(request.b_jsonl)
        except SchemaMismatch as exc:
            return JSONResponse({"type": "error", "reason": str(exc)}, status_code=400)
        try:
            report = compare_runs(log_a, log_b, request.field)
        except (NoOverlap, FieldMissing) as exc:
            return JSONResponse({"type": "error", "reason": str(exc)}, status_code=422)
        return ParityResponse(field=report.field_name, n=report.n, mae=report.mae,
                              sd_error=report.sd_error,
                              max_abs_error=report.max_abs_error)

    if ui_dir is not None and Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles
        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app


def serve(hub: SessionHub, host: str = "127.0.0.1", port: int = 8765,
          ui_dir: Optional[str] = None) -> None:
    """Run the gateway on a pre-bound socket; PortInUse if the bind fails."""
    import uvicorn

    app = build_app(hub, ui_dir=ui_dir)
    sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    try:
        sock.bind((host, port))
    except OSError as exc:
        sock.close()
        raise PortInUse(f"cannot bind {host}:{port} ({exc})") from None
    sock.listen(128)
    config = uvicorn.Config(app, log_level="warning")
    server = uvicorn.Server(config)
    if hub.on_stream_end is None:
        hub.on_stream_end = lambda: setattr(server, "should_exit", True)
    print(f"gateway listening on ws://{host}:{port}/live", file=sys.stderr)
    server.run(sockets=[sock])
