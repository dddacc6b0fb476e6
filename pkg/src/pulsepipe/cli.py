"""Operator command line.

    pulsepipe run --synth "bpm=140,dur=60,noise=0.05,seed=1" --out run.jsonl
    pulsepipe run --input session.wav --out run.jsonl --serve 8765
    pulsepipe transcribe-bp --image cuff.pgm
    pulsepipe compare --a run1.jsonl --b run2.jsonl --field fhr_bpm
    pulsepipe synth doppler --bpm 140 --dur 10 --out beat.wav
    pulsepipe synth lcd 104 65 72 --out cuff.pgm

Exit codes: 0 ok, 2 bad input, 3 network, 4 domain-invalid reading,
5 comparison failure. Data goes to stdout, diagnostics to stderr.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from .bp import get_detector, render_lcd, transcribe_bp
from .config import PipelineConfig, load_config
from .dsp import INTERNAL_RATE_HZ, SampleStream
from .errors import (CorruptHeader, EmptyStream, FieldMissing, ModelFailure,
                     NoGoodWindows, NoLcdFound, NoOverlap, OutOfRangeValue,
                     PortInUse, RowSplitFailure, SchemaMismatch,
                     ScorerFailure, SessionStopped, TruncatedData,
                     UndecodablePattern, UnsupportedFormat)
from .pipeline import PipelineSession
from .service.app import SessionHub, serve
from .service.sources import FileSource, SynthSource
from .sessionio import (SessionWriter, compare_runs, load_pgm, load_wav,
                        read_session, save_pgm, save_wav)
from .synth import synth_class, synth_doppler

_EXIT_INPUT = (UnsupportedFormat, CorruptHeader, TruncatedData, OutOfRangeValue,
               SchemaMismatch, EmptyStream, FileNotFoundError,
               IsADirectoryError, PermissionError, ValueError)
_EXIT_NETWORK = (PortInUse, ConnectionError)
_EXIT_DOMAIN = (NoLcdFound, UndecodablePattern, RowSplitFailure, SessionStopped,
                ModelFailure, ScorerFailure, NoGoodWindows)
_EXIT_COMPARISON = (NoOverlap, FieldMissing)

_SYNTH_KEYS = {"bpm": float, "dur": float, "noise": float, "seed": int}


def _parse_synth_spec(spec: str) -> dict:
    """Parse 'bpm=140,dur=60,noise=0.05,seed=1' (all keys optional)."""
    values = {"bpm": 140.0, "dur": 60.0, "noise": 0.05, "seed": 1}
    if not spec.strip():
        return values
    for part in spec.split(","):
        key, _, raw = part.partition("=")
        key = key.strip()
        if key not in _SYNTH_KEYS or not raw.strip():
            raise ValueError(f"bad synth spec entry {part!r} "
                             f"(keys: {', '.join(sorted(_SYNTH_KEYS))})")
        values[key] = _SYNTH_KEYS[key](raw.strip())
    return values


def _parse_speed(text: str):
    if text == "max":
        return "max"
    try:
        speed = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"--speed must be 'max' or a positive number, got {text!r}")
    if speed <= 0:
        raise argparse.ArgumentTypeError("--speed must be positive")
    return speed


def _cmd_run(args) -> int:
    config = load_config(args.config) if args.config else PipelineConfig()
    chunk = args.chunk if args.chunk is not None else config.chunk_samples
    if args.synth is not None:
        spec = _parse_synth_spec(args.synth)
        source = SynthSource(bpm=spec["bpm"], duration_s=spec["dur"],
                             noise_level=spec["noise"], seed=spec["seed"],
                             chunk_samples=chunk)
    else:
        stream = load_wav(args.input)
        source = FileSource(stream, name=Path(args.input).name, chunk_samples=chunk)

    session = PipelineSession(config)
    writer = SessionWriter(args.out, config, source.describe)

    if args.serve is not None:
        hub = SessionHub(session, source=source, writer=writer, speed=args.speed)
        serve(hub, host=args.host, port=args.serve, ui_dir=args.ui_dir)
        return 0

    session.start(source.describe)
    pace = None if args.speed == "max" else float(args.speed)
    deadline = time.monotonic()
    for chunk_arr in source.chunks():
        for report in session.feed(chunk_arr):
            writer.write_tick(report)
        if pace is not None:
            deadline += len(chunk_arr) / INTERNAL_RATE_HZ / pace
            delay = deadline - time.monotonic()
            if delay > 0:
                time.sleep(delay)
    writer.close(session.stop())
    return 0


def _cmd_transcribe_bp(args) -> int:
    image = load_pgm(args.image)
    detector = get_detector(args.detector) if args.detector else None
    try:
        reading = transcribe_bp(image, detector)
    except NoLcdFound:
        print(json.dumps({"valid": False, "reason": "no_lcd_found"}))
        return 4
    except RowSplitFailure:
        print(json.dumps({"valid": False, "reason": "row_split_failure"}))
        return 4
    except UndecodablePattern as exc:
        print(json.dumps({"valid": False, "reason": "undecodable_pattern",
                          "row": exc.row, "cell": exc.cell}))
        return 4
    payload = {"systolic": reading.systolic_mmhg, "diastolic": reading.diastolic_mmhg,
               "pulse": reading.pulse_bpm, "valid": reading.valid}
    if reading.reason is not None:
        payload["reason"] = reading.reason
    print(json.dumps(payload))
    return 0 if reading.valid else 4


def _cmd_compare(args) -> int:
    report = compare_runs(read_session(args.a), read_session(args.b), args.field)
    print(json.dumps({"field": report.field_name, "n": report.n, "mae": report.mae,
                      "sd_error": report.sd_error,
                      "max_abs_error": report.max_abs_error}))
    return 0


def _cmd_synth_doppler(args) -> int:
    stream = synth_doppler(args.bpm, args.dur, args.noise, args.seed)
    save_wav(args.out, stream)
    return 0


def _cmd_synth_class(args) -> int:
    segment = synth_class(args.name, args.seed)
    save_wav(args.out, SampleStream(rate_hz=INTERNAL_RATE_HZ, samples=segment.samples))
    return 0


def _cmd_synth_lcd(args) -> int:
    save_pgm(args.out, render_lcd(args.systolic, args.diastolic, args.pulse,
                                  width=args.width, height=args.height))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pulsepipe",
                                     description="streaming perinatal screening toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="stream audio through the pipeline, write a session log")
    source = run.add_mutually_exclusive_group(required=True)
    source.add_argument("--input", help="WAV file (PCM16 mono)")
    source.add_argument("--synth", help='synthetic source, e.g. "bpm=140,dur=60,noise=0.05,seed=1"')
    run.add_argument("--out", required=True, help="session log path (JSONL)")
    run.add_argument("--serve", type=int, metavar="PORT",
                     help="expose the live session over WebSocket/REST")
    run.add_argument("--host", default="127.0.0.1")
    run.add_argument("--speed", type=_parse_speed, default="max",
                     help="'max' (default) or a real-time factor like 1.0")
    run.add_argument("--config", help="JSON config overriding pipeline thresholds")
    run.add_argument("--chunk", type=int, help="feed granularity in samples (default 400)")
    run.add_argument("--ui-dir", help="serve a static dashboard bundle at /ui")
    run.set_defaults(handler=_cmd_run)

    tbp = sub.add_parser("transcribe-bp", help="read a cuff display photo (PGM)")
    tbp.add_argument("--image", required=True)
    tbp.add_argument("--detector", help="LCD detector name or module:attr path")
    tbp.set_defaults(handler=_cmd_transcribe_bp)

    cmp_cmd = sub.add_parser("compare", help="MAE/SD parity between two session logs")
    cmp_cmd.add_argument("--a", required=True)
    cmp_cmd.add_argument("--b", required=True)
    cmp_cmd.add_argument("--field", default="fhr_bpm")
    cmp_cmd.set_defaults(handler=_cmd_compare)

    synth = sub.add_parser("synth", help="write deterministic fixture files")
    synth_sub = synth.add_subparsers(dest="kind", required=True)

    doppler = synth_sub.add_parser("doppler", help="heartbeat audio fixture (WAV)")
    doppler.add_argument("--bpm", type=float, default=140.0)
    doppler.add_argument("--dur", type=float, default=10.0)
    doppler.add_argument("--noise", type=float, default=0.05)
    doppler.add_argument("--seed", type=int, default=1)
    doppler.add_argument("--out", required=True)
    doppler.set_defaults(handler=_cmd_synth_doppler)

    klass = synth_sub.add_parser("class", help="one labeled quality-class window (WAV)")
    klass.add_argument("name", choices=("Good", "Poor", "Interference", "Talking", "Silent"))
    klass.add_argument("--seed", type=int, default=1)
    klass.add_argument("--out", required=True)
    klass.set_defaults(handler=_cmd_synth_class)

    lcd = synth_sub.add_parser("lcd", help="cuff display render (PGM)")
    lcd.add_argument("systolic", type=int)
    lcd.add_argument("diastolic", type=int)
    lcd.add_argument("pulse", type=int)
    lcd.add_argument("--width", type=int, default=480)
    lcd.add_argument("--height", type=int, default=300)
    lcd.add_argument("--out", required=True)
    lcd.set_defaults(handler=_cmd_synth_lcd)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except _EXIT_NETWORK as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except _EXIT_COMPARISON as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 5
    except _EXIT_DOMAIN as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except _EXIT_INPUT as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entrypoint() -> None:
    sys.exit(main())
