// Pure UI state machine. The whole dashboard state is a function of the
// received frame sequence plus local control history, so every behaviour
// here is snapshot-testable without a browser or a socket.
//
// Outbound control messages are queued on `state.outbox`; the wiring layer
// drains the queue after each dispatch. Frames are never mutated — tick
// points keep the payload values as parsed, and display strings are the
// unrounded String() form of those values.

import {
  BADGE_COLORS,
  ControlMessage,
  EventFrame,
  TickFrame,
  parseFrame,
} from "./protocol.js";

export const CHART_WINDOW_S = 60;
export const STALE_AFTER_MS = 30_000;
export const ACK_TIMEOUT_MS = 2_000;
export const DISPLACED_NOISE_LEVEL = 1.0;
export const RESTORED_NOISE_LEVEL = 0.0;

export type Connection = "connecting" | "live" | "dropped";

export interface ChartPoint {
  tick: number;
  tEndS: number;
  fhrBpm: number | null;
  rho: number | null;
  quality: string;
}

export interface Marker {
  tEndS: number;
}

export interface UiState {
  connection: Connection;
  schema: string | null;
  nowMs: number;
  retryAtMs: number | null;
  // chart
  points: ChartPoint[];
  markers: Marker[];
  lastTick: number | null;
  // headline readouts (exact payload characters)
  badge: string | null;
  badgeColor: string | null;
  fhrText: string;
  fhrAbsentReason: string | null;
  gaText: string;
  gaWindows: number;
  // health
  lastFrameAtMs: number | null;
  stale: boolean;
  deadlineMisses: number;
  droppedFrames: number;
  malformedFrames: number;
  inlineError: string | null;
  events: EventFrame[];
  // controls
  repositionPending: { sentAtMs: number } | null;
  toast: string | null;
  displaced: boolean;
  outbox: ControlMessage[];
}

export type UiEvent =
  | { type: "socket"; phase: "connecting" | "open"; atMs: number }
  | { type: "socket"; phase: "closed"; atMs: number; retryDelayMs: number }
  | { type: "frame"; raw: string; atMs: number }
  | { type: "clock"; atMs: number }
  | { type: "click-reposition"; atMs: number }
  | { type: "toggle-displaced"; atMs: number };

export function initialState(nowMs: number): UiState {
  return {
    connection: "connecting",
    schema: null,
    nowMs,
    retryAtMs: null,
    points: [],
    markers: [],
    lastTick: null,
    badge: null,
    badgeColor: null,
    fhrText: "--",
    fhrAbsentReason: null,
    gaText: "--",
    gaWindows: 0,
    lastFrameAtMs: null,
    stale: false,
    deadlineMisses: 0,
    droppedFrames: 0,
    malformedFrames: 0,
    inlineError: null,
    events: [],
    repositionPending: null,
    toast: null,
    displaced: false,
    outbox: [],
  };
}

function withClock(state: UiState, atMs: number): UiState {
  const next = { ...state, nowMs: atMs };
  next.stale =
    next.connection === "live" &&
    next.lastFrameAtMs !== null &&
    atMs - next.lastFrameAtMs >= STALE_AFTER_MS;
  if (next.repositionPending && atMs - next.repositionPending.sentAtMs >= ACK_TIMEOUT_MS) {
    next.repositionPending = null;
    next.toast = "reposition not acknowledged";
  }
  return next;
}

function applyTick(state: UiState, frame: TickFrame): UiState {
  // Reconnects must not duplicate chart points: the gateway never replays,
  // so an index at or below the newest one is a stray duplicate.
  if (state.lastTick !== null && frame.tick <= state.lastTick) return state;
  const point: ChartPoint = {
    tick: frame.tick,
    tEndS: frame.t_end_s,
    fhrBpm: frame.fhr_bpm,
    rho: frame.fhr_rho,
    quality: frame.quality,
  };
  const horizon = frame.t_end_s - CHART_WINDOW_S;
  const points = state.points.filter((p) => p.tEndS > horizon);
  points.push(point);
  return {
    ...state,
    points,
    lastTick: frame.tick,
    badge: frame.quality,
    badgeColor: BADGE_COLORS[frame.quality] ?? "gray",
    fhrText: frame.fhr_bpm === null ? "--" : String(frame.fhr_bpm),
    fhrAbsentReason: frame.fhr_absent_reason,
    gaText: frame.ga_weeks === null ? "--" : String(frame.ga_weeks),
    gaWindows: frame.ga_windows,
    deadlineMisses: state.deadlineMisses + (frame.deadline_missed ? 1 : 0),
    droppedFrames: frame.dropped ?? state.droppedFrames,
  };
}

function applyFrame(state: UiState, raw: string, atMs: number): UiState {
  const frame = parseFrame(raw);
  if (frame === null) {
    return { ...state, malformedFrames: state.malformedFrames + 1 };
  }
  const seen = { ...state, lastFrameAtMs: atMs, stale: false };
  switch (frame.type) {
    case "hello":
      return { ...seen, schema: frame.schema };
    case "tick":
      return applyTick(seen, frame);
    case "event":
      return { ...seen, events: [...seen.events, frame].slice(-20) };
    case "ack":
      if (frame.action === "mark_reposition") {
        const at = seen.points.length ? seen.points[seen.points.length - 1].tEndS : 0;
        return {
          ...seen,
          markers: [...seen.markers, { tEndS: at }],
          repositionPending: null,
          toast: null,
        };
      }
      return seen;
    case "error":
      return { ...seen, inlineError: frame.reason };
  }
}

export function reduce(state: UiState, event: UiEvent): UiState {
  switch (event.type) {
    case "socket":
      if (event.phase === "closed") {
        return {
          ...state,
          connection: "dropped",
          retryAtMs: event.atMs + event.retryDelayMs,
          repositionPending: null,
          stale: false,
          nowMs: event.atMs,
        };
      }
      if (event.phase === "open") {
        return { ...state, connection: "live", retryAtMs: null, nowMs: event.atMs };
      }
      return { ...state, connection: "connecting", retryAtMs: null };
    case "frame":
      return applyFrame(withClock(state, event.atMs), event.raw, event.atMs);
    case "clock":
      return withClock(state, event.atMs);
    case "click-reposition": {
      if (state.connection !== "live" || state.repositionPending) return state;
      const outbox: ControlMessage[] = [];
      let displaced = state.displaced;
      if (displaced) {
        outbox.push({ type: "control", action: "set_noise", level: RESTORED_NOISE_LEVEL });
        displaced = false;
      }
      outbox.push({ type: "control", action: "mark_reposition" });
      return {
        ...withClock(state, event.atMs),
        displaced,
        repositionPending: { sentAtMs: event.atMs },
        toast: null,
        outbox: [...state.outbox, ...outbox],
      };
    }
    case "toggle-displaced": {
      if (state.connection !== "live") return state;
      const displaced = !state.displaced;
      const level = displaced ? DISPLACED_NOISE_LEVEL : RESTORED_NOISE_LEVEL;
      return {
        ...withClock(state, event.atMs),
        displaced,
        outbox: [...state.outbox, { type: "control", action: "set_noise", level }],
      };
    }
  }
}
