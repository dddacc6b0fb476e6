// Wire types for the gateway WebSocket. The dashboard consumes this schema
// verbatim: field names and payload values pass through untouched.

export interface HelloFrame {
  type: "hello";
  schema: string;
}

export interface TickFrame {
  type: "tick";
  tick: number;
  t_end_s: number;
  quality: string;
  scores: Record<string, number>;
  fhr_bpm: number | null;
  fhr_rho: number | null;
  fhr_absent_reason: string | null;
  ga_weeks: number | null;
  ga_windows: number;
  processing_ms: number;
  deadline_missed: boolean;
  // cumulative fan-out drops, present only on the frame where it grew
  dropped?: number;
}

export interface EventFrame {
  type: "event";
  kind: string;
  t_s: number;
}

export interface AckFrame {
  type: "ack";
  action: string;
}

export interface ErrorFrame {
  type: "error";
  reason: string;
}

export type ServerFrame =
  | HelloFrame
  | TickFrame
  | EventFrame
  | AckFrame
  | ErrorFrame;

export interface ControlMessage {
  type: "control";
  action: "stop" | "mark_reposition" | "set_noise";
  level?: number;
  note?: string;
}

const isNumberOrNull = (v: unknown) => v === null || typeof v === "number";

/** Parse one WebSocket text payload; null means the frame is malformed. */
export function parseFrame(text: string): ServerFrame | null {
  let data: unknown;
  try {
    data = JSON.parse(text);
  } catch {
    return null;
  }
  if (data === null || typeof data !== "object") return null;
  const frame = data as Record<string, unknown>;
  switch (frame.type) {
    case "hello":
      return typeof frame.schema === "string" ? (frame as unknown as HelloFrame) : null;
    case "tick":
      if (
        typeof frame.tick === "number" &&
        typeof frame.t_end_s === "number" &&
        typeof frame.quality === "string" &&
        isNumberOrNull(frame.fhr_bpm) &&
        isNumberOrNull(frame.fhr_rho) &&
        isNumberOrNull(frame.ga_weeks)
      ) {
        return frame as unknown as TickFrame;
      }
      return null;
    case "event":
      return typeof frame.kind === "string" && typeof frame.t_s === "number"
        ? (frame as unknown as EventFrame)
        : null;
    case "ack":
      return typeof frame.action === "string" ? (frame as unknown as AckFrame) : null;
    case "error":
      return typeof frame.reason === "string" ? (frame as unknown as ErrorFrame) : null;
    default:
      return null;
  }
}

// Badge color token per quality class; the view maps tokens to CSS.
export const BADGE_COLORS: Record<string, string> = {
  Good: "green",
  Poor: "amber",
  Interference: "purple",
  Talking: "blue",
  Silent: "gray",
};
