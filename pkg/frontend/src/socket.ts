// Connection state machine around a single WebSocket: connecting -> live ->
// dropped, with automatic retries backed off at 1 s, 2 s, 4 s (then steady
// at 4 s). A successful open resets the schedule. The constructor takes the
// socket factory and timer functions so tests can drive the machine without
// real sockets or real time.

import { ControlMessage, ServerFrame } from "./protocol.js";
import { UiEvent } from "./reducer.js";

export const RETRY_DELAYS_MS = [1000, 2000, 4000];

// Handler slots take `any` so a browser WebSocket satisfies the interface
// directly; the fakes in tests pass plain objects instead of DOM events.
export interface SocketLike {
  readyState: number;
  send(text: string): void;
  close(): void;
  onopen: ((event: any) => void) | null;
  onclose: ((event: any) => void) | null;
  onmessage: ((event: any) => void) | null;
}

export interface LiveSocketOptions {
  makeSocket: (url: string) => SocketLike;
  setTimeoutFn?: (fn: () => void, ms: number) => unknown;
  clearTimeoutFn?: (handle: unknown) => void;
  now?: () => number;
}

const SOCKET_OPEN = 1;

export class LiveSocket {
  private socket: SocketLike | null = null;
  private attempt = 0;
  private retryHandle: unknown = null;
  private stopped = false;

  constructor(
    private readonly url: string,
    private readonly dispatch: (event: UiEvent) => void,
    private readonly opts: LiveSocketOptions,
  ) {}

  connect(): void {
    if (this.stopped) return;
    const now = this.now();
    this.dispatch({ type: "socket", phase: "connecting", atMs: now });
    const socket = this.opts.makeSocket(this.url);
    this.socket = socket;
    socket.onopen = () => {
      this.attempt = 0;
      this.dispatch({ type: "socket", phase: "open", atMs: this.now() });
    };
    socket.onmessage = (event) => {
      this.dispatch({ type: "frame", raw: event.data, atMs: this.now() });
    };
    socket.onclose = () => {
      if (this.stopped) return;
      const delay = RETRY_DELAYS_MS[Math.min(this.attempt, RETRY_DELAYS_MS.length - 1)];
      this.attempt += 1;
      this.dispatch({
        type: "socket",
        phase: "closed",
        atMs: this.now(),
        retryDelayMs: delay,
      });
      const setTimeoutFn = this.opts.setTimeoutFn ?? setTimeout;
      this.retryHandle = setTimeoutFn(() => this.connect(), delay);
    };
  }

  /** Queue a control message; false when the socket is not open. */
  send(message: ControlMessage): boolean {
    if (!this.socket || this.socket.readyState !== SOCKET_OPEN) return false;
    this.socket.send(JSON.stringify(message));
    return true;
  }

  stop(): void {
    this.stopped = true;
    if (this.retryHandle !== null) {
      (this.opts.clearTimeoutFn ?? clearTimeout)(this.retryHandle as never);
      this.retryHandle = null;
    }
    this.socket?.close();
  }

  private now(): number {
    return this.opts.now ? this.opts.now() : Date.now();
  }
}

export type { ServerFrame };
