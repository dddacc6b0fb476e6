// Wire-up: one socket, one reducer, renders coalesced per animation frame.

import { LiveSocket } from "./socket.js";
import { UiEvent, UiState, initialState, reduce } from "./reducer.js";
import { buildView } from "./view.js";

function gatewayUrl(): string {
  const override = new URLSearchParams(window.location.search).get("ws");
  if (override) return override;
  const proto = window.location.protocol === "https:" ? "wss:" : "ws:";
  return `${proto}//${window.location.host}/live`;
}

function start(): void {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app mount point");
  const view = buildView(root);

  let state: UiState = initialState(Date.now());
  let renderQueued = false;

  function render(): void {
    renderQueued = false;
    view.update(state);
  }

  function scheduleRender(): void {
    if (renderQueued) return;
    renderQueued = true;
    requestAnimationFrame(render);
  }

  function dispatch(event: UiEvent): void {
    state = reduce(state, event);
    if (state.outbox.length > 0) {
      for (const message of state.outbox) socket.send(message);
      state = { ...state, outbox: [] };
    }
    scheduleRender();
  }

  const socket = new LiveSocket(gatewayUrl(), dispatch, {
    makeSocket: (url) => new WebSocket(url),
  });

  view.repositionButton.addEventListener("click", () =>
    dispatch({ type: "click-reposition", atMs: Date.now() }),
  );
  view.displaceButton.addEventListener("click", () =>
    dispatch({ type: "toggle-displaced", atMs: Date.now() }),
  );

  window.setInterval(() => dispatch({ type: "clock", atMs: Date.now() }), 500);

  socket.connect();
  render();
}

start();
