// DOM bindings: build the static layout once, then update() paints the
// current UiState into it. All numbers shown come straight off the state's
// display strings — no formatting or rounding in this layer.

import { drawChart, layoutChart } from "./chart.js";
import { UiState } from "./reducer.js";

const BADGE_CSS: Record<string, string> = {
  green: "#15803d",
  amber: "#b45309",
  purple: "#7e22ce",
  blue: "#1d4ed8",
  gray: "#4b5563",
};

export interface ViewHandles {
  repositionButton: HTMLButtonElement;
  displaceButton: HTMLButtonElement;
  update(state: UiState): void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className: string,
  parent: HTMLElement,
  text = "",
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  node.className = className;
  if (text) node.textContent = text;
  parent.appendChild(node);
  return node;
}

export function buildView(root: HTMLElement): ViewHandles {
  root.innerHTML = "";

  const banner = el("div", "banner hidden", root);

  const header = el("div", "header", root);
  const badge = el("div", "badge", header, "--");
  const headline = el("div", "headline", header);
  const fhrValue = el("div", "fhr-value", headline, "--");
  el("div", "fhr-label", headline, "FHR (BPM)");
  const gaBox = el("div", "ga-box", header);
  const gaValue = el("div", "ga-value", gaBox, "--");
  const gaLabel = el("div", "ga-label", gaBox, "gestational age (weeks)");

  const canvas = el("canvas", "chart", root);
  canvas.width = 800;
  canvas.height = 220;

  const controls = el("div", "controls", root);
  const repositionButton = el("button", "btn", controls, "Mark reposition");
  const displaceButton = el("button", "btn", controls, "Displace probe");
  const toast = el("span", "toast hidden", controls);

  const statusRow = el("div", "status-row", root);
  const connection = el("span", "status", statusRow);
  const deadline = el("span", "status", statusRow);
  const counters = el("span", "status", statusRow);
  const inlineError = el("span", "status error hidden", statusRow);

  const eventFeed = el("ul", "events", root);

  function update(state: UiState): void {
    // top banner: dropped beats stale
    if (state.connection === "dropped") {
      const waitMs = state.retryAtMs === null ? 0 : Math.max(0, state.retryAtMs - state.nowMs);
      banner.textContent = `connection dropped — retrying in ${Math.ceil(waitMs / 1000)} s`;
      banner.className = "banner dropped";
    } else if (state.stale) {
      banner.textContent = "no frames for 30 s — check the session";
      banner.className = "banner stale";
    } else {
      banner.className = "banner hidden";
    }

    badge.textContent = state.badge ?? "--";
    badge.style.background = BADGE_CSS[state.badgeColor ?? "gray"];

    fhrValue.textContent = state.fhrText;
    fhrValue.title = state.fhrAbsentReason ?? "";
    gaValue.textContent = state.gaText;
    gaLabel.textContent = `gestational age (weeks) · ${state.gaWindows} windows`;

    const ctx = canvas.getContext("2d");
    if (ctx) {
      drawChart(ctx, layoutChart(state.points, state.markers, canvas.width, canvas.height),
                canvas.width, canvas.height);
    }

    repositionButton.disabled =
      state.connection !== "live" || state.repositionPending !== null;
    displaceButton.disabled = state.connection !== "live";
    displaceButton.textContent = state.displaced ? "Restore probe" : "Displace probe";

    if (state.toast) {
      toast.textContent = state.toast;
      toast.className = "toast";
    } else {
      toast.className = "toast hidden";
    }

    connection.textContent = `link: ${state.connection}${state.schema ? " · " + state.schema : ""}`;
    deadline.textContent = state.deadlineMisses > 0
      ? `deadline misses: ${state.deadlineMisses}`
      : "deadlines: ok";
    deadline.classList.toggle("error", state.deadlineMisses > 0);
    counters.textContent =
      `dropped frames: ${state.droppedFrames} · malformed: ${state.malformedFrames}`;

    if (state.inlineError) {
      inlineError.textContent = `gateway error: ${state.inlineError}`;
      inlineError.className = "status error";
    } else {
      inlineError.className = "status error hidden";
    }

    eventFeed.innerHTML = "";
    for (const event of state.events.slice(-6).reverse()) {
      el("li", "event", eventFeed, `${String(event.t_s)} s — ${event.kind}`);
    }
  }

  return { repositionButton, displaceButton, update };
}
