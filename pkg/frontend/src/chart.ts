// Strip-chart geometry and drawing. Layout is a pure function so the
// mapping from ticks to pixels is testable without a canvas; drawing is a
// thin pass over the computed layout.

import { ChartPoint, Marker, CHART_WINDOW_S } from "./reducer.js";

export const BPM_MIN = 50;
export const BPM_MAX = 240;
export const GRID_BPM = [60, 100, 140, 180, 220];

export interface ChartDot {
  x: number;
  y: number;
  alpha: number;
  quality: string;
}

export interface ChartLayout {
  dots: ChartDot[];
  markerXs: number[];
  gridYs: { bpm: number; y: number }[];
  rightEdgeS: number;
}

export function layoutChart(
  points: ChartPoint[],
  markers: Marker[],
  width: number,
  height: number,
): ChartLayout {
  const rightEdgeS = points.length ? points[points.length - 1].tEndS : 0;
  const leftEdgeS = rightEdgeS - CHART_WINDOW_S;
  const xOf = (tEndS: number) =>
    ((tEndS - leftEdgeS) / CHART_WINDOW_S) * width;
  const yOf = (bpm: number) =>
    height - ((bpm - BPM_MIN) / (BPM_MAX - BPM_MIN)) * height;

  const dots: ChartDot[] = [];
  for (const point of points) {
    if (point.fhrBpm === null) continue;
    const rho = point.rho === null ? 0 : Math.max(0, Math.min(1, point.rho));
    dots.push({
      x: xOf(point.tEndS),
      y: yOf(point.fhrBpm),
      // confidence shading: faint at rho 0, solid at rho 1
      alpha: 0.25 + 0.75 * rho,
      quality: point.quality,
    });
  }

  const markerXs = markers
    .filter((m) => m.tEndS >= leftEdgeS && m.tEndS <= rightEdgeS)
    .map((m) => xOf(m.tEndS));

  return {
    dots,
    markerXs,
    gridYs: GRID_BPM.map((bpm) => ({ bpm, y: yOf(bpm) })),
    rightEdgeS,
  };
}

export function drawChart(
  ctx: CanvasRenderingContext2D,
  layout: ChartLayout,
  width: number,
  height: number,
): void {
  ctx.clearRect(0, 0, width, height);

  ctx.strokeStyle = "#2a3442";
  ctx.fillStyle = "#7a8699";
  ctx.font = "10px system-ui, sans-serif";
  ctx.lineWidth = 1;
  for (const grid of layout.gridYs) {
    ctx.beginPath();
    ctx.moveTo(0, grid.y);
    ctx.lineTo(width, grid.y);
    ctx.stroke();
    ctx.fillText(`${grid.bpm}`, 4, grid.y - 3);
  }

  ctx.strokeStyle = "#e2b714";
  ctx.lineWidth = 1.5;
  for (const x of layout.markerXs) {
    ctx.beginPath();
    ctx.moveTo(x, 0);
    ctx.lineTo(x, height);
    ctx.stroke();
  }

  for (const dot of layout.dots) {
    ctx.globalAlpha = dot.alpha;
    ctx.fillStyle = dot.quality === "Good" ? "#4ade80" : "#9ca3af";
    ctx.beginPath();
    ctx.arc(dot.x, dot.y, 3, 0, Math.PI * 2);
    ctx.fill();
  }
  ctx.globalAlpha = 1;
}
