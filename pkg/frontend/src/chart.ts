// Canvas renderer for the ACR curve: one polyline point per iteration,
// translucent bands for the operational states, a dashed threshold line and
// a disruption strip along the bottom.

import type { RunViewModel } from "./viewmodel.js";
import { closedBands } from "./viewmodel.js";

const BAND_COLORS: Record<string, string> = {
  unstarted: "rgba(160, 160, 160, 0.18)",
  steady: "rgba(76, 175, 80, 0.15)",
  performance_degradation: "rgba(244, 67, 54, 0.25)",
  recovering: "rgba(255, 152, 0, 0.18)",
  recovered: "rgba(33, 150, 243, 0.22)",
};

const MARGIN = { left: 42, right: 12, top: 10, bottom: 26 };

export function drawChart(canvas: HTMLCanvasElement, vm: RunViewModel): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const width = canvas.width;
  const height = canvas.height;
  ctx.clearRect(0, 0, width, height);

  const plotW = width - MARGIN.left - MARGIN.right;
  const plotH = height - MARGIN.top - MARGIN.bottom;
  const maxIter = Math.max(vm.lastIteration, 30);
  const x = (iteration: number) =>
    MARGIN.left + (iteration / Math.max(maxIter, 1)) * plotW;
  const y = (acr: number) => MARGIN.top + (1 - acr) * plotH;

  for (const band of closedBands(vm)) {
    ctx.fillStyle = BAND_COLORS[band.state] ?? "rgba(0,0,0,0.05)";
    const x0 = x(band.start);
    const x1 = x(band.end ?? maxIter + 1);
    ctx.fillRect(x0, MARGIN.top, Math.max(x1 - x0, 1), plotH);
  }

  ctx.strokeStyle = "#888";
  ctx.lineWidth = 1;
  ctx.strokeRect(MARGIN.left, MARGIN.top, plotW, plotH);
  ctx.fillStyle = "#555";
  ctx.font = "10px sans-serif";
  for (const tick of [0, 0.25, 0.5, 0.75, 1]) {
    ctx.fillText(tick.toFixed(2), 8, y(tick) + 3);
    ctx.strokeStyle = "rgba(0,0,0,0.06)";
    ctx.beginPath();
    ctx.moveTo(MARGIN.left, y(tick));
    ctx.lineTo(width - MARGIN.right, y(tick));
    ctx.stroke();
  }
  const step = niceStep(maxIter);
  for (let i = 0; i <= maxIter; i += step) {
    ctx.fillText(String(i), x(i) - 6, height - 10);
  }

  if (vm.threshold !== null) {
    ctx.strokeStyle = "#c2185b";
    ctx.setLineDash([6, 4]);
    ctx.beginPath();
    ctx.moveTo(MARGIN.left, y(vm.threshold));
    ctx.lineTo(width - MARGIN.right, y(vm.threshold));
    ctx.stroke();
    ctx.setLineDash([]);
    ctx.fillStyle = "#c2185b";
    ctx.fillText(`threshold ${vm.threshold.toFixed(2)}`,
                 width - 110, y(vm.threshold) - 4);
  }

  // disruption strip
  for (const point of vm.points) {
    if (point.mode === "disrupted") {
      ctx.fillStyle = "rgba(97, 57, 133, 0.5)";
      ctx.fillRect(x(point.iteration), MARGIN.top + plotH + 2,
                   Math.max(plotW / Math.max(maxIter, 1), 1), 4);
    }
  }

  if (vm.points.length > 0) {
    ctx.strokeStyle = "#1a237e";
    ctx.lineWidth = 1.6;
    ctx.beginPath();
    ctx.moveTo(x(vm.points[0].iteration), y(vm.points[0].acr));
    for (const point of vm.points.slice(1)) {
      ctx.lineTo(x(point.iteration), y(point.acr));
    }
    ctx.stroke();
  }
}

function niceStep(maxIter: number): number {
  const raw = Math.max(maxIter / 8, 1);
  const pow = Math.pow(10, Math.floor(Math.log10(raw)));
  for (const mult of [1, 2, 5, 10]) {
    if (raw <= mult * pow) return Math.max(1, Math.round(mult * pow));
  }
  return Math.max(1, Math.round(raw));
}
