// SVG line chart for forecast trajectories. Every plotted point carries
// the raw payload value in data-* attributes (data-crop / data-month /
// data-price) so tests — and anyone inspecting the DOM — can trace each
// number on screen back to the /forecast JSON. Pixel placement is the
// only arithmetic done here.

import type { Forecast } from "./types.js";

const WIDTH = 640;
const HEIGHT = 260;
const PAD = { left: 64, right: 16, top: 16, bottom: 36 };

const PALETTE = ["#2e7d32", "#c62828", "#1565c0", "#ef6c00", "#6a1b9a", "#00838f"];

export function cropColor(index: number): string {
  return PALETTE[index % PALETTE.length]!;
}

function escapeXml(value: string): string {
  return value
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderForecastChart(host: HTMLElement, forecasts: Forecast[]): void {
  const all = forecasts.flatMap((f) => f.trajectory);
  if (all.length === 0) {
    host.innerHTML = '<p class="chart-empty">No trajectory to plot yet.</p>';
    return;
  }
  const months = Math.max(...forecasts.map((f) => f.trajectory.length));
  const lo = Math.min(...all);
  const hi = Math.max(...all);
  const span = hi - lo || 1; // flat series still needs a finite scale

  const innerW = WIDTH - PAD.left - PAD.right;
  const innerH = HEIGHT - PAD.top - PAD.bottom;
  const x = (month: number) =>
    months === 1 ? PAD.left + innerW / 2 : PAD.left + ((month - 1) / (months - 1)) * innerW;
  const y = (price: number) => PAD.top + innerH - ((price - lo) / span) * innerH;

  const gridlines: string[] = [];
  for (let i = 0; i <= 3; i++) {
    const value = lo + (i / 3) * (hi - lo);
    const gy = y(value);
    gridlines.push(
      `<line class="grid" x1="${PAD.left}" y1="${gy}" x2="${WIDTH - PAD.right}" y2="${gy}"/>` +
        `<text class="tick" x="${PAD.left - 8}" y="${gy + 4}" text-anchor="end">₹${value.toFixed(2)}</text>`
    );
    if (hi === lo) break; // one labelled line is enough for a flat chart
  }

  const monthTicks: string[] = [];
  for (let m = 1; m <= months; m++) {
    monthTicks.push(
      `<text class="tick" x="${x(m)}" y="${HEIGHT - PAD.bottom + 20}" text-anchor="middle">+${m}</text>`
    );
  }

  const series = forecasts.map((forecast, idx) => {
    const color = cropColor(idx);
    const crop = escapeXml(forecast.crop);
    const points = forecast.trajectory
      .map((price, i) => `${x(i + 1)},${y(price)}`)
      .join(" ");
    const dots = forecast.trajectory
      .map((price, i) => {
        const month = i + 1;
        const title = `${crop}, month +${month}: ₹${price.toFixed(2)}/kg`;
        return (
          `<circle class="dot" cx="${x(month)}" cy="${y(price)}" r="4" fill="${color}"` +
          ` data-crop="${crop}" data-month="${month}" data-price="${price}">` +
          `<title>${title}</title></circle>`
        );
      })
      .join("");
    return (
      `<g data-series="${crop}">` +
      `<polyline fill="none" stroke="${color}" stroke-width="2" points="${points}"/>` +
      dots +
      `</g>`
    );
  });

  const legend = forecasts
    .map((forecast, idx) => {
      const crop = escapeXml(forecast.crop);
      return (
        `<span class="legend-item" data-crop="${crop}">` +
        `<span class="swatch" style="background:${cropColor(idx)}"></span>${crop}` +
        ` (${forecast.horizon_months} mo)</span>`
      );
    })
    .join("");

  host.innerHTML =
    `<svg viewBox="0 0 ${WIDTH} ${HEIGHT}" role="img" aria-label="forecast price trajectories">` +
    gridlines.join("") +
    monthTicks.join("") +
    series.join("") +
    `</svg>` +
    `<div class="legend">${legend}</div>` +
    `<p class="chart-readout" data-role="readout" aria-live="polite"></p>`;

  const readout = host.querySelector<HTMLElement>('[data-role="readout"]');
  host.querySelectorAll<SVGCircleElement>("circle.dot").forEach((dot) => {
    dot.addEventListener("mouseenter", () => {
      if (!readout) return;
      const { crop, month, price } = dot.dataset;
      readout.textContent = `${crop}, month +${month}: ₹${Number(price).toFixed(2)}/kg`;
    });
  });
}
