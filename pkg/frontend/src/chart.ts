// Pure SVG renderers: same data in, byte-identical markup out. No DOM needed,
// so they are directly snapshot-testable.

import type { TimelineRow, TracePoint } from "./types.js";

const WIDTH = 640;
const HEIGHT = 240;
const MARGIN = { left: 44, right: 12, top: 12, bottom: 28 };

function round2(value: number): number {
  return Math.round(value * 100) / 100;
}

export interface ChromatogramOptions {
  peakRtMin?: number; // annotate the stored main-peak retention time
  title?: string;
}

export function chromatogramSvg(points: TracePoint[], options: ChromatogramOptions = {}): string {
  if (points.length === 0) {
    return `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" class="chromatogram empty"><text x="20" y="40">no trace</text></svg>`;
  }
  const plotW = WIDTH - MARGIN.left - MARGIN.right;
  const plotH = HEIGHT - MARGIN.top - MARGIN.bottom;
  const tMax = points[points.length - 1].time_min || 1;
  const sMax = Math.max(...points.map((p) => p.signal), 1e-9);

  const x = (t: number) => round2(MARGIN.left + (t / tMax) * plotW);
  const y = (s: number) => round2(MARGIN.top + plotH - (s / sMax) * plotH);

  const path = points
    .map((p, i) => `${i === 0 ? "M" : "L"}${x(p.time_min)},${y(p.signal)}`)
    .join(" ");

  const parts = [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" class="chromatogram">`,
    `<rect x="${MARGIN.left}" y="${MARGIN.top}" width="${plotW}" height="${plotH}" fill="none" stroke="#ccc"/>`,
    `<path d="${path}" fill="none" stroke="#1668b8" stroke-width="1.5"/>`,
  ];
  if (options.peakRtMin !== undefined) {
    const px = x(options.peakRtMin);
    parts.push(
      `<line class="peak-annotation" x1="${px}" y1="${MARGIN.top}" x2="${px}" y2="${MARGIN.top + plotH}" stroke="#c0392b" stroke-dasharray="4 3"/>`,
      `<text class="peak-label" x="${px}" y="${MARGIN.top + 14}" fill="#c0392b" font-size="12" text-anchor="start" dx="4">${options.peakRtMin} min</text>`,
    );
  }
  parts.push(
    `<text x="${MARGIN.left}" y="${HEIGHT - 8}" font-size="11">0</text>`,
    `<text x="${MARGIN.left + plotW}" y="${HEIGHT - 8}" font-size="11" text-anchor="end">${tMax} min</text>`,
  );
  if (options.title) {
    parts.push(`<text x="${MARGIN.left}" y="${MARGIN.top - 2}" font-size="12">${options.title}</text>`);
  }
  parts.push("</svg>");
  return parts.join("\n");
}

// Gantt-style state timeline: one bar per state span, labelled with waits.
export function ganttSvg(rows: TimelineRow[], nowMin?: number): string {
  if (rows.length === 0) {
    return `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="60" class="timeline empty"><text x="20" y="30">no timeline</text></svg>`;
  }
  const rowH = 26;
  const height = MARGIN.top + rows.length * rowH + MARGIN.bottom;
  const start = rows[0].entered_at;
  const end = Math.max(nowMin ?? 0, rows[rows.length - 1].entered_at, start + 1);
  const plotW = WIDTH - 150 - MARGIN.right;
  const x = (t: number) => round2(150 + ((t - start) / (end - start)) * plotW);

  const parts = [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${height}" class="timeline">`,
  ];
  rows.forEach((row, i) => {
    const yTop = MARGIN.top + i * rowH;
    const spanEnd = i + 1 < rows.length ? rows[i + 1].entered_at : end;
    parts.push(
      `<text x="8" y="${yTop + 16}" font-size="12" class="state-label">${row.state}</text>`,
      `<rect class="span state-${row.state.toLowerCase()}" x="${x(row.entered_at)}" y="${yTop + 4}" width="${Math.max(round2(x(spanEnd) - x(row.entered_at)), 2)}" height="${rowH - 10}" fill="#7fb3d8"/>`,
      `<text x="${x(row.entered_at)}" y="${yTop + 16}" dx="4" font-size="10" class="entered-at">t=${row.entered_at}${row.waited_min ? ` (+${row.waited_min})` : ""}</text>`,
    );
  });
  parts.push("</svg>");
  return parts.join("\n");
}
