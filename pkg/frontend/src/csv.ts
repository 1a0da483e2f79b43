import type { TracePoint } from "./types.js";

// Parses the service's chromatogram export: "time_min,signal" header then
// one numeric pair per line.
export function parseTraceCsv(text: string): TracePoint[] {
  const lines = text.trim().split("\n");
  if (lines.length === 0 || lines[0] !== "time_min,signal") {
    throw new Error(`unexpected trace header: ${lines[0] ?? "<empty>"}`);
  }
  const points: TracePoint[] = [];
  for (const line of lines.slice(1)) {
    const [time, signal] = line.split(",");
    const timeMin = Number(time);
    const value = Number(signal);
    if (!Number.isFinite(timeMin) || !Number.isFinite(value)) {
      throw new Error(`bad trace row: ${line}`);
    }
    points.push({ time_min: timeMin, signal: value });
  }
  return points;
}
