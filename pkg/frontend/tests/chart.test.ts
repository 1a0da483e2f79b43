import { describe, expect, it } from "vitest";

import { chromatogramSvg, ganttSvg } from "../src/chart.js";
import { parseTraceCsv } from "../src/csv.js";
import type { JobRow, TimelineResponse } from "../src/types.js";
import { fixtureJson, fixtureText } from "./helpers.js";

const job = fixtureJson<JobRow>("job_hplc.json");
const trace = parseTraceCsv(fixtureText("job_hplc_trace.csv"));
const timeline = fixtureJson<TimelineResponse>("job_hplc_timeline.json");

describe("parseTraceCsv", () => {
  it("parses the recorded trace", () => {
    expect(trace.length).toBe(751);
    expect(trace[0]).toEqual({ time_min: 0, signal: 0 });
    expect(trace[trace.length - 1].time_min).toBe(15);
  });

  it("rejects a bad header", () => {
    expect(() => parseTraceCsv("nope\n1,2")).toThrow(/header/);
  });

  it("the recorded maximum sits at the stored retention time", () => {
    const peak = trace.reduce((a, b) => (b.signal > a.signal ? b : a));
    expect(job.result?.type).toBe("hplc");
    if (job.result?.type === "hplc") {
      expect(Math.abs(peak.time_min - job.result.main_peak_rt_min)).toBeLessThanOrEqual(0.02);
    }
  });
});

describe("chromatogramSvg", () => {
  it("annotates the main peak at the stored 8.5 min retention time", () => {
    if (job.result?.type !== "hplc") throw new Error("fixture must be an hplc job");
    const rt = job.result.main_peak_rt_min;
    expect(rt).toBe(8.5);
    const svg = chromatogramSvg(trace, { peakRtMin: rt });
    expect(svg).toContain('class="peak-annotation"');
    expect(svg).toContain(">8.5 min</text>");
    // The annotation x position matches the time-axis mapping of 8.5 min.
    const tMax = trace[trace.length - 1].time_min;
    const expectedX = Math.round((44 + (rt / tMax) * (640 - 44 - 12)) * 100) / 100;
    expect(svg).toContain(`x1="${expectedX}"`);
  });

  it("is byte-identical for the same data", () => {
    const a = chromatogramSvg(trace, { peakRtMin: 8.5 });
    const b = chromatogramSvg(trace, { peakRtMin: 8.5 });
    expect(a).toBe(b);
  });

  it("renders an empty state without data", () => {
    expect(chromatogramSvg([])).toContain("no trace");
  });
});

describe("ganttSvg", () => {
  it("renders one span per timeline row", () => {
    const svg = ganttSvg(timeline.rows);
    expect(svg.match(/class="span/g)?.length).toBe(timeline.rows.length);
    for (const row of timeline.rows) {
      expect(svg).toContain(`>${row.state}</text>`);
    }
  });

  it("pending jobs show only the recorded rows", () => {
    const rows = timeline.rows.slice(0, 2); // Created / Scheduled only
    const svg = ganttSvg(rows);
    expect(svg.match(/class="span/g)?.length).toBe(2);
    expect(svg).not.toContain(">Completed</text>");
  });

  it("is deterministic", () => {
    expect(ganttSvg(timeline.rows)).toBe(ganttSvg(timeline.rows));
  });
});
