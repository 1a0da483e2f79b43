// String renderers for every panel. Presentation only: each number shown is
// read from an API payload field, never recomputed.

import type { Approval, CycleDetail, JobRow, TranscriptEntry } from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}

export function renderTranscript(entries: TranscriptEntry[]): string {
  const rows = entries.map((entry) => {
    const refusal = entry.speaker === "SafetyGuardrail" ? " refusal" : "";
    const who = entry.speaker === "user" ? "user" : "agent";
    return [
      `<div class="message ${who}${refusal}" data-ts="${entry.ts}">`,
      `<span class="speaker">${escapeHtml(entry.speaker)}</span>`,
      `<span class="text">${escapeHtml(entry.text).replaceAll("\n", "<br>")}</span>`,
      `</div>`,
    ].join("");
  });
  return `<div class="transcript">${rows.join("\n")}</div>`;
}

function resultCell(job: JobRow): string {
  if (!job.result) {
    return job.cancelled ? "cancelled" : "-";
  }
  if (job.result.type === "hplc") {
    return `rt ${job.result.main_peak_rt_min} min / purity ${job.result.purity_pct}%`;
  }
  return `${job.result.mass_mg} mg / yield ${job.result.yield_pct}%`;
}

export function renderJobTable(jobs: JobRow[]): string {
  const header =
    "<tr><th>id</th><th>kind</th><th>target</th><th>state</th><th>result</th><th>docs</th></tr>";
  const rows = jobs.map(
    (job) =>
      `<tr class="job state-${job.state.toLowerCase()}" data-job-id="${job.id}">` +
      `<td>${job.id}</td><td>${job.kind}</td>` +
      `<td class="target">${escapeHtml(job.target)}</td>` +
      `<td class="state">${job.cancelled ? "Cancelled" : job.state}</td>` +
      `<td>${escapeHtml(resultCell(job))}</td>` +
      `<td>${job.attachments.length}</td></tr>`,
  );
  return `<table class="jobs">${header}${rows.join("\n")}</table>`;
}

export interface ApprovalEdit {
  [key: string]: unknown;
}

// Client-side range checks mirroring the service's parameter schema; an
// out-of-range edit never leaves the browser.
const PARAM_RANGES: Record<string, [number, number]> = {
  temperature_c: [-20, 250],
  time_min: [1, 600],
  reagent_equiv: [0.1, 10],
  flow_ml_min: [0.1, 5],
  detection_nm: [190, 800],
};

export function validateEdit(edits: ApprovalEdit): string | null {
  for (const [key, value] of Object.entries(edits)) {
    const range = PARAM_RANGES[key];
    if (range && typeof value === "number") {
      const [lo, hi] = range;
      if (value < lo || value > hi) {
        return `${key} must be within [${lo}, ${hi}]`;
      }
    }
  }
  return null;
}

export function renderApprovalCard(approval: Approval): string {
  const params = Object.entries(approval.proposed_params)
    .sort(([a], [b]) => (a < b ? -1 : 1))
    .map(([key, value]) => `<li>${escapeHtml(key)}: ${escapeHtml(String(value))}</li>`)
    .join("");
  const actions =
    approval.state === "Pending"
      ? `<button data-action="approve" data-id="${approval.id}">Approve</button>` +
        `<button data-action="edit" data-id="${approval.id}">Edit</button>` +
        `<button data-action="reject" data-id="${approval.id}">Reject</button>`
      : `<span class="decided">${approval.state}</span>`;
  return (
    `<div class="approval ${approval.state.toLowerCase()}" data-approval-id="${approval.id}">` +
    `<h4>Approval ${approval.id} for job ${approval.job_id}</h4>` +
    `<ul class="params">${params}</ul>` +
    `<div class="actions">${actions}</div></div>`
  );
}

export function renderCycleProgress(cycle: CycleDetail): string {
  const width = 520;
  const height = 160;
  const evals = cycle.evaluations;
  if (evals.length === 0) {
    return `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" class="cycle empty"></svg>`;
  }
  const scores = evals.map((e) => e.score);
  const lo = Math.min(...scores);
  const hi = Math.max(...scores, lo + 1e-9);
  const x = (i: number) => 30 + (i / Math.max(evals.length - 1, 1)) * (width - 50);
  const y = (s: number) => 10 + (1 - (s - lo) / (hi - lo)) * (height - 40);
  const points = evals.map((e, i) => `${x(i).toFixed(1)},${y(e.score).toFixed(1)}`).join(" ");
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" class="cycle">` +
    `<polyline points="${points}" fill="none" stroke="#2d7d46" stroke-width="1.5"/>` +
    `<text x="30" y="${height - 8}" font-size="11">${evals.length} evaluations, ` +
    `target rt ${cycle.target_rt_min} min, ${cycle.stop_reason ?? cycle.status}</text></svg>`
  );
}
