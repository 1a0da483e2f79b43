// Browser bootstrap: wires the API client, stream, reducer, and renderers to
// the DOM. All state changes flow through the reducer; renders are full
// re-renders of small panels (string renderers are cheap at console scale).

import { ApiClient } from "./api.js";
import { chromatogramSvg, ganttSvg } from "./chart.js";
import { parseTraceCsv } from "./csv.js";
import {
  renderApprovalCard,
  renderCycleProgress,
  renderJobTable,
  renderTranscript,
  validateEdit,
} from "./render.js";
import { initialState, reduce, type ViewState } from "./state.js";
import { StreamClient } from "./stream.js";
import type { JobRow } from "./types.js";

const httpBase = location.origin;
const wsBase = httpBase.replace(/^http/, "ws");
const token = new URLSearchParams(location.search).get("token") ?? undefined;

const api = new ApiClient({ baseUrl: httpBase, token });

let state: ViewState = initialState();
let selectedJob: number | null = null;

function element(id: string): HTMLElement {
  const found = document.getElementById(id);
  if (!found) {
    throw new Error(`missing #${id}`);
  }
  return found;
}

function renderAll(): void {
  element("transcript-panel").innerHTML = renderTranscript(state.transcript);
  element("agent-indicator").textContent = `active agent: ${state.activeAgent}`;
  void refreshJobs();
  void refreshApprovals();
}

async function refreshJobs(): Promise<void> {
  const { jobs } = await api.jobs();
  element("jobs-panel").innerHTML = renderJobTable(jobs);
  for (const row of element("jobs-panel").querySelectorAll<HTMLElement>("tr.job")) {
    row.onclick = () => void showJobDetail(Number(row.dataset["jobId"]));
  }
  if (selectedJob !== null && jobs.some((j: JobRow) => j.id === selectedJob)) {
    await showJobDetail(selectedJob);
  }
}

async function refreshApprovals(): Promise<void> {
  const { approvals } = await api.approvals("Pending");
  element("approvals-panel").innerHTML =
    approvals.map(renderApprovalCard).join("\n") || "<p>No pending approvals.</p>";
  for (const button of element("approvals-panel").querySelectorAll<HTMLButtonElement>(
    "button[data-action]",
  )) {
    button.onclick = () => void decide(button.dataset["id"]!, button.dataset["action"]!);
  }
}

async function decide(approvalId: string, action: string): Promise<void> {
  if (action === "edit") {
    const raw = prompt("JSON edits for the proposed parameters:", "{}") ?? "{}";
    let edits: Record<string, unknown>;
    try {
      edits = JSON.parse(raw) as Record<string, unknown>;
    } catch {
      element("error-banner").textContent = "edits must be valid JSON";
      return;
    }
    const problem = validateEdit(edits);
    if (problem !== null) {
      element("error-banner").textContent = problem; // invalid: nothing sent
      return;
    }
    await api.decideApproval(approvalId, "Edited", edits);
  } else {
    await api.decideApproval(approvalId, action === "approve" ? "Approved" : "Rejected");
  }
  await refreshJobs();
  await refreshApprovals();
}

async function showJobDetail(jobId: number): Promise<void> {
  selectedJob = jobId;
  const job = await api.job(jobId);
  const { rows } = await api.timeline(jobId);
  let chart = "";
  if (job.result?.type === "hplc") {
    const trace = parseTraceCsv(await api.traceCsv(jobId));
    chart = chromatogramSvg(trace, {
      peakRtMin: job.result.main_peak_rt_min,
      title: `job ${jobId} chromatogram`,
    });
  }
  element("job-detail").innerHTML = [
    `<h3>Job ${job.id} (${job.kind}) - ${job.state}</h3>`,
    job.depiction_svg ?? "",
    chart,
    ganttSvg(rows),
    `<p>attachments: ${job.attachments.join(", ") || "none"}</p>`,
  ].join("\n");
}

async function boot(): Promise<void> {
  const { session_id } = await api.createSession();
  state = initialState(session_id);

  const stream = new StreamClient({
    baseUrl: wsBase,
    sessionId: session_id,
    token,
    onEvent: (event) => {
      state = reduce(state, event);
      renderAll();
    },
    onStatus: (status) => {
      element("stream-indicator").textContent = `stream: ${status}`;
    },
  });
  stream.connect();

  const input = element("chat-input") as HTMLInputElement;
  const send = element("chat-send") as HTMLButtonElement;
  const update = () => {
    send.disabled = input.value.trim().length === 0; // empty input: send disabled
  };
  input.oninput = update;
  update();
  send.onclick = () => {
    const text = input.value.trim();
    if (!text) {
      return;
    }
    input.value = "";
    update();
    void api.sendMessage(session_id, text);
  };

  const cycleButton = element("cycle-refresh") as HTMLButtonElement;
  cycleButton.onclick = async () => {
    const cycleId = (element("cycle-id") as HTMLInputElement).value.trim();
    if (!cycleId) {
      return;
    }
    element("cycle-panel").innerHTML = renderCycleProgress(await api.cycle(cycleId));
  };

  renderAll();
}

void boot();
