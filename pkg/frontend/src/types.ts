// Payload types mirroring the service API. The console renders these fields
// verbatim and never recomputes scientific results client-side.

export interface TranscriptEntry {
  speaker: string;
  text: string;
  ts: number;
}

export interface TranscriptResponse {
  session_id: string;
  entries: TranscriptEntry[];
}

export interface SlotInfo {
  resource_id: string;
  start_min: number;
  end_min: number;
}

export interface SynthesisResult {
  type: "synthesis";
  yield_pct: number;
  mass_mg: number;
  duration_min: number;
  side_products_note: string;
}

export interface HplcResult {
  type: "hplc";
  main_peak_rt_min: number;
  purity_pct: number;
  duration_min: number;
}

export interface Approval {
  id: string;
  job_id: number;
  proposed_params: Record<string, unknown>;
  state: "Pending" | "Approved" | "Edited" | "Rejected";
  decided_by: string | null;
  decided_at: number | null;
}

export interface JobRow {
  id: number;
  kind: "Synthesis" | "Hplc";
  target: string;
  state: "Created" | "Scheduled" | "Running" | "Completed" | "Failed";
  created_at: number;
  started_at: number | null;
  finished_at: number | null;
  params: Record<string, unknown>;
  slot: SlotInfo | null;
  attachments: string[];
  cancelled: boolean;
  approval: Approval | null;
  result: SynthesisResult | HplcResult | null;
  depiction_svg?: string | null;
}

export interface JobsResponse {
  jobs: JobRow[];
}

export interface TimelineRow {
  state: string;
  entered_at: number;
  waited_min: number;
}

export interface TimelineResponse {
  job_id: number;
  rows: TimelineRow[];
}

export interface ApprovalsResponse {
  approvals: Approval[];
}

export interface DecisionResponse {
  approval: Approval;
  job: JobRow;
}

export interface StreamEvent {
  seq: number;
  ts: number;
  kind: string;
  session_id: string;
  payload: Record<string, unknown>;
}

export interface CycleEvaluation {
  iteration: number;
  smiles: string;
  rt_min: number;
  purity_pct: number;
  yield_pct: number;
  score: number;
}

export interface CycleDetail {
  cycle_id: string;
  seed: string;
  target_rt_min: number;
  budget: number;
  status: string;
  stop_reason: string | null;
  evaluations: CycleEvaluation[];
  best: { smiles: string; score: number; evaluations: number } | null;
}

export interface TracePoint {
  time_min: number;
  signal: number;
}
