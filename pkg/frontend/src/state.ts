// The single reducer every update flows through, keyed by event seq. The
// stream may replay overlapping backlogs after a reconnect; applying an
// already-seen seq is a no-op, so transcript rows never duplicate.

import type { StreamEvent, TranscriptEntry } from "./types.js";

export interface HandoffView {
  from: string;
  to: string;
  reason: string;
}

export interface ViewState {
  sessionId: string | null;
  lastSeq: number;
  transcript: TranscriptEntry[];
  refusals: number[]; // transcript indexes rendered as guardrail refusals
  handoffs: HandoffView[];
  activeAgent: string;
  jobStates: Record<number, string>;
  pendingOffers: string[];
}

export function initialState(sessionId: string | null = null): ViewState {
  return {
    sessionId,
    lastSeq: 0,
    transcript: [],
    refusals: [],
    handoffs: [],
    activeAgent: "Supervisor",
    jobStates: {},
    pendingOffers: [],
  };
}

export function reduce(state: ViewState, event: StreamEvent): ViewState {
  if (event.seq <= state.lastSeq) {
    return state; // duplicate or out-of-order replay after reconnect
  }
  const next: ViewState = {
    ...state,
    lastSeq: event.seq,
    transcript: state.transcript,
    refusals: state.refusals,
    handoffs: state.handoffs,
    jobStates: state.jobStates,
  };
  switch (event.kind) {
    case "session.message": {
      const speaker = String(event.payload["speaker"]);
      const entry: TranscriptEntry = {
        speaker,
        text: String(event.payload["text"]),
        ts: event.ts,
      };
      next.transcript = [...state.transcript, entry];
      if (speaker === "SafetyGuardrail") {
        next.refusals = [...state.refusals, next.transcript.length - 1];
      }
      break;
    }
    case "agent.handoff": {
      next.handoffs = [
        ...state.handoffs,
        {
          from: String(event.payload["from"]),
          to: String(event.payload["to"]),
          reason: String(event.payload["reason"]),
        },
      ];
      next.activeAgent = String(event.payload["to"]);
      break;
    }
    case "job.transition": {
      const jobId = Number(event.payload["job_id"]);
      next.jobStates = { ...state.jobStates, [jobId]: String(event.payload["to"]) };
      break;
    }
    default:
      break;
  }
  return next;
}

export function reduceAll(state: ViewState, events: StreamEvent[]): ViewState {
  return events.reduce(reduce, state);
}
