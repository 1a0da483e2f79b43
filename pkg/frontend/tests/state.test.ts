import { describe, expect, it } from "vitest";

import { initialState, reduce, reduceAll } from "../src/state.js";
import type { StreamEvent } from "../src/types.js";
import { fixtureText } from "./helpers.js";

const events: StreamEvent[] = fixtureText("stream_events.jsonl")
  .trim()
  .split("\n")
  .map((line) => JSON.parse(line) as StreamEvent);

describe("reduce", () => {
  it("builds the transcript from recorded session events", () => {
    const state = reduceAll(initialState("s-1"), events);
    const messages = events.filter((e) => e.kind === "session.message");
    expect(state.transcript.length).toBe(messages.length);
    expect(state.lastSeq).toBe(events[events.length - 1].seq);
  });

  it("tracks job states and handoffs", () => {
    const state = reduceAll(initialState("s-1"), events);
    expect(Object.values(state.jobStates)).toContain("Completed");
    expect(state.handoffs.length).toBeGreaterThan(0);
    expect(state.activeAgent).not.toBe("");
  });

  it("flags guardrail refusal rows", () => {
    const state = reduceAll(initialState("s-1"), events);
    expect(state.refusals.length).toBe(1);
    const refusalRow = state.transcript[state.refusals[0]];
    expect(refusalRow.speaker).toBe("SafetyGuardrail");
  });

  it("ignores duplicate seqs so reconnect replays add no rows", () => {
    const half = Math.floor(events.length / 2);
    let state = reduceAll(initialState("s-1"), events.slice(0, half));
    const before = state.transcript.length;
    // Reconnect: the server replays an overlapping backlog from seq 0.
    state = reduceAll(state, events.slice(0, half));
    expect(state.transcript.length).toBe(before);
    state = reduceAll(state, events);
    const full = reduceAll(initialState("s-1"), events);
    expect(state.transcript).toEqual(full.transcript);
  });

  it("drops stale out-of-order events", () => {
    let state = reduceAll(initialState("s-1"), events);
    const replayed = reduce(state, events[0]);
    expect(replayed).toBe(state);
  });
});
