import { describe, expect, it, vi } from "vitest";

import { StreamClient, type WebSocketLike } from "../src/stream.js";
import type { StreamEvent } from "../src/types.js";

function makeEvent(seq: number): StreamEvent {
  return {
    seq,
    ts: 0,
    kind: "session.message",
    session_id: "s-1",
    payload: { speaker: "user", text: `msg ${seq}` },
  };
}

class FakeSocket implements WebSocketLike {
  onmessage: ((event: { data: string }) => void) | null = null;
  onclose: (() => void) | null = null;
  onerror: (() => void) | null = null;
  closed = false;

  constructor(public readonly url: string) {}

  deliver(event: StreamEvent): void {
    this.onmessage?.({ data: JSON.stringify(event) });
  }

  drop(): void {
    this.onclose?.();
  }

  close(): void {
    this.closed = true;
  }
}

describe("StreamClient", () => {
  it("delivers events and tracks the last seq", () => {
    const sockets: FakeSocket[] = [];
    const seen: number[] = [];
    const client = new StreamClient({
      baseUrl: "ws://test",
      sessionId: "s-1",
      onEvent: (event) => seen.push(event.seq),
      factory: (url) => {
        const socket = new FakeSocket(url);
        sockets.push(socket);
        return socket;
      },
    });
    client.connect();
    sockets[0].deliver(makeEvent(1));
    sockets[0].deliver(makeEvent(2));
    expect(seen).toEqual([1, 2]);
    expect(client.lastSeenSeq).toBe(2);
    client.stop();
  });

  it("reconnects after a drop and never duplicates rows", () => {
    vi.useFakeTimers();
    const sockets: FakeSocket[] = [];
    const seen: number[] = [];
    const client = new StreamClient({
      baseUrl: "ws://test",
      sessionId: "s-1",
      reconnectDelayMs: 10,
      onEvent: (event) => seen.push(event.seq),
      factory: (url) => {
        const socket = new FakeSocket(url);
        sockets.push(socket);
        return socket;
      },
    });
    client.connect();
    sockets[0].deliver(makeEvent(1));
    sockets[0].deliver(makeEvent(2));
    sockets[0].drop();
    vi.advanceTimersByTime(20);
    expect(sockets.length).toBe(2);
    // Resumes from the last seen seq...
    expect(sockets[1].url).toContain("after_seq=2");
    // ...and even an overlapping server replay produces no duplicates.
    sockets[1].deliver(makeEvent(1));
    sockets[1].deliver(makeEvent(2));
    sockets[1].deliver(makeEvent(3));
    expect(seen).toEqual([1, 2, 3]);
    client.stop();
    vi.useRealTimers();
  });

  it("stops cleanly and does not reconnect after stop", () => {
    vi.useFakeTimers();
    const sockets: FakeSocket[] = [];
    const client = new StreamClient({
      baseUrl: "ws://test",
      sessionId: "s-1",
      reconnectDelayMs: 10,
      onEvent: () => undefined,
      factory: (url) => {
        const socket = new FakeSocket(url);
        sockets.push(socket);
        return socket;
      },
    });
    client.connect();
    client.stop();
    sockets[0].drop();
    vi.advanceTimersByTime(50);
    expect(sockets.length).toBe(1);
    expect(sockets[0].closed).toBe(true);
    vi.useRealTimers();
  });
});
