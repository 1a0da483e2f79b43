// WebSocket wrapper with reconnect. The server replays the backlog after the
// requested seq; the reducer's seq guard makes overlapping replays harmless,
// and this client additionally resumes from the last seen seq.

import type { StreamEvent } from "./types.js";

export interface WebSocketLike {
  onmessage: ((event: { data: string }) => void) | null;
  onclose: (() => void) | null;
  onerror: (() => void) | null;
  close(): void;
}

export type WebSocketFactory = (url: string) => WebSocketLike;

export interface StreamOptions {
  baseUrl: string; // ws://host:port
  sessionId: string;
  token?: string;
  onEvent: (event: StreamEvent) => void;
  onStatus?: (status: "open" | "closed") => void;
  factory?: WebSocketFactory;
  reconnectDelayMs?: number;
}

export class StreamClient {
  private lastSeq = 0;
  private socket: WebSocketLike | null = null;
  private stopped = false;
  private reconnectTimer: ReturnType<typeof setTimeout> | null = null;

  constructor(private readonly options: StreamOptions) {}

  get lastSeenSeq(): number {
    return this.lastSeq;
  }

  private url(): string {
    const token = this.options.token
      ? `&token=${encodeURIComponent(this.options.token)}`
      : "";
    return (
      `${this.options.baseUrl}/sessions/${this.options.sessionId}/stream` +
      `?after_seq=${this.lastSeq}${token}`
    );
  }

  connect(): void {
    if (this.stopped) {
      return;
    }
    const factory =
      this.options.factory ??
      ((url: string) => new WebSocket(url) as unknown as WebSocketLike);
    const socket = factory(this.url());
    this.socket = socket;
    this.options.onStatus?.("open");
    socket.onmessage = (message) => {
      const event = JSON.parse(message.data) as StreamEvent;
      if (event.seq <= this.lastSeq) {
        return; // duplicate from an overlapping backlog replay
      }
      this.lastSeq = event.seq;
      this.options.onEvent(event);
    };
    const scheduleReconnect = () => {
      this.options.onStatus?.("closed");
      if (this.stopped || this.reconnectTimer !== null) {
        return;
      }
      this.reconnectTimer = setTimeout(() => {
        this.reconnectTimer = null;
        this.connect();
      }, this.options.reconnectDelayMs ?? 500);
    };
    socket.onclose = scheduleReconnect;
    socket.onerror = scheduleReconnect;
  }

  stop(): void {
    this.stopped = true;
    if (this.reconnectTimer !== null) {
      clearTimeout(this.reconnectTimer);
      this.reconnectTimer = null;
    }
    this.socket?.close();
  }
}
