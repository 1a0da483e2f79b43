// Thin typed client over the service HTTP API. The fetch implementation is
// injectable so tests run against recorded fixtures with no backend.

import type {
  ApprovalsResponse,
  CycleDetail,
  DecisionResponse,
  JobRow,
  JobsResponse,
  TimelineResponse,
  TranscriptResponse,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export interface ApiConfig {
  baseUrl: string;
  token?: string;
  fetchImpl?: FetchLike;
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    message: string,
  ) {
    super(message);
  }
}

export class ApiClient {
  private readonly baseUrl: string;
  private readonly token?: string;
  private readonly fetchImpl: FetchLike;

  constructor(config: ApiConfig) {
    this.baseUrl = config.baseUrl.replace(/\/$/, "");
    this.token = config.token;
    this.fetchImpl = config.fetchImpl ?? ((url, init) => fetch(url, init));
  }

  headers(extra?: Record<string, string>): Record<string, string> {
    const base: Record<string, string> = { ...extra };
    if (this.token) {
      base["Authorization"] = `Bearer ${this.token}`;
    }
    return base;
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      ...init,
      headers: this.headers(init?.headers as Record<string, string> | undefined),
    });
    if (!response.ok) {
      const body = await response.text();
      throw new ApiError(response.status, `${path}: ${response.status} ${body}`);
    }
    return (await response.json()) as T;
  }

  createSession(): Promise<{ session_id: string }> {
    return this.request("/sessions", { method: "POST" });
  }

  sendMessage(sessionId: string, text: string): Promise<{ entries: unknown[] }> {
    return this.request(`/sessions/${sessionId}/messages`, {
      method: "POST",
      body: JSON.stringify({ text }),
      headers: { "content-type": "application/json" },
    });
  }

  transcript(sessionId: string): Promise<TranscriptResponse> {
    return this.request(`/sessions/${sessionId}/transcript`);
  }

  jobs(): Promise<JobsResponse> {
    return this.request("/jobs");
  }

  job(jobId: number): Promise<JobRow> {
    return this.request(`/jobs/${jobId}`);
  }

  timeline(jobId: number): Promise<TimelineResponse> {
    return this.request(`/jobs/${jobId}/timeline`);
  }

  async traceCsv(jobId: number): Promise<string> {
    const response = await this.fetchImpl(`${this.baseUrl}/jobs/${jobId}/trace.csv`, {
      headers: this.headers(),
    });
    if (!response.ok) {
      throw new ApiError(response.status, `trace ${jobId}: ${response.status}`);
    }
    return response.text();
  }

  approvals(state?: string): Promise<ApprovalsResponse> {
    const suffix = state ? `?state=${encodeURIComponent(state)}` : "";
    return this.request(`/approvals${suffix}`);
  }

  decideApproval(
    approvalId: string,
    decision: string,
    params?: Record<string, unknown>,
  ): Promise<DecisionResponse> {
    return this.request(`/approvals/${approvalId}/decision`, {
      method: "POST",
      body: JSON.stringify({ decision, params: params ?? null }),
      headers: { "content-type": "application/json" },
    });
  }

  cycle(cycleId: string): Promise<CycleDetail> {
    return this.request(`/cycles/${cycleId}`);
  }
}
