/** REST client; the only channel to the back-end. */

import {
  JobStatus, PhantomInfo, PlotSeries, SequenceDoc, SlicePlane, StoredItem, User, Violation,
} from "./types.js";

export class ApiError extends Error {
  constructor(public status: number, public detail: unknown) {
    super(`HTTP ${status}: ${JSON.stringify(detail)}`);
  }
}

export interface PlotResponse {
  series: PlotSeries;
  violations: Violation[];
  total_duration: number;
}

export interface SliceImage {
  shape: [number, number];
  data: number[];
  extent: Record<string, unknown>;
}

export class Api {
  token: string | null = null;
  user: User | null = null;

  constructor(public base: string = "",
              private fetchFn: typeof fetch = globalThis.fetch.bind(globalThis)) {}

  private headers(json = true): Record<string, string> {
    const h: Record<string, string> = {};
    if (json) h["Content-Type"] = "application/json";
    if (this.token) h["Authorization"] = `Bearer ${this.token}`;
    return h;
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const res = await this.fetchFn(this.base + path, {
      method,
      headers: this.headers(body !== undefined),
      body: body !== undefined ? JSON.stringify(body) : undefined,
    });
    if (!res.ok) {
      let detail: unknown = null;
      try {
        detail = (await res.json()).detail;
      } catch { /* non-JSON error body */ }
      throw new ApiError(res.status, detail);
    }
    return (await res.json()) as T;
  }

  async login(username: string, password: string): Promise<User> {
    const out = await this.request<{ token: string; user: User }>(
      "POST", "/api/auth/login", { username, password });
    this.token = out.token;
    this.user = out.user;
    return out.user;
  }

  async logout(): Promise<void> {
    await this.request("POST", "/api/auth/logout", {});
    this.token = null;
    this.user = null;
  }

  plot(doc: SequenceDoc): Promise<PlotResponse> {
    return this.request("POST", "/api/plot/sequence", doc);
  }

  slicePreview(doc: SequenceDoc): Promise<{ plane: SlicePlane | null }> {
    return this.request("POST", "/api/slice_preview", doc);
  }

  examples(): Promise<string[]> {
    return this.request("GET", "/api/examples");
  }

  example(name: string): Promise<SequenceDoc> {
    return this.request("GET", `/api/examples/${name}`);
  }

  phantoms(): Promise<PhantomInfo[]> {
    return this.request("GET", "/api/phantoms");
  }

  phantomSlice(id: string, plane: string, index: number): Promise<SliceImage> {
    return this.request("GET", `/api/phantoms/${id}/slice?plane=${plane}&index=${index}`);
  }

  async simulate(doc: SequenceDoc, phantomId: string,
                 config?: { dt_rf?: number; dt_grad?: number; threads?: number }):
      Promise<string> {
    const out = await this.request<{ job_id: string }>(
      "POST", "/api/simulate", { sequence: doc, phantom_id: phantomId, config });
    return out.job_id;
  }

  jobStatus(jobId: string): Promise<JobStatus> {
    return this.request("GET", `/api/simulate/${jobId}/status`);
  }

  cancelJob(jobId: string): Promise<{ state: string }> {
    return this.request("POST", `/api/simulate/${jobId}/cancel`, {});
  }

  async jobResult(jobId: string): Promise<ArrayBuffer> {
    const res = await this.fetchFn(`${this.base}/api/simulate/${jobId}/result`,
                                   { headers: this.headers(false) });
    if (!res.ok) throw new ApiError(res.status, await res.text());
    return res.arrayBuffer();
  }

  sequences(): Promise<StoredItem[]> {
    return this.request("GET", "/api/sequences");
  }

  saveSequence(name: string, doc: SequenceDoc): Promise<StoredItem> {
    return this.request("POST", "/api/sequences", { name, doc });
  }

  loadSequence(id: string): Promise<{ id: string; name: string; doc: SequenceDoc }> {
    return this.request("GET", `/api/sequences/${id}`);
  }

  deleteSequence(id: string): Promise<void> {
    return this.request("DELETE", `/api/sequences/${id}`);
  }

  results(): Promise<StoredItem[]> {
    return this.request("GET", "/api/results");
  }

  async resultData(id: string): Promise<ArrayBuffer> {
    const res = await this.fetchFn(`${this.base}/api/results/${id}`,
                                   { headers: this.headers(false) });
    if (!res.ok) throw new ApiError(res.status, await res.text());
    return res.arrayBuffer();
  }

  deleteResult(id: string): Promise<void> {
    return this.request("DELETE", `/api/results/${id}`);
  }

  users(): Promise<User[]> {
    return this.request("GET", "/api/users");
  }

  createUser(username: string, password: string, role = "user"): Promise<User> {
    return this.request("POST", "/api/users", { username, password, role });
  }

  updateUser(id: string, patch: { password?: string; role?: string }): Promise<User> {
    return this.request("PUT", `/api/users/${id}`, patch);
  }

  deleteUser(id: string): Promise<void> {
    return this.request("DELETE", `/api/users/${id}`);
  }
}

/** Poll a job until a terminal state, reporting progress along the way. */
export async function pollJob(api: Api, jobId: string,
                              onProgress: (s: JobStatus) => void,
                              intervalMs = 150): Promise<JobStatus> {
  for (;;) {
    const status = await api.jobStatus(jobId);
    onProgress(status);
    if (status.state === "done" || status.state === "failed" ||
        status.state === "cancelled") {
      return status;
    }
    await new Promise((resolve) => setTimeout(resolve, intervalMs));
  }
}
