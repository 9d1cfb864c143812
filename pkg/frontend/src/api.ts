/** Typed client for the session service. All semantics live server-side;
 * this module only speaks the JSON contract and normalizes errors. */

export interface CreateSessionResponse {
  session_id: string;
  step: number;
  mesh_url: string;
}

export interface EditResponse {
  step: number;
  mesh_url: string;
}

export interface StepJson {
  index: number;
  prompt: string;
  mesh_hash: string;
  mesh_path: string;
  created_at: string;
}

export interface SessionJson {
  id: string;
  adapter_fingerprint: string;
  steps: StepJson[];
}

export interface AttemptJson {
  caption: string;
  verdict: "accept" | "reject";
  reflection: string | null;
}

export interface EpisodeJson {
  attempts: AttemptJson[];
  final_caption: string;
  accepted: boolean;
  iterations_used: number;
}

export interface CaptionResponse {
  caption: string;
  episode: EpisodeJson;
}

export class ApiError extends Error {
  readonly status: number;
  readonly fields: Record<string, string>;

  constructor(status: number, message: string, fields: Record<string, string> = {}) {
    super(message);
    this.name = "ApiError";
    this.status = status;
    this.fields = fields;
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly base: string = "",
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const res = await this.fetchFn(this.base + path, {
      headers: init?.body ? { "Content-Type": "application/json" } : undefined,
      ...init,
    });
    if (!res.ok) {
      const body = (await res.json().catch(() => ({}))) as {
        error?: string;
        fields?: Record<string, string>;
      };
      throw new ApiError(res.status, body.error ?? res.statusText, body.fields ?? {});
    }
    return res.json() as Promise<T>;
  }

  createSession(prompt: string): Promise<CreateSessionResponse> {
    return this.request("/api/sessions", { method: "POST", body: JSON.stringify({ prompt }) });
  }

  getSession(sessionId: string): Promise<SessionJson> {
    return this.request(`/api/sessions/${encodeURIComponent(sessionId)}`);
  }

  submitEdit(sessionId: string, prompt: string): Promise<EditResponse> {
    return this.request(`/api/sessions/${encodeURIComponent(sessionId)}/edits`, {
      method: "POST",
      body: JSON.stringify({ prompt }),
    });
  }

  requestCaption(sessionId: string, step: number): Promise<CaptionResponse> {
    return this.request("/api/captions", {
      method: "POST",
      body: JSON.stringify({ session_id: sessionId, step }),
    });
  }

  async fetchMeshText(meshUrl: string): Promise<string> {
    const res = await this.fetchFn(this.base + meshUrl);
    if (!res.ok) {
      throw new ApiError(res.status, `mesh fetch failed: ${res.statusText}`);
    }
    return res.text();
  }

  meshUrl(sessionId: string, step: number): string {
    return `/api/sessions/${encodeURIComponent(sessionId)}/steps/${step}/mesh.obj`;
  }
}
