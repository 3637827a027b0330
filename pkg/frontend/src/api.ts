import type {
  CaptureBody,
  MemoryView,
  Outcome,
  PendingView,
  VerifyResult,
} from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  readonly code: string;
  readonly status: number;

  constructor(code: string, message: string, status: number) {
    super(message);
    this.name = "ApiError";
    this.code = code;
    this.status = status;
  }
}

interface ErrorEnvelope {
  error?: { code?: string; message?: string };
}

export class ApiClient {
  private readonly base: string;
  private readonly fetchImpl: FetchLike;

  constructor(base = "", fetchImpl?: FetchLike) {
    this.base = base.replace(/\/$/, "");
    this.fetchImpl = fetchImpl ?? ((input, init) => fetch(input, init));
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchImpl(this.base + path, init);
    } catch (cause) {
      const detail = cause instanceof Error ? cause.message : String(cause);
      throw new ApiError("network", `cannot reach server: ${detail}`, 0);
    }
    const text = await response.text();
    let body: unknown = null;
    if (text !== "") {
      try {
        body = JSON.parse(text);
      } catch {
        throw new ApiError("network", `server returned non-JSON (${response.status})`, response.status);
      }
    }
    if (!response.ok) {
      const envelope = (body ?? {}) as ErrorEnvelope;
      const code = envelope.error?.code ?? "unknown";
      const message = envelope.error?.message ?? `request failed (${response.status})`;
      throw new ApiError(code, message, response.status);
    }
    return body as T;
  }

  private post<T>(path: string, payload: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  health(): Promise<{ status: string }> {
    return this.request<{ status: string }>("/v1/health");
  }

  query(body: CaptureBody): Promise<Outcome> {
    return this.post<Outcome>("/v1/query", body);
  }

  remember(body: CaptureBody): Promise<Outcome> {
    return this.post<Outcome>("/v1/remember", body);
  }

  forget(body: CaptureBody): Promise<Outcome> {
    return this.post<Outcome>("/v1/forget", body);
  }

  verify(
    userId: string,
    verificationId: string,
    accept: boolean,
    replacementAnswer?: string,
  ): Promise<VerifyResult> {
    const payload: Record<string, unknown> = {
      user_id: userId,
      verification_id: verificationId,
      accept,
    };
    if (replacementAnswer !== undefined && replacementAnswer !== "") {
      payload.replacement_answer = replacementAnswer;
    }
    return this.post<VerifyResult>("/v1/verify", payload);
  }

  async seed(records: unknown[]): Promise<number> {
    const result = await this.post<{ stored: number }>("/v1/seed", { records });
    return result.stored;
  }

  async memories(userId: string): Promise<MemoryView[]> {
    const result = await this.request<{ memories: MemoryView[] }>(
      `/v1/memories?user_id=${encodeURIComponent(userId)}`,
    );
    return result.memories;
  }

  async pending(userId: string, now?: string): Promise<PendingView[]> {
    let path = `/v1/pending?user_id=${encodeURIComponent(userId)}`;
    if (now !== undefined) {
      path += `&now=${encodeURIComponent(now)}`;
    }
    const result = await this.request<{ pending: PendingView[] }>(path);
    return result.pending;
  }

  // Fetches a static file served alongside the app, such as a bundled
  // persona fixture.
  async fetchAsset(path: string): Promise<string> {
    let response: Response;
    try {
      response = await this.fetchImpl(this.base + "/" + path);
    } catch (cause) {
      const detail = cause instanceof Error ? cause.message : String(cause);
      throw new ApiError("network", `cannot reach server: ${detail}`, 0);
    }
    if (!response.ok) {
      throw new ApiError("not_found", `asset ${path} unavailable (${response.status})`, response.status);
    }
    return response.text();
  }
}
