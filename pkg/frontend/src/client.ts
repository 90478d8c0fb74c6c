// Thin protocol client over the debug service. No retries, no state:
// one method call maps to exactly one HTTP request.

import type {
  CodeResponse,
  HeapResponse,
  SessionState,
  StackResponse,
  StepResponse,
  TraceResponse,
} from "./types.js";

export class ServiceError extends Error {
  constructor(
    public readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ServiceError";
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class DebugClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: { "Content-Type": "application/json" } };
    if (body !== undefined) {
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchImpl(this.baseUrl + path, init);
    const payload = (await response.json()) as T & { error?: string };
    if (!response.ok) {
      throw new ServiceError(response.status, payload.error ?? `HTTP ${response.status}`);
    }
    return payload;
  }

  createSession(bundle: string, args: unknown[], executor = "reference"): Promise<SessionState> {
    return this.request("POST", "/sessions", { bundle, args, executor });
  }

  getState(id: string): Promise<SessionState> {
    return this.request("GET", `/sessions/${id}`);
  }

  step(id: string): Promise<StepResponse> {
    return this.request("POST", `/sessions/${id}/step`);
  }

  continueRun(id: string): Promise<SessionState> {
    return this.request("POST", `/sessions/${id}/continue`);
  }

  setBreakpoint(id: string, functionName: string, line: string): Promise<SessionState> {
    return this.request("PUT", `/sessions/${id}/breakpoints`, { function: functionName, line });
  }

  clearBreakpoint(id: string, functionName: string, line: string): Promise<SessionState> {
    return this.request("DELETE", `/sessions/${id}/breakpoints`, { function: functionName, line });
  }

  getStack(id: string): Promise<StackResponse> {
    return this.request("GET", `/sessions/${id}/stack`);
  }

  getHeap(id: string, scope?: string): Promise<HeapResponse> {
    const query = scope ? `?scope=${encodeURIComponent(scope)}` : "";
    return this.request("GET", `/sessions/${id}/heap${query}`);
  }

  getTrace(id: string, tail?: number): Promise<TraceResponse> {
    const query = tail !== undefined ? `?tail=${tail}` : "";
    return this.request("GET", `/sessions/${id}/trace${query}`);
  }

  getCode(id: string): Promise<CodeResponse> {
    return this.request("GET", `/sessions/${id}/code`);
  }

  deleteSession(id: string): Promise<SessionState> {
    return this.request("DELETE", `/sessions/${id}`);
  }
}
