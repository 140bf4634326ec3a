/**
 * Typed wrapper over the service's eight routes. Carries the bearer tokens,
 * unwraps error envelopes into ApiError, and leaves response documents
 * untouched otherwise.
 */

import type { Value } from "./values.js";
import type {
  ErrorDoc,
  FetchResult,
  ProjectSpecDoc,
  RegisterResult,
  SkipResult,
  StatusDoc,
  SubmissionBody,
  SubmitResult,
} from "./wire.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

export type FetchLike = (url: string, init: RequestInit) => Promise<Response>;

export interface Tokens {
  client?: string;
  enroll?: string;
  worker?: string; // issued at registration
}

export class ServiceClient {
  constructor(
    readonly baseUrl: string,
    readonly tokens: Tokens = {},
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  withWorkerToken(token: string): ServiceClient {
    return new ServiceClient(this.baseUrl, { ...this.tokens, worker: token }, this.fetchImpl);
  }

  private async request<T>(method: string, path: string, token?: string, body?: Value): Promise<T> {
    const headers: Record<string, string> = {};
    if (token) headers["Authorization"] = `Bearer ${token}`;
    const init: RequestInit = { method, headers };
    if (body !== undefined) {
      headers["Content-Type"] = "application/json";
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchImpl(this.baseUrl.replace(/\/$/, "") + path, init);
    const doc = (await response.json()) as T;
    if (!response.ok) {
      const err = doc as unknown as ErrorDoc;
      throw new ApiError(response.status, err.error ?? "Internal", err.message ?? "request failed");
    }
    return doc;
  }

  createProject(spec: ProjectSpecDoc): Promise<StatusDoc> {
    return this.request("POST", "/projects", this.tokens.client, spec as unknown as Value);
  }

  status(projectId: string): Promise<StatusDoc> {
    return this.request("GET", `/projects/${projectId}/status`, this.tokens.client);
  }

  bundle(projectId: string): Promise<Record<string, Value>> {
    return this.request("GET", `/projects/${projectId}/bundle`, this.tokens.client);
  }

  metrics(projectId: string): Promise<Record<string, Value>> {
    return this.request("GET", `/metrics/${projectId}`, this.tokens.client);
  }

  register(handle: string): Promise<RegisterResult> {
    return this.request("POST", "/workers", this.tokens.enroll, { handle });
  }

  fetchTask(workerId: string): Promise<FetchResult> {
    return this.request("POST", `/workers/${workerId}/fetch`, this.tokens.worker);
  }

  submit(microtaskId: string, body: SubmissionBody): Promise<SubmitResult> {
    return this.request("POST", `/microtasks/${microtaskId}/submit`, this.tokens.worker, body as unknown as Value);
  }

  skip(microtaskId: string): Promise<SkipResult> {
    return this.request("POST", `/microtasks/${microtaskId}/skip`, this.tokens.worker);
  }
}
