/**
 * Typed client for the session service. The UI never computes beliefs
 * or information gains itself; every number it shows comes from these
 * response payloads.
 */

export interface DatasetFeature {
  name: string;
  kind: "numeric" | "categorical";
  unit: string;
  categories: string[];
  known_at_start: boolean;
}

export interface DatasetInfo {
  name: string;
  disease: string;
  features: DatasetFeature[];
  patients: string[];
}

export interface SessionResource {
  session_id: string;
  dataset: string;
  disease: string;
  status: string;
  created_at: string;
  updated_at: string;
  policy: { theta: number; gamma: number };
  budget: number;
  acquired: number;
  known: Record<string, number | string>;
  unknown: string[];
  prior: number | null;
  steps: number;
}

export interface CandidateRow {
  feature: string;
  expected_kl: number;
  entropy_eig: number;
  utility: number;
  outcomes: (number | string)[];
  posterior_draws: number[];
  failed: boolean;
}

export interface RecommendationView {
  step_index: number;
  prior: number;
  stop_threshold: number;
  would_stop: boolean;
  recommended: string | null;
  candidates: CandidateRow[];
}

export interface TrajectoryStepView {
  step_index: number;
  prior_before: number | null;
  prior_after: number | null;
  stop_threshold: number | null;
  would_stop: boolean;
  chosen: string | null;
  chosen_by: string | null;
  observed_value: number | string | null;
  evaluations: unknown[];
}

export interface TrajectoryDoc {
  session_id: string;
  dataset: string;
  disease: string;
  status: string;
  initial_known: Record<string, number | string>;
  steps: TrajectoryStepView[];
  queries: Record<string, number>;
}

export interface CreateSessionRequest {
  dataset: string;
  patient_id?: string;
  known_values?: Record<string, number | string>;
  theta?: number;
  gamma?: number;
  budget?: number;
  prior_override?: number;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
    readonly field?: string,
  ) {
    super(message);
  }
}

export class Client {
  constructor(
    readonly baseUrl: string,
    readonly token?: string,
  ) {}

  private headers(): Record<string, string> {
    const headers: Record<string, string> = { "Content-Type": "application/json" };
    if (this.token) headers["Authorization"] = `Bearer ${this.token}`;
    return headers;
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await fetch(`${this.baseUrl}${path}`, {
      method,
      headers: this.headers(),
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const text = await response.text();
    const payload = text ? JSON.parse(text) : null;
    if (!response.ok) {
      const envelope = payload ?? {};
      throw new ApiError(
        response.status,
        envelope.code ?? "unknown",
        envelope.message ?? response.statusText,
        envelope.field,
      );
    }
    return payload as T;
  }

  listDatasets(): Promise<DatasetInfo[]> {
    return this.request("GET", "/v1/datasets");
  }

  createSession(body: CreateSessionRequest): Promise<SessionResource> {
    return this.request("POST", "/v1/sessions", body);
  }

  getSession(sessionId: string): Promise<SessionResource> {
    return this.request("GET", `/v1/sessions/${sessionId}`);
  }

  fetchRecommendation(sessionId: string): Promise<RecommendationView> {
    return this.request("POST", `/v1/sessions/${sessionId}/recommendation`);
  }

  submitResult(
    sessionId: string,
    feature: string,
    value: number | string,
    override: boolean,
  ): Promise<SessionResource> {
    return this.request("POST", `/v1/sessions/${sessionId}/result`, {
      feature,
      value,
      override,
    });
  }

  fetchTrajectory(sessionId: string): Promise<TrajectoryDoc> {
    return this.request("GET", `/v1/sessions/${sessionId}/trajectory`);
  }
}
