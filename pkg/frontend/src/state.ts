/**
 * Session flow view-model: the state machine behind the screens.
 *
 * Thin-client rule: everything shown (gauge value, ranked rows, bar
 * fractions, banner numbers, chart series) is derived directly from
 * API response fields; nothing is recomputed from draws locally.
 */

import {
  ApiError,
  CandidateRow,
  Client,
  CreateSessionRequest,
  DatasetInfo,
  RecommendationView,
  SessionResource,
  TrajectoryDoc,
} from "./api.js";

export type Phase =
  | "idle"
  | "loading"
  | "review"
  | "entry"
  | "stopped"
  | "finished"
  | "error";

export interface EntryForm {
  feature: string;
  override: boolean;
  validationMessage: string | null;
}

export class SessionFlow {
  phase: Phase = "idle";
  datasets: DatasetInfo[] = [];
  dataset: DatasetInfo | null = null;
  session: SessionResource | null = null;
  recommendation: RecommendationView | null = null;
  trajectory: TrajectoryDoc | null = null;
  entry: EntryForm | null = null;
  lastError: string | null = null;

  constructor(
    private readonly client: Client,
    private readonly onChange: (flow: SessionFlow) => void = () => {},
  ) {}

  private emit(): void {
    this.onChange(this);
  }

  private fail(error: unknown): void {
    this.phase = "error";
    this.lastError = error instanceof Error ? error.message : String(error);
    this.emit();
  }

  async loadDatasets(): Promise<void> {
    try {
      this.datasets = await this.client.listDatasets();
      this.emit();
    } catch (error) {
      this.fail(error);
    }
  }

  async start(request: CreateSessionRequest): Promise<void> {
    this.phase = "loading";
    this.lastError = null;
    this.emit();
    try {
      this.session = await this.client.createSession(request);
      this.dataset =
        this.datasets.find((d) => d.name === request.dataset) ?? this.dataset;
      this.trajectory = await this.client.fetchTrajectory(this.session.session_id);
      await this.refreshRecommendation();
    } catch (error) {
      this.fail(error);
    }
  }

  async refreshRecommendation(): Promise<void> {
    if (!this.session) return;
    this.phase = "loading";
    this.emit();
    try {
      this.recommendation = await this.client.fetchRecommendation(this.session.session_id);
      this.session = await this.client.getSession(this.session.session_id);
      this.entry = null;
      this.phase = this.recommendation.would_stop ? "stopped" : "review";
      this.emit();
    } catch (error) {
      if (error instanceof ApiError && error.status === 409) {
        // Budget exhausted or otherwise finished: terminal screen.
        this.phase = "finished";
        this.session = await this.client.getSession(this.session!.session_id);
        this.trajectory = await this.client.fetchTrajectory(this.session.session_id);
        this.emit();
        return;
      }
      this.fail(error);
    }
  }

  /** Accept the engine's recommendation: open the result entry form. */
  accept(): void {
    if (!this.recommendation?.recommended) return;
    this.entry = {
      feature: this.recommendation.recommended,
      override: false,
      validationMessage: null,
    };
    this.phase = "entry";
    this.emit();
  }

  /** Pick a different remaining test instead of the recommended one. */
  override(feature: string): void {
    if (!this.session || !this.session.unknown.includes(feature)) return;
    this.entry = { feature, override: true, validationMessage: null };
    this.phase = "entry";
    this.emit();
  }

  /** From the stop banner: proceed with the best candidate anyway. */
  continueAnyway(): void {
    const best = this.candidateRows()[0];
    if (!best) return;
    this.entry = { feature: best.feature, override: true, validationMessage: null };
    this.phase = "entry";
    this.emit();
  }

  /** From the stop banner: end the session here. */
  conclude(): void {
    this.phase = "finished";
    this.emit();
  }

  cancelEntry(): void {
    this.entry = null;
    this.phase = this.recommendation?.would_stop ? "stopped" : "review";
    this.emit();
  }

  featureKind(feature: string): "numeric" | "categorical" {
    const spec = this.dataset?.features.find((f) => f.name === feature);
    return spec?.kind ?? "numeric";
  }

  featureUnit(feature: string): string {
    return this.dataset?.features.find((f) => f.name === feature)?.unit ?? "";
  }

  featureCategories(feature: string): string[] {
    return this.dataset?.features.find((f) => f.name === feature)?.categories ?? [];
  }

  /** Client-side kind validation; no request is sent on failure. */
  validateEntry(raw: string): number | string | null {
    if (!this.entry) return null;
    const kind = this.featureKind(this.entry.feature);
    if (kind === "numeric") {
      const trimmed = raw.trim();
      const value = Number(trimmed);
      if (trimmed === "" || !Number.isFinite(value)) {
        this.entry.validationMessage = "Enter a numeric value.";
        this.emit();
        return null;
      }
      this.entry.validationMessage = null;
      return value;
    }
    const categories = this.featureCategories(this.entry.feature);
    if (!categories.includes(raw)) {
      this.entry.validationMessage = `Choose one of: ${categories.join(", ")}.`;
      this.emit();
      return null;
    }
    this.entry.validationMessage = null;
    return raw;
  }

  async submit(raw: string): Promise<void> {
    if (!this.session || !this.entry) return;
    const value = this.validateEntry(raw);
    if (value === null) return;
    const { feature, override } = this.entry;
    this.phase = "loading";
    this.emit();
    try {
      this.session = await this.client.submitResult(
        this.session.session_id,
        feature,
        value,
        override,
      );
      this.trajectory = await this.client.fetchTrajectory(this.session.session_id);
      this.entry = null;
      await this.refreshRecommendation();
    } catch (error) {
      if (error instanceof ApiError && (error.status === 409 || error.status === 422)) {
        this.entry = { feature, override, validationMessage: error.message };
        this.phase = "entry";
        this.emit();
        return;
      }
      this.fail(error);
    }
  }

  // ---- derived view data (all traceable to API fields) ----

  /** Current belief for the gauge: the step prior from the API. */
  gaugeValue(): number | null {
    return this.recommendation?.prior ?? this.session?.prior ?? null;
  }

  /** Candidate rows in descending expected-KL order, failures last. */
  candidateRows(): CandidateRow[] {
    const rows = [...(this.recommendation?.candidates ?? [])];
    rows.sort((a, b) =>
      a.failed === b.failed ? b.expected_kl - a.expected_kl : a.failed ? 1 : -1,
    );
    return rows;
  }

  /**
   * Bar fraction per feature, normalized to this step's maximum
   * expected KL (gains shrink across rounds, so a per-step ramp keeps
   * early and late rounds readable).
   */
  klBarFractions(): Map<string, number> {
    const rows = this.candidateRows();
    const max = rows.length ? Math.max(...rows.map((r) => r.expected_kl)) : 0;
    const fractions = new Map<string, number>();
    for (const row of rows) {
      fractions.set(row.feature, max > 0 ? row.expected_kl / max : 0);
    }
    return fractions;
  }

  /** Belief-vs-step series for the trajectory chart. */
  beliefSeries(): number[] {
    const steps = this.trajectory?.steps ?? [];
    const series: number[] = [];
    for (const step of steps) {
      if (step.prior_before !== null) series.push(step.prior_before);
    }
    const last = steps[steps.length - 1];
    if (last && last.prior_after !== null) series.push(last.prior_after);
    return series;
  }

  /** One chart point per trajectory step (plus the settled belief). */
  trajectoryStepCount(): number {
    return this.trajectory?.steps.length ?? 0;
  }
}
