import {
  DatasetInfo,
  RecommendationView,
  SessionResource,
  TrajectoryDoc,
} from "../src/api.js";

export const datasetInfo: DatasetInfo = {
  name: "ckd-demo",
  disease: "chronic kidney disease",
  features: [
    { name: "Age", kind: "numeric", unit: "", categories: [], known_at_start: true },
    {
      name: "Serum creatinine",
      kind: "numeric",
      unit: "mg/dL",
      categories: [],
      known_at_start: false,
    },
    {
      name: "Sodium levels",
      kind: "numeric",
      unit: "mEq/L",
      categories: [],
      known_at_start: false,
    },
    {
      name: "Haemoglobin",
      kind: "numeric",
      unit: "g/dL",
      categories: [],
      known_at_start: false,
    },
  ],
  patients: ["p1", "p2"],
};

export function sessionFixture(extra: Partial<SessionResource> = {}): SessionResource {
  return {
    session_id: "s1",
    dataset: "ckd-demo",
    disease: "chronic kidney disease",
    status: "active",
    created_at: "2026-01-01T00:00:00Z",
    updated_at: "2026-01-01T00:00:00Z",
    policy: { theta: 0.5, gamma: 0.3 },
    budget: 3,
    acquired: 0,
    known: { Age: 63 },
    unknown: ["Serum creatinine", "Sodium levels", "Haemoglobin"],
    prior: null,
    steps: 0,
    ...extra,
  };
}

export function recommendationFixture(
  extra: Partial<RecommendationView> = {},
): RecommendationView {
  return {
    step_index: 0,
    prior: 0.2,
    stop_threshold: 0.3643,
    would_stop: false,
    recommended: "Serum creatinine",
    candidates: [
      {
        feature: "Serum creatinine",
        expected_kl: 0.44,
        entropy_eig: -0.01,
        utility: 0.44,
        outcomes: [2.6, 0.9, 2.3, 1.1],
        posterior_draws: [0.85, 0.15, 0.75, 0.25],
        failed: false,
      },
      {
        feature: "Sodium levels",
        expected_kl: 0.012,
        entropy_eig: 0.002,
        utility: 0.012,
        outcomes: [131, 140, 138, 129],
        posterior_draws: [0.3, 0.18, 0.2, 0.28],
        failed: false,
      },
      {
        feature: "Haemoglobin",
        expected_kl: 0.02,
        entropy_eig: 0.004,
        utility: 0.02,
        outcomes: [10.8, 13.5, 12.1, 14.0],
        posterior_draws: [0.3, 0.15, 0.2, 0.12],
        failed: false,
      },
    ],
    ...extra,
  };
}

export function trajectoryFixture(extra: Partial<TrajectoryDoc> = {}): TrajectoryDoc {
  return {
    session_id: "s1",
    dataset: "ckd-demo",
    disease: "chronic kidney disease",
    status: "active",
    initial_known: { Age: 63 },
    steps: [],
    queries: {},
    ...extra,
  };
}
