"""The sequential test-selection loop.

One episode walks a patient through: estimate the prior from the known
evidence, simulate outcomes for every remaining test, score each by
expected KL (and entropy gain), stop if no test promises enough belief
shift, otherwise acquire the best test's real value and repeat. The
same primitives back the batch harness and the live session service,
and every step is recorded in a replayable trajectory document.

Concurrency model: candidate evaluations within a step may fan out over
a thread pool (results always return in schema order); steps within an
episode are strictly sequential; a session has a single writer.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .belief import Belief, StoppingPolicy, CostModel, expected_kl, entropy_eig, utility, stopping_threshold
from .data import DatasetSchema, PatientRecord, Value, partition, render_values
from .errors import SelectionError, SessionStateError, SurrogateError
from .surrogate import EvidenceContext, OutcomeSample, Surrogate

ACTIVE = "active"
STOPPED = "stopped-by-criterion"
BUDGET_EXHAUSTED = "budget-exhausted"
DIAGNOSED = "diagnosed"
ABANDONED = "abandoned"

METHODS = ("adaptive", "adaptive-entropy", "random", "global", "implicit", "all-features")


@dataclass
class CandidateEvaluation:
    """Monte Carlo evidence for one candidate test at one step."""

    feature: str
    outcome_samples: list[OutcomeSample] = field(default_factory=list)
    posterior_draws: list[float] = field(default_factory=list)
    weights: list[float] | None = None
    expected_kl: float = 0.0
    entropy_eig: float = 0.0
    utility: float = 0.0
    cost_divisor: float = 1.0
    failed: bool = False
    error: str | None = None


@dataclass
class PendingStep:
    """A fully evaluated step awaiting the real test result."""

    prior: float
    evaluations: list[CandidateEvaluation]
    stop_threshold: float
    would_stop: bool
    recommended: str | None


@dataclass
class TrajectoryStep:
    """Audit record of one completed (or stopping) step."""

    step_index: int
    prior_before: float | None
    stop_threshold: float | None
    would_stop: bool
    evaluations: list[CandidateEvaluation]
    chosen: str | None
    chosen_by: str | None
    observed_value: Value | None
    prior_after: float | None = None


@dataclass
class QueryLog:
    """Engine-side tally of simulator queries by purpose."""

    prior: int = 0
    outcome: int = 0
    posterior: int = 0
    final: int = 0
    selection: int = 0

    @property
    def total(self) -> int:
        return self.prior + self.outcome + self.posterior + self.final + self.selection

    def as_dict(self) -> dict[str, int]:
        return {
            "prior": self.prior,
            "outcome": self.outcome,
            "posterior": self.posterior,
            "final": self.final,
            "selection": self.selection,
            "total": self.total,
        }


@dataclass
class SessionState:
    """One live diagnosis episode: evidence, belief, audit trail."""

    schema: DatasetSchema
    patient_id: str
    known: dict[str, Value]
    unknown: list[str]
    budget: int
    policy: StoppingPolicy
    disease_name: str | None = None
    label: int | None = None
    prior: float | None = None
    trajectory: list[TrajectoryStep] = field(default_factory=list)
    status: str = ACTIVE
    pending: PendingStep | None = None
    queries: QueryLog = field(default_factory=QueryLog)

    @property
    def acquired(self) -> int:
        return sum(1 for step in self.trajectory if step.chosen is not None)

    def context(self, extra: Mapping[str, Value] | None = None) -> EvidenceContext:
        assignments = dict(self.known)
        if extra:
            assignments.update(extra)
        return EvidenceContext(
            schema=self.schema,
            assignments=assignments,
            patient_id=self.patient_id,
            disease_name=self.disease_name,
        )

    @property
    def vignette(self) -> str:
        return render_values(self.known, self.known.keys(), self.schema)


def new_session(
    schema: DatasetSchema,
    patient: PatientRecord | None = None,
    known_values: Mapping[str, Value] | None = None,
    budget: int = 3,
    policy: StoppingPolicy | None = None,
    patient_id: str | None = None,
    disease_name: str | None = None,
) -> SessionState:
    """Open a session from a dataset patient or an inline known-value map."""
    known_names, unknown_names = partition(schema)
    if patient is not None:
        known = {name: patient.values[name] for name in schema.feature_names if name in known_names}
        patient_id = patient_id or patient.id
        disease_name = disease_name or patient.disease_name
        label = patient.label
    else:
        known = {}
        for name, value in (known_values or {}).items():
            spec = schema.feature(name)
            known[name] = spec.parse(value) if isinstance(value, str) else value
        unknown_names = {f for f in schema.feature_names if f not in known}
        patient_id = patient_id or "inline"
        label = None
    unknown = [name for name in schema.feature_names if name in unknown_names]
    return SessionState(
        schema=schema,
        patient_id=patient_id,
        known=known,
        unknown=unknown,
        budget=budget,
        policy=policy or StoppingPolicy(),
        disease_name=disease_name,
        label=label,
    )


# ---------------------------------------------------------------------------
# Step primitives
# ---------------------------------------------------------------------------


def estimate_prior(session: SessionState, surrogate: Surrogate, m: int, stage: str = "prior") -> Belief:
    """Mean of ``m`` risk queries over the current known vignette.

    The prior is held constant within the step; deterministic simulators
    still receive all ``m`` queries so that query accounting stays exact.
    """
    if session.status not in (ACTIVE, STOPPED):
        raise SessionStateError(f"session is {session.status}")
    context = session.context()
    estimates = [surrogate.estimate_risk(context) for _ in range(m)]
    setattr(session.queries, stage, getattr(session.queries, stage) + m)
    return Belief(float(np.mean(estimates)))


def _evaluate_one(
    session: SessionState,
    surrogate: Surrogate,
    feature_name: str,
    m: int,
    prior: float,
    cost_model: CostModel,
    rng_seed: int,
    exact: bool,
) -> tuple[CandidateEvaluation, int, int]:
    """Evaluate one candidate; returns (evaluation, outcome queries, posterior queries)."""
    spec = session.schema.feature(feature_name)
    context = session.context()
    evaluation = CandidateEvaluation(feature=feature_name)
    try:
        if exact:
            distribution = [
                (value, prob)
                for value, prob in surrogate.enumerate_outcomes(context, spec)
                if prob > 0.0
            ]
            outcomes = [OutcomeSample(feature_name, value, "") for value, _ in distribution]
            total = sum(prob for _, prob in distribution)
            weights = [prob / total for _, prob in distribution]
        else:
            outcomes = surrogate.sample_outcomes(context, spec, m, rng_seed=rng_seed)
            weights = None
        draws = []
        for sample in outcomes:
            extended = context.extend(spec, sample.value)
            draws.append(surrogate.estimate_risk(extended))
        evaluation.outcome_samples = outcomes
        evaluation.posterior_draws = draws
        evaluation.weights = weights
        evaluation.expected_kl = expected_kl(draws, prior, weights)
        evaluation.entropy_eig = entropy_eig(prior, draws, weights)
        evaluation.utility = utility(evaluation.expected_kl, feature_name, cost_model)
        if cost_model.mode == "per-feature":
            evaluation.cost_divisor = math.log(cost_model.raw_costs[feature_name])
        return evaluation, len(outcomes), len(draws)
    except SurrogateError as exc:
        evaluation.failed = True
        evaluation.error = str(exc)
        evaluation.outcome_samples = []
        evaluation.posterior_draws = []
        return evaluation, 0, 0


def evaluate_candidates(
    session: SessionState,
    surrogate: Surrogate,
    m: int,
    prior: Belief,
    cost_model: CostModel | None = None,
    rng: np.random.Generator | None = None,
    max_workers: int = 1,
) -> list[CandidateEvaluation]:
    """Score every remaining test by simulated belief shift.

    For each unknown feature, draw ``m`` hypothetical outcomes, query one
    posterior per outcome over the extended vignette, and compute the
    expected KL, entropy gain, and cost-normalized utility. Simulators
    exposing exact outcome enumeration are integrated exactly instead of
    sampled. Candidates evaluate independently (optionally in parallel)
    and always return in schema order; a candidate whose queries fail is
    marked failed rather than silently scored zero.
    """
    if not session.unknown:
        raise SessionStateError("no unknown features left to evaluate")
    cost_model = cost_model or CostModel.uniform()
    rng = rng or np.random.default_rng()
    exact = bool(getattr(surrogate, "exact", False)) and hasattr(surrogate, "enumerate_outcomes")
    candidates = list(session.unknown)
    seeds = [int(s) for s in rng.integers(0, 2**63 - 1, size=len(candidates))]

    def work(args):
        name, seed = args
        return _evaluate_one(session, surrogate, name, m, prior.p, cost_model, seed, exact)

    if max_workers > 1 and len(candidates) > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            results = list(pool.map(work, zip(candidates, seeds)))
    else:
        results = [work(args) for args in zip(candidates, seeds)]

    evaluations = []
    for evaluation, n_outcomes, n_posteriors in results:
        session.queries.outcome += n_outcomes
        session.queries.posterior += n_posteriors
        evaluations.append(evaluation)
    order = {name: i for i, name in enumerate(session.schema.feature_names)}
    evaluations.sort(key=lambda ev: order[ev.feature])
    return evaluations


def select_next(evaluations: Sequence[CandidateEvaluation], criterion: str = "kl") -> str:
    """Argmax candidate under the chosen criterion; schema-order ties win early."""
    if criterion not in ("kl", "entropy"):
        raise ValueError(f"unknown criterion: {criterion!r}")
    best_feature: str | None = None
    best_score = -math.inf
    for evaluation in evaluations:
        if evaluation.failed:
            continue
        score = evaluation.utility if criterion == "kl" else evaluation.entropy_eig
        if score > best_score:
            best_feature, best_score = evaluation.feature, score
    if best_feature is None:
        raise SelectionError("no evaluable candidates")
    return best_feature


def check_stop(
    evaluations: Sequence[CandidateEvaluation],
    prior: Belief,
    policy: StoppingPolicy,
) -> bool:
    """True when no remaining test promises enough expected belief shift."""
    threshold = stopping_threshold(prior, policy)
    gains = [ev.expected_kl for ev in evaluations if not ev.failed]
    if not gains:
        return True
    return max(gains) < threshold


def prepare_step(
    session: SessionState,
    surrogate: Surrogate,
    m: int,
    criterion: str = "kl",
    cost_model: CostModel | None = None,
    rng: np.random.Generator | None = None,
    max_workers: int = 1,
    prior_override: float | None = None,
) -> PendingStep:
    """Run prior estimation, candidate evaluation, and the stop check.

    The result is cached on the session until a result is applied, which
    keeps repeated recommendation reads idempotent. When the stop
    criterion fires, no candidate is recommended (the evaluations stay
    available for an explicit override).
    """
    if session.pending is not None:
        return session.pending
    if prior_override is not None:
        prior = Belief(prior_override)
    else:
        prior = estimate_prior(session, surrogate, m)
    session.prior = prior.p
    if session.trajectory and session.trajectory[-1].prior_after is None:
        session.trajectory[-1].prior_after = prior.p
    evaluations = evaluate_candidates(
        session, surrogate, m, prior, cost_model, rng, max_workers
    )
    would_stop = check_stop(evaluations, prior, session.policy)
    recommended = None
    if not would_stop:
        recommended = select_next(evaluations, criterion)
    session.pending = PendingStep(
        prior=prior.p,
        evaluations=evaluations,
        stop_threshold=stopping_threshold(prior, session.policy),
        would_stop=would_stop,
        recommended=recommended,
    )
    return session.pending


def apply_result(session: SessionState, feature: str, observed: Value) -> SessionState:
    """Move ``feature`` to the known set with its observed value.

    The value may differ from the engine's recommendation (override) and
    from any dataset record (what-if); the trajectory records which. The
    cached step evaluation is consumed; the next step re-estimates the
    prior over the grown vignette.
    """
    if session.status in (BUDGET_EXHAUSTED, DIAGNOSED, ABANDONED):
        raise SessionStateError(f"session is {session.status}")
    if feature in session.known:
        raise SessionStateError(f"feature {feature!r} is already known")
    if feature not in session.unknown:
        raise SessionStateError(f"feature {feature!r} is not part of this session")
    spec = session.schema.feature(feature)
    value = spec.parse(observed) if isinstance(observed, str) else spec.parse(str(observed))
    pending = session.pending
    chosen_by = "criterion" if pending and pending.recommended == feature else "override"
    session.trajectory.append(
        TrajectoryStep(
            step_index=len(session.trajectory),
            prior_before=pending.prior if pending else session.prior,
            stop_threshold=pending.stop_threshold if pending else None,
            would_stop=pending.would_stop if pending else False,
            evaluations=pending.evaluations if pending else [],
            chosen=feature,
            chosen_by=chosen_by,
            observed_value=value,
        )
    )
    session.known[feature] = value
    session.unknown.remove(feature)
    session.pending = None
    session.status = ACTIVE
    return session


def record_stop(session: SessionState) -> None:
    """Append the stopping step (no acquisition) and mark the session."""
    pending = session.pending
    session.trajectory.append(
        TrajectoryStep(
            step_index=len(session.trajectory),
            prior_before=pending.prior if pending else session.prior,
            stop_threshold=pending.stop_threshold if pending else None,
            would_stop=True,
            evaluations=pending.evaluations if pending else [],
            chosen=None,
            chosen_by=None,
            observed_value=None,
            prior_after=pending.prior if pending else session.prior,
        )
    )
    session.pending = None
    session.status = STOPPED


# ---------------------------------------------------------------------------
# Whole episodes
# ---------------------------------------------------------------------------


@dataclass
class EpisodeResult:
    session: SessionState
    final_risk: float
    predicted_label: int
    true_label: int | None
    method: str
    seed: int
    m: int
    failed: bool = False
    error: str | None = None


def run_episode(
    patient: PatientRecord,
    schema: DatasetSchema,
    method: str,
    budget: int,
    surrogate: Surrogate,
    rng_seed: int,
    policy: StoppingPolicy | None = None,
    m: int = 10,
    criterion: str = "kl",
    cost_model: CostModel | None = None,
    global_features: Sequence[str] | None = None,
    max_workers: int = 1,
) -> EpisodeResult:
    """Run one patient episode under the given acquisition method.

    ``adaptive`` follows the information-gain loop with the stopping
    policy; ``adaptive-entropy`` swaps in the entropy criterion. The
    baselines (``random``, ``global``, ``implicit``) always use their
    full budget, and ``all-features`` skips acquisition entirely. Every
    method ends with one final risk estimation over the terminal known
    set; the predicted label is 1 iff that risk reaches the decision
    threshold.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    policy = policy or StoppingPolicy()
    session = new_session(schema, patient=patient, budget=budget, policy=policy)
    rng = np.random.default_rng(rng_seed)
    stopped = False

    if method in ("random", "global", "implicit") and budget > len(session.unknown):
        raise ValueError("budget exceeds the number of selectable features")

    try:
        if method in ("adaptive", "adaptive-entropy"):
            step_criterion = "entropy" if method == "adaptive-entropy" else criterion
            while session.acquired < budget and session.unknown:
                pending = prepare_step(
                    session,
                    surrogate,
                    m,
                    criterion=step_criterion,
                    cost_model=cost_model,
                    rng=rng,
                    max_workers=max_workers,
                )
                if pending.would_stop:
                    record_stop(session)
                    stopped = True
                    break
                chosen = pending.recommended
                apply_result(session, chosen, patient.values[chosen])
        elif method == "random":
            order = list(session.unknown)
            picks = [order[i] for i in rng.choice(len(order), size=budget, replace=False)]
            for name in picks:
                apply_result(session, name, patient.values[name])
        elif method == "global":
            chosen = list(global_features) if global_features else surrogate.global_select(
                schema, list(session.unknown), budget
            )
            if not global_features:
                session.queries.selection += 1
            for name in chosen:
                apply_result(session, name, patient.values[name])
        elif method == "implicit":
            for _ in range(budget):
                name = surrogate.implicit_select(session.context(), list(session.unknown))
                session.queries.selection += 1
                apply_result(session, name, patient.values[name])
        elif method == "all-features":
            for name in list(session.unknown):
                session.known[name] = patient.values[name]
            session.unknown = []

        final = estimate_prior(session, surrogate, m, stage="final")
        if session.trajectory and session.trajectory[-1].prior_after is None:
            session.trajectory[-1].prior_after = final.p
        session.prior = final.p
        if stopped:
            session.status = STOPPED
        elif method == "all-features":
            session.status = DIAGNOSED
        else:
            session.status = BUDGET_EXHAUSTED
        predicted = int(final.p >= policy.theta)
        return EpisodeResult(
            session=session,
            final_risk=final.p,
            predicted_label=predicted,
            true_label=patient.label,
            method=method,
            seed=rng_seed,
            m=m,
        )
    except SurrogateError as exc:
        return EpisodeResult(
            session=session,
            final_risk=float("nan"),
            predicted_label=-1,
            true_label=patient.label,
            method=method,
            seed=rng_seed,
            m=m,
            failed=True,
            error=str(exc),
        )


# ---------------------------------------------------------------------------
# Trajectory documents
# ---------------------------------------------------------------------------

TRAJECTORY_FORMAT = "dxsel-trajectory-v1"


def _sample_to_doc(sample: OutcomeSample) -> dict:
    return {"value": sample.value, "raw": sample.raw_response}


def _evaluation_to_doc(evaluation: CandidateEvaluation) -> dict:
    return {
        "feature": evaluation.feature,
        "outcomes": [_sample_to_doc(s) for s in evaluation.outcome_samples],
        "posterior_draws": evaluation.posterior_draws,
        "weights": evaluation.weights,
        "expected_kl": evaluation.expected_kl,
        "entropy_eig": evaluation.entropy_eig,
        "utility": evaluation.utility,
        "cost_divisor": evaluation.cost_divisor,
        "failed": evaluation.failed,
        "error": evaluation.error,
    }


def _step_to_doc(step: TrajectoryStep) -> dict:
    return {
        "step_index": step.step_index,
        "prior_before": step.prior_before,
        "stop_threshold": step.stop_threshold,
        "would_stop": step.would_stop,
        "evaluations": [_evaluation_to_doc(ev) for ev in step.evaluations],
        "chosen": step.chosen,
        "chosen_by": step.chosen_by,
        "observed_value": step.observed_value,
        "prior_after": step.prior_after,
    }


def episode_document(
    result: EpisodeResult,
    criterion: str = "kl",
    gamma_label: float | None = None,
    seed_label: int | None = None,
) -> dict:
    """Full audit document for one episode (steps, draws, queries).

    ``seed_label`` records the experiment-level seed when episodes derive
    their own rng seeds from it; ``rng_seed`` always holds the episode's.
    """
    session = result.session
    return {
        "format": TRAJECTORY_FORMAT,
        "dataset": session.schema.name,
        "disease": session.disease_name or session.schema.disease_name,
        "patient_id": session.patient_id,
        "label": result.true_label,
        "method": result.method,
        "criterion": criterion,
        "seed": result.seed if seed_label is None else seed_label,
        "rng_seed": result.seed,
        "m": result.m,
        "budget": session.budget,
        "policy": {"theta": session.policy.theta, "gamma": session.policy.gamma},
        "gamma_label": gamma_label,
        "initial_known": {
            name: session.known[name]
            for name in session.schema.feature_names
            if name in session.known
            and all(step.chosen != name for step in session.trajectory)
        },
        "steps": [_step_to_doc(step) for step in session.trajectory],
        "final": {
            "risk": result.final_risk,
            "predicted_label": result.predicted_label,
            "status": session.status,
            "failed": result.failed,
            "error": result.error,
        },
        "queries": session.queries.as_dict(),
    }


def dump_episode(
    result: EpisodeResult,
    criterion: str = "kl",
    gamma_label: float | None = None,
    seed_label: int | None = None,
) -> str:
    return json.dumps(
        episode_document(result, criterion, gamma_label, seed_label),
        sort_keys=True,
        indent=2,
    )


def _evaluation_from_doc(doc: Mapping) -> CandidateEvaluation:
    return CandidateEvaluation(
        feature=doc["feature"],
        outcome_samples=[
            OutcomeSample(doc["feature"], entry["value"], entry.get("raw", ""))
            for entry in doc["outcomes"]
        ],
        posterior_draws=list(doc["posterior_draws"]),
        weights=list(doc["weights"]) if doc["weights"] is not None else None,
        expected_kl=doc["expected_kl"],
        entropy_eig=doc["entropy_eig"],
        utility=doc["utility"],
        cost_divisor=doc.get("cost_divisor", 1.0),
        failed=doc["failed"],
        error=doc.get("error"),
    )


def _step_from_doc(doc: Mapping) -> TrajectoryStep:
    return TrajectoryStep(
        step_index=doc["step_index"],
        prior_before=doc["prior_before"],
        stop_threshold=doc["stop_threshold"],
        would_stop=doc["would_stop"],
        evaluations=[_evaluation_from_doc(ev) for ev in doc["evaluations"]],
        chosen=doc["chosen"],
        chosen_by=doc["chosen_by"],
        observed_value=doc["observed_value"],
        prior_after=doc["prior_after"],
    )


def session_to_doc(session: SessionState) -> dict:
    """JSON-serializable snapshot of a session (schema stored by name)."""
    pending = session.pending
    return {
        "patient_id": session.patient_id,
        "known": dict(session.known),
        "unknown": list(session.unknown),
        "budget": session.budget,
        "policy": {"theta": session.policy.theta, "gamma": session.policy.gamma},
        "disease_name": session.disease_name,
        "label": session.label,
        "prior": session.prior,
        "status": session.status,
        "trajectory": [_step_to_doc(step) for step in session.trajectory],
        "pending": None
        if pending is None
        else {
            "prior": pending.prior,
            "evaluations": [_evaluation_to_doc(ev) for ev in pending.evaluations],
            "stop_threshold": pending.stop_threshold,
            "would_stop": pending.would_stop,
            "recommended": pending.recommended,
        },
        "queries": session.queries.as_dict(),
    }


def session_from_doc(doc: Mapping, schema: DatasetSchema) -> SessionState:
    pending = doc.get("pending")
    queries = doc.get("queries", {})
    return SessionState(
        schema=schema,
        patient_id=doc["patient_id"],
        known=dict(doc["known"]),
        unknown=list(doc["unknown"]),
        budget=doc["budget"],
        policy=StoppingPolicy(**doc["policy"]),
        disease_name=doc.get("disease_name"),
        label=doc.get("label"),
        prior=doc.get("prior"),
        trajectory=[_step_from_doc(step) for step in doc["trajectory"]],
        status=doc["status"],
        pending=None
        if pending is None
        else PendingStep(
            prior=pending["prior"],
            evaluations=[_evaluation_from_doc(ev) for ev in pending["evaluations"]],
            stop_threshold=pending["stop_threshold"],
            would_stop=pending["would_stop"],
            recommended=pending["recommended"],
        ),
        queries=QueryLog(
            prior=queries.get("prior", 0),
            outcome=queries.get("outcome", 0),
            posterior=queries.get("posterior", 0),
            final=queries.get("final", 0),
            selection=queries.get("selection", 0),
        ),
    )


def replay_document(doc: Mapping) -> dict:
    """Recompute every derived quantity in a trajectory from its raw draws.

    Returns a copy of the document with scores, thresholds, stop flags,
    and recommendations recomputed from the recorded Monte Carlo draws;
    byte-identity of the re-serialized copy against the original is the
    replay-determinism check.
    """
    replayed = json.loads(json.dumps(doc))
    policy = StoppingPolicy(**replayed["policy"])
    criterion = replayed.get("criterion", "kl")
    for step in replayed["steps"]:
        prior = step["prior_before"]
        if prior is None:
            continue
        evaluations = []
        for ev in step["evaluations"]:
            if not ev["failed"]:
                draws = ev["posterior_draws"]
                weights = ev["weights"]
                ev["expected_kl"] = expected_kl(draws, prior, weights)
                ev["entropy_eig"] = entropy_eig(prior, draws, weights)
                ev["utility"] = ev["expected_kl"] / ev["cost_divisor"]
            evaluations.append(
                CandidateEvaluation(
                    feature=ev["feature"],
                    posterior_draws=ev["posterior_draws"],
                    weights=ev["weights"],
                    expected_kl=ev["expected_kl"],
                    entropy_eig=ev["entropy_eig"],
                    utility=ev["utility"],
                    failed=ev["failed"],
                )
            )
        step["stop_threshold"] = stopping_threshold(prior, policy)
        step["would_stop"] = check_stop(evaluations, Belief(prior), policy)
        if step["chosen"] is not None and step["chosen_by"] == "criterion":
            step["chosen"] = select_next(evaluations, criterion)
    return replayed
