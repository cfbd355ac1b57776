"""Pluggable outcome simulators.

A simulator answers three kinds of queries given the evidence gathered
so far: hypothetical outcome draws for an unobserved test, a disease
risk estimate, and (for the baselines) direct feature choices. Three
implementations ship here:

* ``ScriptedSurrogate`` replays values from tables keyed by patient and
  evidence set -- its tables are its specification, which makes it the
  workhorse for deterministic tests and demos.
* ``SyntheticSurrogate`` wraps an analytic world with a known disease
  rate and per-feature conditional distributions, so exact posteriors
  and exact expected information gains are available by enumeration.
* ``RemoteSurrogate`` talks JSON chat-completions to any compatible
  endpoint, with bounded retries and strict reply parsing.

All implementations keep a monotone per-kind query counter; scripted
and synthetic are pure functions of (inputs, rng_seed).
"""

from __future__ import annotations

import ast
import json
import math
import os
import re
import threading
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .data import DatasetSchema, FeatureSpec, PatientRecord, Value, render_values
from .errors import ResponseParseError, SchemaError, SurrogateError
from . import belief, prompts

_FLOAT_TOKEN = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")


def parse_strict_float(raw: str) -> float:
    """Parse a reply that must be a single float token and nothing else."""
    token = raw.strip()
    if not _FLOAT_TOKEN.match(token):
        raise ResponseParseError(f"not a single float token: {raw!r}", raw_response=raw)
    value = float(token)
    if not math.isfinite(value):
        raise ResponseParseError(f"non-finite float: {raw!r}", raw_response=raw)
    return value


def canonical_value(value: Value) -> str:
    """Stable text form of a feature value, used in evidence keys."""
    if isinstance(value, str):
        return value
    return repr(float(value))


def evidence_key(assignments: Mapping[str, Value]) -> str:
    """Canonical key for an evidence set: sorted name=value pairs."""
    return "|".join(
        f"{name}={canonical_value(assignments[name])}" for name in sorted(assignments)
    )


@dataclass(frozen=True)
class EvidenceContext:
    """Everything a simulator may need about the current evidence.

    ``assignments`` maps each known feature to its (real or
    hypothetical) value. The rendered vignette and the canonical key are
    derived views of the same evidence.
    """

    schema: DatasetSchema
    assignments: Mapping[str, Value]
    patient_id: str | None = None
    disease_name: str | None = None

    @property
    def disease(self) -> str:
        return self.disease_name or self.schema.disease_name

    @property
    def key(self) -> str:
        return evidence_key(self.assignments)

    @property
    def vignette(self) -> str:
        return render_values(self.assignments, self.assignments.keys(), self.schema)

    def extend(self, feature: FeatureSpec, value: Value) -> "EvidenceContext":
        if feature.name in self.assignments:
            raise SurrogateError(f"feature {feature.name!r} already observed")
        assignments = dict(self.assignments)
        assignments[feature.name] = value
        return replace(self, assignments=assignments)


@dataclass(frozen=True)
class OutcomeSample:
    """One hypothetical test outcome with its raw reply for audit."""

    feature: str
    value: Value
    raw_response: str = ""


@dataclass(frozen=True)
class SurrogateConfig:
    """How to build a simulator; mirrors the surrogate section of config files."""

    kind: str = "synthetic"
    endpoint_url: str = ""
    model_name: str = ""
    temperature: float = 1.0
    max_retries: int = 3
    timeout: float = 30.0
    samples_per_query: int = 10
    max_inflight: int = 8
    outcomes_path: str = ""
    risks_path: str = ""
    world_path: str = ""
    exact: bool = False

    def __post_init__(self) -> None:
        if self.temperature < 0.0:
            raise ValueError("temperature must be nonnegative")
        if self.samples_per_query < 1:
            raise ValueError("samples_per_query must be at least 1")
        if self.max_retries < 0:
            raise ValueError("max_retries must be nonnegative")

    @classmethod
    def from_mapping(cls, raw: Mapping) -> "SurrogateConfig":
        return cls(**{k: raw[k] for k in raw})


def _coerce_outcome(feature: FeatureSpec, raw: Value) -> Value:
    """Validate a sampled value against the feature's declared type."""
    if isinstance(raw, str):
        try:
            return feature.parse(raw)
        except ValueError as exc:
            raise ResponseParseError(str(exc), raw_response=raw) from None
    if feature.kind == "categorical":
        raise ResponseParseError(
            f"categorical feature {feature.name!r} got numeric value {raw!r}"
        )
    value = float(raw)
    if not math.isfinite(value):
        raise ResponseParseError(f"non-finite sample for {feature.name!r}")
    return value


class Surrogate:
    """Common query accounting for all simulator implementations."""

    kind = "abstract"

    def __init__(self) -> None:
        self._counter_lock = threading.Lock()
        self._counts = {"risk": 0, "outcome": 0, "selection": 0}

    def _count(self, category: str, n: int = 1) -> None:
        with self._counter_lock:
            self._counts[category] += n

    @property
    def query_counts(self) -> dict[str, int]:
        with self._counter_lock:
            return dict(self._counts)

    @property
    def queries_used(self) -> int:
        with self._counter_lock:
            return sum(self._counts.values())

    # Interface -------------------------------------------------------

    def sample_outcomes(
        self,
        context: EvidenceContext,
        feature: FeatureSpec,
        m: int,
        rng_seed: int | None = None,
    ) -> list[OutcomeSample]:
        raise NotImplementedError

    def estimate_risk(self, context: EvidenceContext) -> float:
        raise NotImplementedError

    def implicit_select(self, context: EvidenceContext, unknown_features: Sequence[str]) -> str:
        raise NotImplementedError

    def global_select(self, schema: DatasetSchema, all_features: Sequence[str], n: int) -> list[str]:
        raise NotImplementedError


# ---------------------------------------------------------------------------
# Scripted tables
# ---------------------------------------------------------------------------


class ScriptedSurrogate(Surrogate):
    """Replays outcome and risk tables; the tables are the specification.

    ``outcomes`` maps (patient_id, feature) to the ordered draw values;
    ``sample_outcomes`` returns the first ``m`` of them regardless of
    seed, so equal seeds trivially give equal output. ``risks`` maps
    (patient_id, evidence key) to a probability, where the key is the
    canonical sorted ``name=value`` form from :func:`evidence_key`.
    """

    kind = "scripted"

    def __init__(
        self,
        outcomes: Mapping[tuple[str, str], Sequence[Value]],
        risks: Mapping[tuple[str, str], float],
        global_choices: Sequence[str] | None = None,
        samples_per_query: int = 10,
    ) -> None:
        super().__init__()
        self._outcomes = {key: list(values) for key, values in outcomes.items()}
        self._risks = dict(risks)
        self._global_choices = list(global_choices) if global_choices else None
        self.samples_per_query = samples_per_query

    # table access without query accounting (used by the oracle baselines)

    def _table_outcomes(self, patient_id: str, feature: str) -> list[Value]:
        try:
            return self._outcomes[(patient_id, feature)]
        except KeyError:
            raise SurrogateError(
                f"no scripted outcomes for patient {patient_id!r}, feature {feature!r}"
            ) from None

    def _table_risk(self, patient_id: str, key: str) -> float:
        try:
            return self._risks[(patient_id, key)]
        except KeyError:
            raise SurrogateError(
                f"no scripted risk for patient {patient_id!r}, evidence {key!r}"
            ) from None

    def _require_patient(self, context: EvidenceContext) -> str:
        if context.patient_id is None:
            raise SurrogateError("scripted surrogate needs a patient id")
        return context.patient_id

    def sample_outcomes(self, context, feature, m, rng_seed=None):
        patient_id = self._require_patient(context)
        table = self._table_outcomes(patient_id, feature.name)
        if len(table) < m:
            raise SurrogateError(
                f"scripted table for {feature.name!r} holds {len(table)} samples, "
                f"need {m}"
            )
        self._count("outcome", m)
        return [
            OutcomeSample(feature.name, _coerce_outcome(feature, value), str(value))
            for value in table[:m]
        ]

    def estimate_risk(self, context):
        patient_id = self._require_patient(context)
        self._count("risk")
        return self._table_risk(patient_id, context.key)

    def implicit_select(self, context, unknown_features):
        """Oracle implicit baseline: argmax of table-computed expected KL."""
        if not unknown_features:
            raise SurrogateError("no unknown features to select from")
        patient_id = self._require_patient(context)
        self._count("selection")
        prior = self._table_risk(patient_id, context.key)
        best_name, best_gain = None, -1.0
        for name in unknown_features:
            spec = context.schema.feature(name)
            draws = []
            for value in self._table_outcomes(patient_id, name):
                extended = context.extend(spec, _coerce_outcome(spec, value))
                draws.append(self._table_risk(patient_id, extended.key))
            gain = belief.expected_kl(draws, prior)
            if gain > best_gain:
                best_name, best_gain = name, gain
        return best_name

    def global_select(self, schema, all_features, n):
        if n > len(all_features):
            raise SurrogateError("cannot select more features than exist")
        self._count("selection")
        if self._global_choices is not None:
            chosen = [f for f in self._global_choices if f in all_features][:n]
            if len(chosen) != n:
                raise SurrogateError("scripted global choices do not cover the request")
            return chosen
        # Fall back to ranking by mean empty-evidence expected KL over patients.
        patient_ids = sorted({pid for pid, _ in self._risks if (pid, "") in self._risks})
        gains = {name: 0.0 for name in all_features}
        for pid in patient_ids:
            prior = self._risks[(pid, "")]
            for name in all_features:
                spec = schema.feature(name)
                draws = []
                for value in self._outcomes.get((pid, name), []):
                    coerced = _coerce_outcome(spec, value)
                    draws.append(self._risks[(pid, f"{name}={canonical_value(coerced)}")])
                if draws:
                    gains[name] += belief.expected_kl(draws, prior)
        ranked = sorted(all_features, key=lambda name: (-gains[name], all_features.index(name)))
        return ranked[:n]

    @classmethod
    def from_files(
        cls,
        outcomes_path: str | Path,
        risks_path: str | Path,
        samples_per_query: int = 10,
    ) -> "ScriptedSurrogate":
        """Load tab-separated tables.

        Outcome rows: ``patient_id<TAB>feature<TAB>sample_index<TAB>value``.
        Risk rows: ``patient_id<TAB>evidence_key<TAB>probability`` with the
        empty key for the evidence-free prior.
        """
        outcomes: dict[tuple[str, str], dict[int, str]] = {}
        for line in Path(outcomes_path).read_text(encoding="utf-8").splitlines():
            if not line.strip() or line.startswith("#"):
                continue
            patient_id, feature, index, value = line.split("\t")
            outcomes.setdefault((patient_id, feature), {})[int(index)] = value
        ordered = {
            key: [entries[i] for i in sorted(entries)] for key, entries in outcomes.items()
        }
        risks: dict[tuple[str, str], float] = {}
        for line in Path(risks_path).read_text(encoding="utf-8").splitlines():
            if not line.strip() or line.startswith("#"):
                continue
            patient_id, key, value = line.split("\t")
            risks[(patient_id, key)] = float(value)
        return cls(ordered, risks, samples_per_query=samples_per_query)


# ---------------------------------------------------------------------------
# Analytic synthetic world
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WorldFeature:
    """Finitely supported conditional distribution of one test."""

    support: tuple[Value, ...]
    p_given_sick: tuple[float, ...]
    p_given_healthy: tuple[float, ...]

    def __post_init__(self) -> None:
        if not (len(self.support) == len(self.p_given_sick) == len(self.p_given_healthy)):
            raise SchemaError("world feature arrays must have equal length")
        for probs in (self.p_given_sick, self.p_given_healthy):
            if abs(sum(probs) - 1.0) > 1e-9 or any(p < 0 for p in probs):
                raise SchemaError("world conditional distribution must sum to 1")


@dataclass(frozen=True)
class SyntheticWorld:
    """A small generative world with exact posteriors by enumeration."""

    prior_disease_rate: float
    features: Mapping[str, WorldFeature]

    def __post_init__(self) -> None:
        if not 0.0 < self.prior_disease_rate < 1.0:
            raise SchemaError("prior disease rate must lie strictly inside (0, 1)")

    def _likelihoods(self, assignments: Mapping[str, Value]) -> tuple[float, float]:
        sick, healthy = 1.0, 1.0
        for name, value in assignments.items():
            feature = self.features.get(name)
            if feature is None:
                continue  # unmodeled evidence carries no information here
            try:
                index = feature.support.index(value)
            except ValueError:
                raise SurrogateError(
                    f"value {value!r} for {name!r} is outside the world support"
                ) from None
            sick *= feature.p_given_sick[index]
            healthy *= feature.p_given_healthy[index]
        return sick, healthy

    def posterior(self, assignments: Mapping[str, Value]) -> float:
        """Exact P(disease | evidence) via Bayes over the two classes."""
        sick, healthy = self._likelihoods(assignments)
        num = self.prior_disease_rate * sick
        den = num + (1.0 - self.prior_disease_rate) * healthy
        if den == 0.0:
            raise SurrogateError("evidence has zero probability in this world")
        return num / den

    def outcome_distribution(
        self, feature_name: str, assignments: Mapping[str, Value]
    ) -> list[tuple[Value, float]]:
        """Exact P(outcome | evidence) for one feature: mixture over disease."""
        feature = self.features[feature_name]
        p_sick = self.posterior(assignments)
        return [
            (value, p_sick * ps + (1.0 - p_sick) * ph)
            for value, ps, ph in zip(feature.support, feature.p_given_sick, feature.p_given_healthy)
        ]

    def exact_expected_kl(self, feature_name: str, assignments: Mapping[str, Value]) -> float:
        prior = self.posterior(assignments)
        total = 0.0
        for value, prob in self.outcome_distribution(feature_name, assignments):
            if prob == 0.0:
                continue
            extended = dict(assignments)
            extended[feature_name] = value
            total += prob * belief.kl_bernoulli(self.posterior(extended), prior)
        return total

    def sample_patient(self, rng: np.random.Generator, patient_id: str) -> PatientRecord:
        label = int(rng.random() < self.prior_disease_rate)
        values: dict[str, Value] = {}
        for name, feature in self.features.items():
            probs = feature.p_given_sick if label else feature.p_given_healthy
            index = int(rng.choice(len(feature.support), p=np.asarray(probs)))
            values[name] = feature.support[index]
        return PatientRecord(id=patient_id, values=values, label=label)

    @classmethod
    def from_json(cls, path: str | Path) -> "SyntheticWorld":
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        features = {
            name: WorldFeature(
                support=tuple(entry["support"]),
                p_given_sick=tuple(entry["p_given_sick"]),
                p_given_healthy=tuple(entry["p_given_healthy"]),
            )
            for name, entry in raw["features"].items()
        }
        return cls(prior_disease_rate=raw["prior_disease_rate"], features=features)


class SyntheticSurrogate(Surrogate):
    """Exact-Bayes simulator over a :class:`SyntheticWorld`.

    Risk estimates are always the exact enumeration posterior. Outcome
    draws are Monte Carlo from the exact conditional; with
    ``exact=True`` the selection engine may instead consume the full
    outcome distribution through :meth:`enumerate_outcomes`.
    """

    kind = "synthetic"

    def __init__(self, world: SyntheticWorld, exact: bool = False) -> None:
        super().__init__()
        self.world = world
        self.exact = exact

    def sample_outcomes(self, context, feature, m, rng_seed=None):
        rng = np.random.default_rng(rng_seed)
        distribution = self.world.outcome_distribution(feature.name, context.assignments)
        values = [value for value, _ in distribution]
        probs = np.array([prob for _, prob in distribution])
        self._count("outcome", m)
        indices = rng.choice(len(values), size=m, p=probs / probs.sum())
        return [
            OutcomeSample(feature.name, _coerce_outcome(feature, values[int(i)]), "")
            for i in indices
        ]

    def enumerate_outcomes(self, context, feature) -> list[tuple[Value, float]]:
        self._count("outcome", len(self.world.features[feature.name].support))
        return self.world.outcome_distribution(feature.name, context.assignments)

    def estimate_risk(self, context):
        self._count("risk")
        return self.world.posterior(context.assignments)

    def implicit_select(self, context, unknown_features):
        if not unknown_features:
            raise SurrogateError("no unknown features to select from")
        self._count("selection")
        gains = [
            self.world.exact_expected_kl(name, context.assignments)
            for name in unknown_features
        ]
        return unknown_features[int(np.argmax(gains))]

    def global_select(self, schema, all_features, n):
        if n > len(all_features):
            raise SurrogateError("cannot select more features than exist")
        self._count("selection")
        gains = {name: self.world.exact_expected_kl(name, {}) for name in all_features}
        ranked = sorted(all_features, key=lambda name: (-gains[name], all_features.index(name)))
        return ranked[:n]


# ---------------------------------------------------------------------------
# Remote chat-completion endpoint
# ---------------------------------------------------------------------------

_SYSTEM_MESSAGE = "Follow the output format instructions exactly."


class RemoteSurrogate(Surrogate):
    """JSON chat-completion client with bounded retries and strict parsing.

    Each query posts ``{model, messages, temperature}`` and reads the
    first message content of the reply. Parse failures and transport
    errors are retried ``max_retries`` times with exponential backoff
    starting at 500 ms; a still-failing query raises a typed error
    carrying the last raw reply, never a fabricated value.
    """

    kind = "remote"

    def __init__(self, config: SurrogateConfig, transport=None) -> None:
        super().__init__()
        import httpx

        self.config = config
        headers = {"Content-Type": "application/json"}
        api_key = os.environ.get("SURROGATE_API_KEY")
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        self._client = httpx.Client(
            timeout=config.timeout, headers=headers, transport=transport
        )
        self._inflight = threading.Semaphore(max(1, config.max_inflight))
        self._backoff_base = 0.5

    def close(self) -> None:
        self._client.close()

    def _chat(self, prompt: str) -> str:
        import httpx

        payload = {
            "model": self.config.model_name,
            "messages": [
                {"role": "system", "content": _SYSTEM_MESSAGE},
                {"role": "user", "content": prompt},
            ],
            "temperature": self.config.temperature,
        }
        with self._inflight:
            try:
                response = self._client.post(self.config.endpoint_url, json=payload)
                response.raise_for_status()
            except httpx.HTTPError as exc:
                raise SurrogateError(f"transport failure: {exc}") from exc
        try:
            body = response.json()
            return body["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise ResponseParseError(
                f"malformed completion body: {exc}", raw_response=response.text
            ) from exc

    def _query(self, prompt: str, parser):
        last_error: SurrogateError | None = None
        for attempt in range(self.config.max_retries + 1):
            if attempt:
                time.sleep(self._backoff_base * 2 ** (attempt - 1))
            try:
                return parser(self._chat(prompt))
            except SurrogateError as exc:
                last_error = exc
        raise last_error

    def sample_outcomes(self, context, feature, m, rng_seed=None):
        if feature.name in context.assignments:
            raise SurrogateError(f"feature {feature.name!r} is already observed")
        prompt = prompts.sampling_prompt(context.schema, feature, context.vignette, context.disease)

        def parse(raw: str) -> OutcomeSample:
            if feature.kind == "categorical":
                token = raw.strip().strip("'\"")
                return OutcomeSample(feature.name, _coerce_outcome(feature, token), raw)
            value = parse_strict_float(raw)
            return OutcomeSample(feature.name, _coerce_outcome(feature, value), raw)

        samples = []
        for _ in range(m):
            self._count("outcome")
            try:
                samples.append(self._query(prompt, parse))
            except SurrogateError as exc:
                raise ResponseParseError(
                    f"unparseable sample for {feature.name!r}: {exc}",
                    raw_response=getattr(exc, "raw_response", None),
                ) from exc
        return samples

    def estimate_risk(self, context):
        if not context.vignette:
            raise SurrogateError("cannot estimate risk from an empty context")
        prompt = prompts.risk_prompt(context.schema, context.vignette, context.disease)

        def parse(raw: str) -> float:
            value = parse_strict_float(raw)
            return min(max(value, 0.0), 1.0)

        self._count("risk")
        try:
            return self._query(prompt, parse)
        except SurrogateError as exc:
            raise ResponseParseError(
                f"unparseable risk: {exc}", raw_response=getattr(exc, "raw_response", None)
            ) from exc

    def implicit_select(self, context, unknown_features):
        if not unknown_features:
            raise SurrogateError("no unknown features to select from")
        prompt = prompts.implicit_prompt(
            context.schema, context.vignette, list(unknown_features), context.disease
        )
        lookup = {name.lower(): name for name in unknown_features}

        def parse(raw: str) -> str:
            token = raw.strip().strip("'\"").lower()
            if token not in lookup:
                raise ResponseParseError(f"invalid selection: {raw!r}", raw_response=raw)
            return lookup[token]

        self._count("selection")
        return self._query(prompt, parse)

    def global_select(self, schema, all_features, n):
        if n > len(all_features):
            raise SurrogateError("cannot select more features than exist")
        prompt = prompts.global_prompt(schema, list(all_features), n)
        lookup = {name.lower(): name for name in all_features}

        def parse(raw: str) -> list[str]:
            try:
                parsed = ast.literal_eval(raw.strip())
            except (ValueError, SyntaxError):
                raise ResponseParseError(
                    f"reply is not a feature list: {raw!r}", raw_response=raw
                ) from None
            if not isinstance(parsed, (list, tuple)):
                raise ResponseParseError(
                    f"reply is not a feature list: {raw!r}", raw_response=raw
                )
            chosen = []
            for item in parsed:
                name = lookup.get(str(item).strip().lower())
                if name is None or name in chosen:
                    raise ResponseParseError(
                        f"invalid or duplicate feature in reply: {item!r}", raw_response=raw
                    )
                chosen.append(name)
            if len(chosen) != n:
                raise ResponseParseError(
                    f"expected {n} features, got {len(chosen)}", raw_response=raw
                )
            return chosen

        self._count("selection")
        return self._query(prompt, parse)


def build_surrogate(config: SurrogateConfig, base_dir: str | Path = ".") -> Surrogate:
    """Instantiate the simulator described by ``config``."""
    base = Path(base_dir)
    if config.kind == "scripted":
        return ScriptedSurrogate.from_files(
            base / config.outcomes_path,
            base / config.risks_path,
            samples_per_query=config.samples_per_query,
        )
    if config.kind == "synthetic":
        world = SyntheticWorld.from_json(base / config.world_path)
        return SyntheticSurrogate(world, exact=config.exact)
    if config.kind == "remote":
        return RemoteSurrogate(config)
    raise ValueError(f"unknown surrogate kind: {config.kind!r}")
