import json
import threading

import httpx
import numpy as np
import pytest
from hypothesis import given, strategies as st

from dxsel.data import DatasetSchema, FeatureSpec
from dxsel.errors import ResponseParseError, SurrogateError
from dxsel.surrogate import (
    EvidenceContext,
    RemoteSurrogate,
    ScriptedSurrogate,
    SurrogateConfig,
    SyntheticSurrogate,
    SyntheticWorld,
    WorldFeature,
    canonical_value,
    evidence_key,
    parse_strict_float,
)

from oracles import world_posterior

import cohorts


class TestParseStrictFloat:
    def test_plain_token_with_whitespace(self):
        assert parse_strict_float(" 0.512\n") == 0.512

    def test_extra_words_rejected(self):
        with pytest.raises(ResponseParseError):
            parse_strict_float("0.9 (high risk)")

    def test_sign_handled(self):
        assert parse_strict_float("-3") == -3.0

    def test_scientific_notation(self):
        assert parse_strict_float("1e-3") == 0.001

    @pytest.mark.parametrize("bad", ["", "abc", "1.2.3", "nan", "inf", "0x12", "1,5"])
    def test_rejects_non_tokens(self, bad):
        with pytest.raises(ResponseParseError):
            parse_strict_float(bad)

    @given(value=st.floats(allow_nan=False, allow_infinity=False, width=64))
    def test_round_trips_reprs(self, value):
        assert parse_strict_float(repr(value)) == value


class TestEvidenceKey:
    def test_sorted_name_value_pairs(self):
        key = evidence_key({"B": 2.0, "A": "yes"})
        assert key == "A=yes|B=2.0"

    def test_canonical_value_is_shortest_float(self):
        assert canonical_value(131.0) == "131.0"
        assert canonical_value(1.010) == "1.01"
        assert canonical_value("high") == "high"


def demo_context(schema, patient_id="p1", **assignments):
    values = {"Age": 63.0, **assignments}
    return EvidenceContext(schema=schema, assignments=values, patient_id=patient_id)


@pytest.fixture(scope="module")
def demo(demo_dir_module):
    from dxsel.data import load_dataset_dir

    schema, records = load_dataset_dir(demo_dir_module)
    surrogate = ScriptedSurrogate.from_files(
        demo_dir_module / "outcomes.tsv", demo_dir_module / "risks.tsv"
    )
    return schema, records, surrogate


@pytest.fixture(scope="module")
def demo_dir_module():
    from conftest import DEMO_DIR

    return DEMO_DIR


class TestScripted:
    def test_samples_in_table_order(self, demo):
        schema, _, surrogate = demo
        spec = schema.feature("Serum creatinine")
        samples = surrogate.sample_outcomes(demo_context(schema), spec, 3, rng_seed=7)
        assert [s.value for s in samples] == [2.6, 0.9, 2.3]

    def test_deterministic_across_seeds(self, demo):
        schema, _, surrogate = demo
        spec = schema.feature("Sodium levels")
        a = surrogate.sample_outcomes(demo_context(schema), spec, 4, rng_seed=1)
        b = surrogate.sample_outcomes(demo_context(schema), spec, 4, rng_seed=99)
        assert [s.value for s in a] == [s.value for s in b]

    def test_risk_lookup(self, demo):
        schema, _, surrogate = demo
        assert surrogate.estimate_risk(demo_context(schema)) == 0.2
        context = demo_context(schema, **{"Serum creatinine": 2.6})
        assert surrogate.estimate_risk(context) == 0.85

    def test_missing_entries_are_typed_errors(self, demo):
        schema, _, surrogate = demo
        with pytest.raises(SurrogateError, match="no scripted risk"):
            surrogate.estimate_risk(demo_context(schema, **{"Serum creatinine": 99.0}))
        spec = schema.feature("Serum creatinine")
        with pytest.raises(SurrogateError, match="holds"):
            surrogate.sample_outcomes(demo_context(schema), spec, 999)

    def test_implicit_select_is_table_argmax(self, demo):
        schema, _, surrogate = demo
        chosen = surrogate.implicit_select(
            demo_context(schema), ["Serum creatinine", "Sodium levels", "Haemoglobin"]
        )
        assert chosen == "Serum creatinine"

    def test_single_candidate_forced(self, demo):
        schema, _, surrogate = demo
        assert surrogate.implicit_select(demo_context(schema), ["Haemoglobin"]) == "Haemoglobin"

    def test_global_ranking(self, demo):
        schema, _, surrogate = demo
        chosen = surrogate.global_select(
            schema, ["Serum creatinine", "Sodium levels", "Haemoglobin"], 2
        )
        assert chosen[0] == "Serum creatinine"
        assert len(chosen) == 2

    def test_query_counter_is_exact(self, demo):
        schema, _, _ = demo
        from conftest import DEMO_DIR

        surrogate = ScriptedSurrogate.from_files(
            DEMO_DIR / "outcomes.tsv", DEMO_DIR / "risks.tsv"
        )
        spec = schema.feature("Haemoglobin")
        surrogate.sample_outcomes(demo_context(schema), spec, 5)
        surrogate.estimate_risk(demo_context(schema))
        surrogate.estimate_risk(demo_context(schema))
        counts = surrogate.query_counts
        assert counts == {"risk": 2, "outcome": 5, "selection": 0}
        assert surrogate.queries_used == 7


WORLD = SyntheticWorld(
    prior_disease_rate=0.5,
    features={
        "test": WorldFeature(
            support=("high", "normal"),
            p_given_sick=(0.9, 0.1),
            p_given_healthy=(0.1, 0.9),
        ),
        "weak": WorldFeature(
            support=("high", "normal"),
            p_given_sick=(0.55, 0.45),
            p_given_healthy=(0.45, 0.55),
        ),
    },
)

WORLD_SCHEMA = DatasetSchema(
    disease_name="testitis",
    label_column="label",
    features=(
        FeatureSpec(
            name="test", kind="categorical", categories=("high", "normal"), vignette_template="{}"
        ),
        FeatureSpec(
            name="weak", kind="categorical", categories=("high", "normal"), vignette_template="{}"
        ),
    ),
)


def world_context(**assignments):
    return EvidenceContext(schema=WORLD_SCHEMA, assignments=assignments, patient_id="w")


class TestSyntheticWorld:
    def test_conditionals_must_sum_to_one(self):
        with pytest.raises(Exception):
            WorldFeature(support=("a", "b"), p_given_sick=(0.5, 0.4), p_given_healthy=(0.5, 0.5))

    def test_posterior_no_evidence_is_prior(self):
        surrogate = SyntheticSurrogate(WORLD)
        assert surrogate.estimate_risk(world_context()) == 0.5

    def test_bayes_posterior(self):
        surrogate = SyntheticSurrogate(WORLD)
        risk = surrogate.estimate_risk(world_context(test="high"))
        assert risk == pytest.approx(0.9, abs=1e-12)  # 0.45 / 0.50

    def test_matches_enumeration_oracle_everywhere(self):
        surrogate = SyntheticSurrogate(WORLD)
        for evidence in (
            {},
            {"test": "high"},
            {"test": "normal"},
            {"weak": "high"},
            {"test": "high", "weak": "normal"},
        ):
            assert surrogate.estimate_risk(world_context(**evidence)) == pytest.approx(
                world_posterior(WORLD, evidence), abs=1e-12
            )

    def test_sampling_frequency_matches_marginal(self):
        surrogate = SyntheticSurrogate(WORLD)
        spec = WORLD_SCHEMA.feature("test")
        samples = surrogate.sample_outcomes(world_context(), spec, 10000, rng_seed=3)
        freq = sum(1 for s in samples if s.value == "high") / 10000
        # Exact marginal is 0.5; binomial 99% bound at n=10000 is ~0.013.
        assert freq == pytest.approx(0.5, abs=0.02)

    def test_sampling_deterministic_given_seed(self):
        surrogate = SyntheticSurrogate(WORLD)
        spec = WORLD_SCHEMA.feature("test")
        a = surrogate.sample_outcomes(world_context(), spec, 50, rng_seed=5)
        b = surrogate.sample_outcomes(world_context(), spec, 50, rng_seed=5)
        assert [s.value for s in a] == [s.value for s in b]

    def test_out_of_support_value_errors(self):
        surrogate = SyntheticSurrogate(WORLD)
        with pytest.raises(SurrogateError, match="support"):
            surrogate.estimate_risk(world_context(test="weird"))

    def test_implicit_picks_exact_argmax(self):
        surrogate = SyntheticSurrogate(WORLD)
        assert surrogate.implicit_select(world_context(), ["weak", "test"]) == "test"

    def test_global_ranks_by_information(self):
        surrogate = SyntheticSurrogate(WORLD)
        assert surrogate.global_select(WORLD_SCHEMA, ["weak", "test"], 1) == ["test"]

    def test_sample_patient_roundtrip(self):
        rng = np.random.default_rng(0)
        record = WORLD.sample_patient(rng, "p0")
        assert set(record.values) == {"test", "weak"}
        assert record.label in (0, 1)


def make_remote(handler, **overrides) -> RemoteSurrogate:
    settings = {
        "kind": "remote",
        "endpoint_url": "http://simulator.test/v1/chat",
        "model_name": "sim-1",
        "max_retries": 2,
        **overrides,
    }
    config = SurrogateConfig(**settings)
    surrogate = RemoteSurrogate(config, transport=httpx.MockTransport(handler))
    surrogate._backoff_base = 0.0  # keep retry tests fast
    return surrogate


def completion(text: str) -> httpx.Response:
    return httpx.Response(200, json={"choices": [{"message": {"content": text}}]})


class TestRemote:
    def test_risk_parse_and_clamp(self, demo):
        schema, _, _ = demo
        surrogate = make_remote(lambda request: completion("0.73"))
        assert surrogate.estimate_risk(demo_context(schema)) == 0.73
        surrogate = make_remote(lambda request: completion("1.0000001"))
        assert surrogate.estimate_risk(demo_context(schema)) == 1.0

    def test_sample_outcome_parse(self, demo):
        schema, _, _ = demo
        surrogate = make_remote(lambda request: completion("2.3\n"))
        spec = schema.feature("Serum creatinine")
        samples = surrogate.sample_outcomes(demo_context(schema), spec, 1)
        assert samples[0].value == 2.3
        assert samples[0].raw_response == "2.3\n"

    def test_retry_then_success(self, demo):
        schema, _, _ = demo
        calls = {"n": 0}

        def flaky(request):
            calls["n"] += 1
            if calls["n"] <= 2:
                return completion("not a number")
            return completion("0.5")

        surrogate = make_remote(flaky)
        assert surrogate.estimate_risk(demo_context(schema)) == 0.5
        assert calls["n"] == 3

    def test_exhausted_retries_raise_typed_error_with_raw(self, demo):
        schema, _, _ = demo
        surrogate = make_remote(lambda request: completion("definitely not a float"))
        with pytest.raises(ResponseParseError, match="unparseable risk") as info:
            surrogate.estimate_risk(demo_context(schema))
        assert "definitely not a float" in (info.value.raw_response or "")

    def test_transport_errors_retried(self, demo):
        schema, _, _ = demo
        calls = {"n": 0}

        def down_then_up(request):
            calls["n"] += 1
            if calls["n"] == 1:
                raise httpx.ConnectError("refused", request=request)
            return completion("0.25")

        surrogate = make_remote(down_then_up)
        assert surrogate.estimate_risk(demo_context(schema)) == 0.25

    def test_implicit_matches_case_insensitively(self, demo):
        schema, _, _ = demo
        surrogate = make_remote(lambda request: completion("'sodium levels'"))
        chosen = surrogate.implicit_select(
            demo_context(schema), ["Serum creatinine", "Sodium levels"]
        )
        assert chosen == "Sodium levels"

    def test_implicit_invalid_reply(self, demo):
        schema, _, _ = demo
        surrogate = make_remote(lambda request: completion("Cholesterol"))
        with pytest.raises(ResponseParseError, match="invalid selection"):
            surrogate.implicit_select(demo_context(schema), ["Serum creatinine"])

    def test_global_list_reply(self, demo):
        schema, _, _ = demo
        surrogate = make_remote(
            lambda request: completion("['Sodium levels', 'Serum creatinine']")
        )
        chosen = surrogate.global_select(
            schema, ["Serum creatinine", "Sodium levels", "Haemoglobin"], 2
        )
        assert chosen == ["Sodium levels", "Serum creatinine"]

    def test_global_wrong_length_rejected(self, demo):
        schema, _, _ = demo
        surrogate = make_remote(lambda request: completion("['Sodium levels']"))
        with pytest.raises(ResponseParseError):
            surrogate.global_select(schema, ["Serum creatinine", "Sodium levels"], 2)

    def test_categorical_sampling_exact_match(self, demo):
        spec = FeatureSpec(
            name="Swelling",
            kind="categorical",
            categories=("yes", "no"),
            vignette_template="{}",
        )
        schema = DatasetSchema(
            disease_name="testitis", label_column="y", features=(spec,)
        )
        surrogate = make_remote(lambda request: completion("yes"))
        context = EvidenceContext(schema=schema, assignments={}, patient_id="x")
        samples = surrogate.sample_outcomes(context, spec, 2)
        assert [s.value for s in samples] == ["yes", "yes"]

    def test_empty_context_rejected(self, demo):
        schema, _, _ = demo
        surrogate = make_remote(lambda request: completion("0.5"))
        context = EvidenceContext(schema=schema, assignments={}, patient_id="p1")
        with pytest.raises(SurrogateError, match="empty context"):
            surrogate.estimate_risk(context)

    def test_request_shape_and_temperature(self, demo):
        schema, _, _ = demo
        seen = {}

        def capture(request):
            seen.update(json.loads(request.content))
            return completion("0.5")

        surrogate = make_remote(capture, temperature=1.0, model_name="sim-1")
        surrogate.estimate_risk(demo_context(schema))
        assert seen["model"] == "sim-1"
        assert seen["temperature"] == 1.0
        roles = [m["role"] for m in seen["messages"]]
        assert roles == ["system", "user"]
        assert "chronic kidney disease" in seen["messages"][1]["content"]

    def test_concurrent_queries_count_exactly(self, demo):
        schema, _, _ = demo
        surrogate = make_remote(lambda request: completion("0.4"))
        threads = [
            threading.Thread(target=lambda: surrogate.estimate_risk(demo_context(schema)))
            for _ in range(16)
        ]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert surrogate.query_counts["risk"] == 16


class TestCohortBuilders:
    def test_pathology_tables_are_complete(self):
        schema, records, surrogate = cohorts.pathology_cohort(n_sick=2, n_healthy=2)
        context = EvidenceContext(
            schema=schema, assignments={"Age": 50.0}, patient_id=records[0].id
        )
        assert surrogate.estimate_risk(context) == 0.2
        spec = schema.feature("T_info")
        samples = surrogate.sample_outcomes(context, spec, 10)
        assert {s.value for s in samples} == {"high", "normal"}
