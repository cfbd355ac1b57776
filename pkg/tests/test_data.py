import io

import pytest
from hypothesis import given, strategies as st

from dxsel.data import (
    DatasetSchema,
    FeatureSpec,
    PatientRecord,
    dump_dataset,
    load_dataset,
    load_dataset_dir,
    load_manifest,
    partition,
    render_values,
    render_vignette,
)
from dxsel.errors import RenderError, SchemaError

from conftest import GOLDEN_VIGNETTE


def small_schema() -> DatasetSchema:
    return DatasetSchema(
        disease_name="testitis",
        label_column="label",
        features=(
            FeatureSpec(
                name="Age",
                kind="numeric",
                value_format="int",
                vignette_template="The patient is {} years old.",
                known_at_start=True,
            ),
            FeatureSpec(
                name="Marker",
                kind="numeric",
                unit="mg/dL",
                vignette_template="Marker was measured at {}.",
            ),
            FeatureSpec(
                name="Swelling",
                kind="categorical",
                categories=("yes", "no"),
                category_phrases={"yes": "has", "no": "does not have"},
                vignette_template="The patient {} swelling.",
            ),
        ),
    )


class TestFeatureSpec:
    def test_template_must_have_single_placeholder(self):
        with pytest.raises(SchemaError):
            FeatureSpec(name="x", vignette_template="no placeholder")
        with pytest.raises(SchemaError):
            FeatureSpec(name="x", vignette_template="{} and {}")

    def test_categorical_requires_categories(self):
        with pytest.raises(SchemaError):
            FeatureSpec(name="x", kind="categorical", vignette_template="{}")

    def test_numeric_rejects_categories(self):
        with pytest.raises(SchemaError):
            FeatureSpec(name="x", kind="numeric", categories=("a",), vignette_template="{}")

    def test_parse_rejects_unknown_category(self):
        spec = FeatureSpec(
            name="x", kind="categorical", categories=("a", "b"), vignette_template="{}"
        )
        assert spec.parse(" a ") == "a"
        with pytest.raises(ValueError):
            spec.parse("c")

    def test_parse_rejects_non_finite(self):
        spec = FeatureSpec(name="x", vignette_template="{}")
        with pytest.raises(ValueError):
            spec.parse("inf")


class TestSchema:
    def test_duplicate_names_rejected(self):
        f = FeatureSpec(name="a", vignette_template="{}")
        with pytest.raises(SchemaError):
            DatasetSchema(disease_name="d", label_column="y", features=(f, f))

    def test_label_column_must_differ(self):
        f = FeatureSpec(name="a", vignette_template="{}")
        with pytest.raises(SchemaError):
            DatasetSchema(disease_name="d", label_column="a", features=(f,))

    def test_needs_a_selectable_feature(self):
        f = FeatureSpec(name="a", vignette_template="{}", known_at_start=True)
        with pytest.raises(SchemaError):
            DatasetSchema(disease_name="d", label_column="y", features=(f,))


class TestPartition:
    def test_ckd_partition(self, ckd_schema):
        known, unknown = partition(ckd_schema)
        assert known == {
            "Age",
            "Blood pressure",
            "Appetite",
            "Pedal oedema",
            "Hypertension",
            "Diabetes mellitus",
            "Coronary artery disease",
            "Anaemia",
        }
        assert unknown == {
            "Specific gravity",
            "Albumin",
            "Sugar",
            "Blood glucose random",
            "Blood urea",
            "Serum creatinine",
            "Sodium levels",
            "Potassium levels",
            "Haemoglobin",
            "Packed cell volume",
        }

    def test_hepatitis_partition(self, datasets_dir):
        schema, _ = load_manifest(datasets_dir / "hepatitis" / "manifest.json")
        known, unknown = partition(schema)
        assert known == {"Age", "Sex"}
        assert unknown == {"ALB", "ALP", "ALT", "AST", "BIL", "CHE", "CHOL", "CREA", "GGT", "PROT"}

    def test_diabetes_partition(self, datasets_dir):
        schema, _ = load_manifest(datasets_dir / "diabetes" / "manifest.json")
        known, unknown = partition(schema)
        assert known == {"Age"}
        assert len(unknown) == 7

    def test_partition_is_exhaustive_and_disjoint(self, ckd_schema):
        known, unknown = partition(ckd_schema)
        assert known | unknown == set(ckd_schema.feature_names)
        assert known & unknown == set()


class TestRendering:
    def test_golden_vignette(self, ckd_schema, vignette_record):
        text = render_vignette(vignette_record, set(ckd_schema.feature_names), ckd_schema)
        assert text == GOLDEN_VIGNETTE

    def test_empty_known_renders_empty(self, ckd_schema, vignette_record):
        assert render_vignette(vignette_record, set(), ckd_schema) == ""

    def test_single_feature_single_sentence(self, ckd_schema, vignette_record):
        text = render_vignette(vignette_record, {"Age"}, ckd_schema)
        assert text == "The patient is 63 years old."

    def test_missing_value_errors(self):
        schema = small_schema()
        with pytest.raises(RenderError):
            render_values({"Age": 50.0}, {"Age", "Marker"}, schema)

    def test_adding_one_feature_appends_one_sentence(self, ckd_schema, vignette_record):
        base = render_vignette(vignette_record, {"Age"}, ckd_schema)
        extended = render_vignette(vignette_record, {"Age", "Serum creatinine"}, ckd_schema)
        assert extended == base + " Serum creatinine was measured at 2.7 mg/dL."

    def test_order_is_schema_order_not_insertion_order(self, ckd_schema, vignette_record):
        a = render_vignette(vignette_record, {"Age", "Haemoglobin"}, ckd_schema)
        b = render_vignette(vignette_record, {"Haemoglobin", "Age"}, ckd_schema)
        assert a == b
        assert a.index("years old") < a.index("Haemoglobin")

    @given(subset=st.sets(st.sampled_from(["Age", "Marker", "Swelling"])))
    def test_injective_on_known_sets(self, subset):
        schema = small_schema()
        values = {"Age": 50.0, "Marker": 1.5, "Swelling": "yes"}
        text = render_values(values, subset, schema)
        sentences = len(text.split(". ")) if text else 0
        assert sentences == len(subset)


CSV_HEADER = "id,Age,Marker,Swelling,label\n"


class TestLoadDataset:
    def test_drops_incomplete_rows(self, caplog):
        csv = CSV_HEADER + "a,50,1.2,yes,1\nb,60,,no,0\nc,70,3.3,no,0\n"
        records = load_dataset(csv, small_schema())
        assert [r.id for r in records] == ["a", "c"]

    def test_balanced_cohort_loads_fully(self, datasets_dir):
        schema, records = load_dataset_dir(datasets_dir / "hepatitis")
        assert len(records) == 112
        assert sum(r.label for r in records) == 56

    def test_missing_column_is_schema_error(self):
        csv = "id,Age,Marker,label\na,50,1.2,1\n"
        with pytest.raises(SchemaError, match="Swelling"):
            load_dataset(csv, small_schema())

    def test_unparseable_cell_drops_row_and_continues(self):
        csv = CSV_HEADER + "a,fifty,1.2,yes,1\nb,60,2.0,no,0\n"
        records = load_dataset(csv, small_schema())
        assert [r.id for r in records] == ["b"]

    def test_empty_result_errors(self):
        with pytest.raises(Exception, match="no complete records"):
            load_dataset(CSV_HEADER, small_schema())

    def test_labels_coerced(self):
        csv = CSV_HEADER + "a,50,1.2,yes,1.0\nb,60,2.0,no,0\n"
        records = load_dataset(csv, small_schema())
        assert [r.label for r in records] == [1, 0]

    def test_byte_stream_input(self):
        csv = (CSV_HEADER + "a,50,1.2,yes,1\n").encode("utf-8")
        records = load_dataset(io.BytesIO(csv), small_schema())
        assert records[0].values["Marker"] == 1.2

    def test_round_trip(self):
        csv = CSV_HEADER + "a,50,1.25,yes,1\nb,61,2.0,no,0\n"
        schema = small_schema()
        records = load_dataset(csv, schema)
        again = load_dataset(dump_dataset(records, schema), schema)
        assert again == records

    def test_disease_column(self, datasets_dir):
        schema, records = load_dataset_dir(datasets_dir / "osce")
        assert schema.disease_column == "diagnosis"
        assert records[0].disease_name == "acute pancreatitis"
        by_id = {r.id: r for r in records}
        assert by_id["osce002"].disease_name == "myocardial infarction"


class TestManifests:
    def test_all_shipped_manifests_load(self, datasets_dir):
        names = set()
        for manifest in sorted(datasets_dir.glob("*/manifest.json")):
            schema, records = load_dataset_dir(manifest)
            names.add(schema.name)
            assert records
        assert {"ckd", "ckd-demo", "hepatitis", "diabetes", "osce"} <= names

    def test_unknown_path_is_schema_error(self, tmp_path):
        with pytest.raises(SchemaError):
            load_manifest(tmp_path / "missing.json")
