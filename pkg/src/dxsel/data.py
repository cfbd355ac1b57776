"""Dataset schemas, CSV ingestion, and clinical vignette rendering.

A dataset is declared by a JSON manifest (schema as data, not code):
disease name, prompt preamble, ordered feature specs, label column, and
the patient CSV path. Loading drops rows with missing or unparseable
cells, mirroring a complete-case analysis. Rendering converts the known
subset of a record into a deterministic natural-language vignette, one
sentence per feature in schema order.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Mapping, Sequence

from .errors import DatasetError, RenderError, SchemaError

log = logging.getLogger(__name__)

Value = float | str


@dataclass(frozen=True, slots=True)
class FeatureSpec:
    """Schema entry for one observable or orderable test.

    ``vignette_template`` must contain exactly one ``{}`` placeholder;
    it receives the rendered value (with unit appended when present).
    ``category_phrases`` optionally maps a categorical value to the text
    substituted into the template (e.g. yes -> "has"). ``value_format``
    selects numeric rendering: ``float`` uses the shortest round-trip
    decimal, ``int`` drops the fraction for integral values.
    """

    name: str
    kind: str = "numeric"
    unit: str = ""
    categories: tuple[str, ...] = ()
    vignette_template: str = ""
    ref_info: str = ""
    known_at_start: bool = False
    cost: float = 1.0
    category_phrases: Mapping[str, str] = field(default_factory=dict)
    value_format: str = "float"

    def __post_init__(self) -> None:
        if self.kind not in ("numeric", "categorical"):
            raise SchemaError(f"feature {self.name!r}: unknown kind {self.kind!r}")
        if self.vignette_template.count("{}") != 1:
            raise SchemaError(
                f"feature {self.name!r}: template must contain exactly one placeholder"
            )
        if self.kind == "categorical" and not self.categories:
            raise SchemaError(f"feature {self.name!r}: categorical without categories")
        if self.kind == "numeric" and self.categories:
            raise SchemaError(f"feature {self.name!r}: numeric with categories")
        if self.value_format not in ("float", "int"):
            raise SchemaError(f"feature {self.name!r}: bad value_format")
        if self.cost <= 0.0:
            raise SchemaError(f"feature {self.name!r}: cost must be positive")

    def parse(self, raw: str) -> Value:
        """Coerce a CSV cell or sampled reply into this feature's value type."""
        raw = raw.strip()
        if self.kind == "categorical":
            if raw not in self.categories:
                raise ValueError(
                    f"{raw!r} is not a category of {self.name!r} ({list(self.categories)})"
                )
            return raw
        value = float(raw)
        if value != value or value in (float("inf"), float("-inf")):
            raise ValueError(f"non-finite value for {self.name!r}: {raw!r}")
        return value

    def render_value(self, value: Value) -> str:
        if self.kind == "categorical":
            text = self.category_phrases.get(str(value), str(value))
        elif self.value_format == "int" and float(value) == int(float(value)):
            text = str(int(float(value)))
        else:
            text = str(float(value))
        if self.unit:
            text = f"{text} {self.unit}"
        return text

    def sentence(self, value: Value) -> str:
        return self.vignette_template.format(self.render_value(value))


@dataclass(frozen=True)
class DatasetSchema:
    """Ordered feature specs plus prompt context for one diagnostic task."""

    disease_name: str
    features: tuple[FeatureSpec, ...]
    label_column: str
    context_preamble: str = ""
    label_mapping: Mapping[str, int] = field(default_factory=dict)
    disease_column: str | None = None
    name: str = ""

    def __post_init__(self) -> None:
        names = [f.name for f in self.features]
        if len(set(names)) != len(names):
            raise SchemaError("feature names must be unique")
        if self.label_column in names:
            raise SchemaError("label column must be distinct from feature names")
        if all(f.known_at_start for f in self.features):
            raise SchemaError("at least one feature must be unknown at start")

    @property
    def feature_names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.features)

    def feature(self, name: str) -> FeatureSpec:
        for spec in self.features:
            if spec.name == name:
                return spec
        raise SchemaError(f"unknown feature {name!r}")

    def order_key(self, name: str) -> int:
        return self.feature_names.index(name)


@dataclass(frozen=True, slots=True)
class PatientRecord:
    """One patient's complete ground-truth values and binary label."""

    id: str
    values: Mapping[str, Value]
    label: int
    disease_name: str | None = None


def partition(schema: DatasetSchema) -> tuple[set[str], set[str]]:
    """Split feature names into (known at start, selectable)."""
    known = {f.name for f in schema.features if f.known_at_start}
    unknown = {f.name for f in schema.features if not f.known_at_start}
    return known, unknown


def render_values(values: Mapping[str, Value], known: Iterable[str], schema: DatasetSchema) -> str:
    """Render the known subset of ``values`` as a vignette paragraph.

    One sentence per known feature, in schema order, joined by single
    spaces. Unknown features are omitted entirely, so the empty known
    set renders as the empty string.
    """
    known = set(known)
    sentences = []
    for spec in schema.features:
        if spec.name not in known:
            continue
        if spec.name not in values:
            raise RenderError(f"known feature {spec.name!r} has no value")
        sentences.append(spec.sentence(values[spec.name]))
    return " ".join(sentences)


def render_vignette(record: PatientRecord, known: Iterable[str], schema: DatasetSchema) -> str:
    return render_values(record.values, known, schema)


def _coerce_label(raw: str, mapping: Mapping[str, int]) -> int:
    raw = raw.strip()
    if raw in mapping:
        return int(mapping[raw])
    try:
        value = float(raw)
    except ValueError:
        raise ValueError(f"label {raw!r} is neither mapped nor numeric") from None
    if value not in (0.0, 1.0):
        raise ValueError(f"label {raw!r} does not coerce to 0/1")
    return int(value)


def load_dataset(csv_source: IO[bytes] | IO[str] | bytes | str, schema: DatasetSchema) -> list[PatientRecord]:
    """Load patient records, dropping incomplete rows.

    Rows with any blank feature cell are dropped silently-but-logged
    (complete-case filtering); rows with unparseable cells are dropped
    with a row-level log entry. A missing column or an empty result is
    an error.
    """
    if isinstance(csv_source, bytes):
        text: IO[str] = io.StringIO(csv_source.decode("utf-8"))
    elif isinstance(csv_source, str):
        text = io.StringIO(csv_source)
    elif isinstance(csv_source, io.TextIOBase):
        text = csv_source
    else:
        text = io.TextIOWrapper(csv_source, encoding="utf-8")

    reader = csv.DictReader(text)
    header = reader.fieldnames or []
    for required in (*schema.feature_names, schema.label_column):
        if required not in header:
            raise SchemaError(f"CSV is missing column {required!r}")
    if schema.disease_column and schema.disease_column not in header:
        raise SchemaError(f"CSV is missing column {schema.disease_column!r}")

    id_column = "id" if "id" in header else None
    records: list[PatientRecord] = []
    for index, row in enumerate(reader):
        cells = {name: (row.get(name) or "").strip() for name in schema.feature_names}
        label_raw = (row.get(schema.label_column) or "").strip()
        if not label_raw or any(not cell for cell in cells.values()):
            log.warning("dropping row %d: missing values", index)
            continue
        try:
            values = {
                name: schema.feature(name).parse(cell) for name, cell in cells.items()
            }
            label = _coerce_label(label_raw, schema.label_mapping)
        except ValueError as exc:
            log.warning("dropping row %d: %s", index, exc)
            continue
        record_id = row[id_column].strip() if id_column else str(index)
        disease = None
        if schema.disease_column:
            disease = (row.get(schema.disease_column) or "").strip() or None
        records.append(
            PatientRecord(id=record_id, values=values, label=label, disease_name=disease)
        )
    if not records:
        raise DatasetError("no complete records in CSV source")
    return records


def dump_dataset(records: Sequence[PatientRecord], schema: DatasetSchema) -> str:
    """Serialize records back to CSV text; inverse of :func:`load_dataset`."""
    out = io.StringIO()
    columns = ["id", *schema.feature_names, schema.label_column]
    if schema.disease_column:
        columns.append(schema.disease_column)
    writer = csv.DictWriter(out, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for record in records:
        row = {"id": record.id, schema.label_column: record.label}
        for name in schema.feature_names:
            value = record.values[name]
            row[name] = value if isinstance(value, str) else repr(float(value))
        if schema.disease_column:
            row[schema.disease_column] = record.disease_name or ""
        writer.writerow(row)
    return out.getvalue()


def _feature_from_manifest(entry: Mapping) -> FeatureSpec:
    return FeatureSpec(
        name=entry["name"],
        kind=entry.get("kind", "numeric"),
        unit=entry.get("unit", ""),
        categories=tuple(entry.get("categories", ())),
        vignette_template=entry["vignette_template"],
        ref_info=entry.get("ref_info", ""),
        known_at_start=bool(entry.get("known_at_start", False)),
        cost=float(entry.get("cost", 1.0)),
        category_phrases=dict(entry.get("category_phrases", {})),
        value_format=entry.get("value_format", "float"),
    )


def load_manifest(path: str | Path) -> tuple[DatasetSchema, Path]:
    """Read a dataset manifest; returns the schema and resolved CSV path."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaError(f"cannot read manifest {path}: {exc}") from exc
    try:
        schema = DatasetSchema(
            disease_name=raw["disease_name"],
            features=tuple(_feature_from_manifest(f) for f in raw["features"]),
            label_column=raw["label_column"],
            context_preamble=raw.get("context_preamble", ""),
            label_mapping={k: int(v) for k, v in raw.get("label_mapping", {}).items()},
            disease_column=raw.get("disease_column"),
            name=raw.get("name", path.parent.name),
        )
    except KeyError as exc:
        raise SchemaError(f"manifest {path} is missing key {exc}") from exc
    csv_path = (path.parent / raw.get("csv_path", "patients.csv")).resolve()
    return schema, csv_path


def load_dataset_dir(path: str | Path) -> tuple[DatasetSchema, list[PatientRecord]]:
    """Load a manifest directory (or manifest file) and its patient CSV."""
    path = Path(path)
    manifest = path / "manifest.json" if path.is_dir() else path
    schema, csv_path = load_manifest(manifest)
    with open(csv_path, "rb") as handle:
        records = load_dataset(handle, schema)
    return schema, records


def builtin_dataset_dir() -> Path:
    """Directory of the dataset manifests shipped with the package."""
    return Path(__file__).parent / "datasets"
