"""Batch experiment runner and report writer.

An experiment sweeps methods x seeds (x gamma for the adaptive
methods) over a dataset cohort, collects final risks and trajectories,
and writes: per-seed metric rows (``report.csv``), seed-aggregated
means and deviations (``report.txt``), the full per-episode trajectory
archive (``trajectories/``), selection frequencies
(``frequencies.csv``), and simulator sample fidelity (``fidelity.csv``).
"""

from __future__ import annotations

import csv
import json
import logging
import os
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .belief import CostModel, StoppingPolicy
from .data import DatasetSchema, PatientRecord, load_dataset_dir, partition
from .engine import EpisodeResult, dump_episode, run_episode
from .metrics import (
    bayesian_bootstrap,
    best_of_k_mae,
    compute_classification_metrics,
    energy_distance_1d,
    normalize_feature,
    wasserstein_1d,
)
from .surrogate import EvidenceContext, Surrogate, SurrogateConfig, build_surrogate

log = logging.getLogger(__name__)

ADAPTIVE_METHODS = ("adaptive", "adaptive-entropy")


@dataclass
class ExperimentConfig:
    dataset: str
    methods: list[str] = field(default_factory=lambda: ["adaptive"])
    budget: int = 3
    gammas: list[float] = field(default_factory=lambda: [0.3, 0.5, 0.7])
    seeds: list[int] = field(default_factory=lambda: [0, 1, 2, 3, 4])
    m: int = 10
    theta: float = 0.5
    criterion: str = "kl"
    surrogate: SurrogateConfig = field(default_factory=SurrogateConfig)
    out: str = "results"
    workers: int = 0  # 0 = hardware parallelism
    cost_mode: str = "uniform"
    raw_costs: dict[str, float] = field(default_factory=dict)
    fidelity: bool = True  # also emit fidelity.csv (extra simulator sampling)

    def __post_init__(self) -> None:
        if not self.seeds or len(set(self.seeds)) != len(self.seeds):
            raise ValueError("seeds must be non-empty and distinct")
        if self.budget < 1:
            raise ValueError("budget must be at least 1")

    @classmethod
    def from_json(cls, path: str | Path) -> "ExperimentConfig":
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        surrogate = SurrogateConfig.from_mapping(raw.pop("surrogate", {}))
        config = cls(surrogate=surrogate, **raw)
        if not Path(config.dataset).is_absolute():
            config.dataset = str((Path(path).parent / config.dataset).resolve())
        return config

    def cost_model(self) -> CostModel:
        if self.cost_mode == "uniform":
            return CostModel.uniform()
        return CostModel.per_feature(self.raw_costs)


@dataclass
class MetricsReport:
    per_seed: list[dict] = field(default_factory=list)
    aggregates: list[dict] = field(default_factory=list)
    tests_per_gamma: list[dict] = field(default_factory=list)
    frequencies: list[dict] = field(default_factory=list)
    bootstrap: list[dict] = field(default_factory=list)
    overlap: list[dict] = field(default_factory=list)
    failures: dict[str, int] = field(default_factory=dict)
    global_features: list[str] = field(default_factory=list)


def _episode_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def _combo_label(method: str, gamma: float | None) -> str:
    return method if gamma is None else f"{method}@gamma={gamma:g}"


def run_cohort(
    schema: DatasetSchema,
    records: Sequence[PatientRecord],
    method: str,
    budget: int,
    surrogate: Surrogate,
    seed: int,
    policy: StoppingPolicy,
    m: int,
    criterion: str = "kl",
    cost_model: CostModel | None = None,
    global_features: Sequence[str] | None = None,
    workers: int = 1,
) -> list[EpisodeResult]:
    """Run one (method, seed) pass over every patient, in parallel."""

    def one(index_record) -> EpisodeResult:
        index, record = index_record
        return run_episode(
            record,
            schema,
            method,
            budget,
            surrogate,
            rng_seed=_episode_seed(seed, index),
            policy=policy,
            m=m,
            criterion=criterion,
            cost_model=cost_model,
            global_features=global_features,
        )

    items = list(enumerate(records))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(one, items))
    return [one(item) for item in items]


def _aggregate(rows: list[dict], keys: tuple[str, ...], metrics: tuple[str, ...]) -> list[dict]:
    grouped: dict[tuple, list[dict]] = defaultdict(list)
    for row in rows:
        grouped[tuple(row[k] for k in keys)].append(row)
    aggregates = []
    for group_key, group in sorted(grouped.items(), key=lambda kv: str(kv[0])):
        entry = dict(zip(keys, group_key))
        entry["seeds"] = len(group)
        for metric in metrics:
            values = [row[metric] for row in group if row[metric] is not None]
            if not values:
                entry[f"{metric}_mean"] = None
                entry[f"{metric}_std"] = None
                continue
            entry[f"{metric}_mean"] = float(np.mean(values))
            entry[f"{metric}_std"] = float(np.std(values, ddof=1)) if len(values) > 1 else 0.0
        aggregates.append(entry)
    return aggregates


def run_experiment(
    config: ExperimentConfig,
    schema: DatasetSchema | None = None,
    records: Sequence[PatientRecord] | None = None,
    surrogate: Surrogate | None = None,
    write: bool = True,
) -> MetricsReport:
    """Execute the full sweep and assemble the metrics report."""
    if schema is None or records is None:
        schema, records = load_dataset_dir(config.dataset)
    if surrogate is None:
        surrogate = build_surrogate(config.surrogate, Path(config.dataset).parent)
    workers = config.workers or os.cpu_count() or 1
    cost_model = config.cost_model()
    _, unknown = partition(schema)
    unknown_ordered = [name for name in schema.feature_names if name in unknown]

    # One global choice per experiment, before any patient data is seen.
    global_features = surrogate.global_select(schema, unknown_ordered, config.budget)

    report = MetricsReport(global_features=list(global_features))
    out_dir = Path(config.out)
    trajectories_dir = out_dir / "trajectories"
    if write:
        trajectories_dir.mkdir(parents=True, exist_ok=True)

    selections: dict[str, list[list[str]]] = defaultdict(list)
    risks_by_combo: dict[str, dict[int, list]] = defaultdict(dict)

    for method in config.methods:
        gammas = config.gammas if method in ADAPTIVE_METHODS else [None]
        for gamma in gammas:
            policy = StoppingPolicy(
                theta=config.theta, gamma=gamma if gamma is not None else 0.0
            )
            label = _combo_label(method, gamma)
            for seed in config.seeds:
                results = run_cohort(
                    schema,
                    records,
                    method,
                    config.budget,
                    surrogate,
                    seed,
                    policy,
                    config.m,
                    criterion=config.criterion,
                    cost_model=cost_model,
                    global_features=global_features if method == "global" else None,
                    workers=workers,
                )
                ok = [r for r in results if not r.failed]
                failed = len(results) - len(ok)
                report.failures[label] = report.failures.get(label, 0) + failed
                if not ok:
                    log.warning("all episodes failed for %s seed %d", label, seed)
                    continue
                labels = [r.true_label for r in ok]
                risks = [r.final_risk for r in ok]
                tests = [r.session.acquired for r in ok]
                scores = compute_classification_metrics(labels, risks, config.theta)
                row = {
                    "method": method,
                    "gamma": gamma,
                    "seed": seed,
                    **scores.as_dict(),
                    "mean_tests": float(np.mean(tests)),
                    "failures": failed,
                }
                report.per_seed.append(row)
                risks_by_combo[label][seed] = (labels, risks)
                selections[label].append(
                    [step.chosen for r in ok for step in r.session.trajectory if step.chosen]
                )
                if write:
                    for index, result in enumerate(results):
                        name = f"{label.replace('@', '_')}-s{seed}-p{result.session.patient_id}.json"
                        (trajectories_dir / name).write_text(
                            dump_episode(result, config.criterion, gamma, seed_label=seed),
                            encoding="utf-8",
                        )

    metric_names = ("accuracy", "precision", "recall", "f1", "auc", "mean_tests")
    report.aggregates = _aggregate(report.per_seed, ("method", "gamma"), metric_names)
    report.tests_per_gamma = [
        {
            "method": entry["method"],
            "gamma": entry["gamma"],
            "tests_mean": entry["mean_tests_mean"],
            "tests_std": entry["mean_tests_std"],
        }
        for entry in report.aggregates
        if entry["method"] in ADAPTIVE_METHODS
    ]

    for label, per_seed_lists in selections.items():
        counts: dict[str, int] = defaultdict(int)
        episodes = len(config.seeds) * len(records)
        for selected in per_seed_lists:
            for name in selected:
                counts[name] += 1
        for name in unknown_ordered:
            report.frequencies.append(
                {
                    "combo": label,
                    "feature": name,
                    "rate": counts.get(name, 0) / episodes if episodes else 0.0,
                }
            )
        overlap_hits = sum(counts.get(name, 0) for name in global_features)
        total_selected = sum(counts.values())
        report.overlap.append(
            {
                "combo": label,
                "overlap_with_global": overlap_hits / total_selected if total_selected else 0.0,
            }
        )

    for label, by_seed in risks_by_combo.items():
        all_labels = [l for seed in by_seed.values() for l in seed[0]]
        all_risks = [r for seed in by_seed.values() for r in seed[1]]
        for stratum in (0, 1):
            values = [r for l, r in zip(all_labels, all_risks) if l == stratum]
            if not values:
                continue
            mean, std, (low, high) = bayesian_bootstrap(values, draws=2000, rng_seed=0)
            report.bootstrap.append(
                {
                    "combo": label,
                    "label": stratum,
                    "risk_mean": float(np.mean(values)),
                    "risk_std": float(np.std(values, ddof=1)) if len(values) > 1 else 0.0,
                    "boot_mean": mean,
                    "boot_std": std,
                    "ci_low": low,
                    "ci_high": high,
                }
            )

    if write:
        write_report(report, out_dir)
        if config.fidelity:
            try:
                rows = sample_fidelity(
                    schema, records, surrogate, m=config.m, seed=config.seeds[0]
                )
                _write_csv(out_dir / "fidelity.csv", rows)
            except Exception as exc:  # fidelity is auxiliary; never fail the run
                log.warning("skipping fidelity.csv: %s", exc)
    return report


# ---------------------------------------------------------------------------
# Sample fidelity (simulator vs dataset distributions)
# ---------------------------------------------------------------------------


def sample_fidelity(
    schema: DatasetSchema,
    records: Sequence[PatientRecord],
    surrogate: Surrogate,
    m: int = 10,
    seed: int = 0,
) -> list[dict]:
    """Compare simulated outcome distributions to the true ones.

    For every numeric selectable feature: draw ``m`` outcomes per
    patient conditioned on the known-at-start vignette, then report the
    range-normalized Wasserstein and energy distances between pooled
    samples and the empirical values, plus the mean per-patient
    best-of-m absolute error as a percentage of the feature range.
    """
    known, unknown = partition(schema)
    rows = []
    for spec in schema.features:
        if spec.name not in unknown or spec.kind != "numeric":
            continue
        truths, pooled, best_errors = [], [], []
        for index, record in enumerate(records):
            context_session = {name: record.values[name] for name in known}
            context = EvidenceContext(
                schema=schema,
                assignments=context_session,
                patient_id=record.id,
                disease_name=record.disease_name,
            )
            samples = surrogate.sample_outcomes(
                context, spec, m, rng_seed=_episode_seed(seed, index)
            )
            values = [float(s.value) for s in samples]
            truth = float(record.values[spec.name])
            truths.append(truth)
            pooled.extend(values)
            best_errors.append(best_of_k_mae(values, truth, m))
        low, high = min(truths), max(truths)
        if high <= low:
            log.warning("skipping constant feature %s", spec.name)
            continue
        norm_truths = normalize_feature(truths, low, high)
        norm_pooled = normalize_feature(pooled, low, high)
        rows.append(
            {
                "feature": spec.name,
                "wasserstein": wasserstein_1d(norm_pooled, norm_truths),
                "energy": energy_distance_1d(norm_pooled, norm_truths),
                "best_mae_pct": 100.0 * float(np.mean(best_errors)) / (high - low),
            }
        )
    return rows


# ---------------------------------------------------------------------------
# Report files
# ---------------------------------------------------------------------------


def _write_csv(path: Path, rows: list[dict]) -> None:
    if not rows:
        path.write_text("", encoding="utf-8")
        return
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(handle, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)


def write_report(report: MetricsReport, out_dir: str | Path) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_csv(out_dir / "report.csv", report.per_seed)
    _write_csv(out_dir / "frequencies.csv", report.frequencies)

    lines = ["experiment report", "=" * 60, ""]
    lines.append(f"global features: {', '.join(report.global_features)}")
    lines.append("")
    lines.append("aggregates (mean +/- std across seeds)")
    for entry in report.aggregates:
        label = _combo_label(entry["method"], entry["gamma"])
        parts = []
        for metric in ("accuracy", "precision", "recall", "f1", "auc", "mean_tests"):
            mean = entry.get(f"{metric}_mean")
            std = entry.get(f"{metric}_std")
            if mean is None:
                parts.append(f"{metric}=undefined")
            else:
                parts.append(f"{metric}={mean:.4f}+/-{std:.4f}")
        lines.append(f"  {label}: " + " ".join(parts))
    lines.append("")
    if report.tests_per_gamma:
        lines.append("tests per patient by gamma")
        for entry in report.tests_per_gamma:
            lines.append(
                f"  {entry['method']} gamma={entry['gamma']:g}: "
                f"{entry['tests_mean']:.3f}+/-{entry['tests_std']:.3f}"
            )
        lines.append("")
    if report.overlap:
        lines.append("overlap of selections with the global-best set")
        for entry in report.overlap:
            lines.append(f"  {entry['combo']}: {entry['overlap_with_global']:.3f}")
        lines.append("")
    if report.bootstrap:
        lines.append("final risk by true label (bootstrap 95% interval)")
        for entry in report.bootstrap:
            lines.append(
                f"  {entry['combo']} label={entry['label']}: mean={entry['risk_mean']:.3f} "
                f"std={entry['risk_std']:.3f} ci=[{entry['ci_low']:.3f}, {entry['ci_high']:.3f}]"
            )
        lines.append("")
    if report.failures:
        lines.append("episode failures")
        for label, count in sorted(report.failures.items()):
            lines.append(f"  {label}: {count}")
    (out_dir / "report.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")


def report_from_trajectories(trajectories_dir: str | Path, theta: float = 0.5) -> MetricsReport:
    """Recompute per-seed metrics from an emitted trajectory archive."""
    rows_by_combo: dict[tuple, dict] = defaultdict(lambda: defaultdict(list))
    for path in sorted(Path(trajectories_dir).glob("*.json")):
        doc = json.loads(path.read_text(encoding="utf-8"))
        if doc.get("final", {}).get("failed"):
            continue
        key = (doc["method"], doc.get("gamma_label"), doc["seed"])
        rows_by_combo[key]["labels"].append(doc["label"])
        rows_by_combo[key]["risks"].append(doc["final"]["risk"])
        rows_by_combo[key]["tests"].append(
            sum(1 for step in doc["steps"] if step["chosen"] is not None)
        )
    report = MetricsReport()
    for (method, gamma, seed), data in sorted(rows_by_combo.items(), key=lambda kv: str(kv[0])):
        scores = compute_classification_metrics(data["labels"], data["risks"], theta)
        report.per_seed.append(
            {
                "method": method,
                "gamma": gamma,
                "seed": seed,
                **scores.as_dict(),
                "mean_tests": float(np.mean(data["tests"])),
                "failures": 0,
            }
        )
    metric_names = ("accuracy", "precision", "recall", "f1", "auc", "mean_tests")
    report.aggregates = _aggregate(report.per_seed, ("method", "gamma"), metric_names)
    return report
