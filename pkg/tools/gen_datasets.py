"""Regenerate the synthetic demo cohorts and the demo scripted tables.

The shipped CSVs are small synthetic cohorts shaped like the public
datasets the manifests describe; they exist so the harness, service,
and UI run out of the box. Rerunning this script reproduces every
generated file byte-for-byte (fixed seeds).
"""

from __future__ import annotations

import csv
import json
from itertools import product
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parents[1] / "src" / "dxsel" / "datasets"


def write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    print(f"wrote {path} ({len(rows)} rows)")


def gen_ckd() -> None:
    rng = np.random.default_rng(101)
    header = [
        "id", "Age", "Blood pressure", "Appetite", "Pedal oedema", "Hypertension",
        "Diabetes mellitus", "Coronary artery disease", "Anaemia", "Specific gravity",
        "Albumin", "Sugar", "Blood glucose random", "Blood urea", "Serum creatinine",
        "Sodium levels", "Potassium levels", "Haemoglobin", "Packed cell volume", "ckd",
    ]
    rows = []
    for i in range(24):
        sick = i < 12
        age = int(rng.integers(35, 80))
        bp = int(rng.integers(70, 100)) if sick else int(rng.integers(60, 85))
        flag = lambda p: "yes" if rng.random() < p else "no"
        appetite = "poor" if (sick and rng.random() < 0.7) else "good"
        rows.append([
            f"ckd{i:03d}", age, bp, appetite,
            flag(0.6 if sick else 0.05), flag(0.7 if sick else 0.2),
            flag(0.5 if sick else 0.15), flag(0.25 if sick else 0.05),
            flag(0.5 if sick else 0.05),
            round(rng.uniform(1.005, 1.015) if sick else rng.uniform(1.015, 1.025), 3),
            round(rng.uniform(1.0, 4.0) if sick else rng.uniform(0.0, 1.0), 1),
            round(rng.uniform(0.0, 3.0) if sick else 0.0, 1),
            round(rng.uniform(120, 420) if sick else rng.uniform(75, 140), 1),
            round(rng.uniform(45, 160) if sick else rng.uniform(15, 45), 1),
            round(rng.uniform(1.8, 9.0) if sick else rng.uniform(0.5, 1.3), 1),
            round(rng.uniform(125, 137) if sick else rng.uniform(136, 145), 1),
            round(rng.uniform(4.0, 6.5) if sick else rng.uniform(3.5, 5.0), 1),
            round(rng.uniform(8.0, 12.0) if sick else rng.uniform(12.5, 16.5), 1),
            round(rng.uniform(20, 34) if sick else rng.uniform(36, 50), 1),
            1 if sick else 0,
        ])
    write_csv(ROOT / "ckd" / "patients.csv", header, rows)


def gen_hepatitis() -> None:
    rng = np.random.default_rng(202)
    header = ["id", "Age", "Sex", "ALB", "ALP", "ALT", "AST", "BIL", "CHE", "CHOL",
              "CREA", "GGT", "PROT", "hcv"]
    rows = []
    for i in range(112):
        sick = i < 56
        rows.append([
            f"hcv{i:03d}",
            int(rng.integers(25, 75)),
            "male" if rng.random() < 0.55 else "female",
            round(rng.uniform(28, 42) if sick else rng.uniform(38, 50), 1),
            round(rng.uniform(60, 200) if sick else rng.uniform(45, 120), 1),
            round(rng.uniform(45, 250) if sick else rng.uniform(10, 45), 1),
            round(rng.uniform(50, 280) if sick else rng.uniform(12, 42), 1),
            round(rng.uniform(12, 60) if sick else rng.uniform(3, 18), 1),
            round(rng.uniform(3.5, 8.0) if sick else rng.uniform(6.0, 12.5), 2),
            round(rng.uniform(2.8, 5.2) if sick else rng.uniform(3.8, 7.2), 2),
            round(rng.uniform(55, 105) if sick else rng.uniform(55, 105), 1),
            round(rng.uniform(60, 300) if sick else rng.uniform(10, 55), 1),
            round(rng.uniform(62, 84) if sick else rng.uniform(64, 80), 1),
            1 if sick else 0,
        ])
    write_csv(ROOT / "hepatitis" / "patients.csv", header, rows)


def gen_diabetes() -> None:
    rng = np.random.default_rng(303)
    header = ["id", "Age", "Pregnancies", "Glucose", "BloodPressure", "SkinThickness",
              "Insulin", "BMI", "DiabetesPedigreeFunction", "outcome"]
    rows = []
    for i in range(40):
        sick = i < 16
        rows.append([
            f"dia{i:03d}",
            int(rng.integers(21, 70)),
            int(rng.integers(0, 11)),
            round(rng.uniform(135, 200) if sick else rng.uniform(70, 135), 1),
            round(rng.uniform(65, 105) if sick else rng.uniform(55, 90), 1),
            round(rng.uniform(25, 50) if sick else rng.uniform(10, 35), 1),
            round(rng.uniform(100, 500) if sick else rng.uniform(15, 160), 1),
            round(rng.uniform(30, 50) if sick else rng.uniform(19, 33), 1),
            round(rng.uniform(0.4, 2.2) if sick else rng.uniform(0.08, 0.8), 3),
            1 if sick else 0,
        ])
    write_csv(ROOT / "diabetes" / "patients.csv", header, rows)


def gen_osce() -> None:
    header = ["id", "Age", "Presenting complaint", "White blood cell count",
              "C-reactive protein", "Lipase", "Troponin", "diagnosis", "label"]
    rows = [
        ["osce001", 48, "abdominal pain", 14.2, 112.0, 890.0, 6.0, "acute pancreatitis", 1],
        ["osce001n", 48, "abdominal pain", 7.1, 3.5, 45.0, 5.0, "acute pancreatitis", 0],
        ["osce002", 61, "chest pain", 9.8, 8.0, 60.0, 220.0, "myocardial infarction", 1],
        ["osce002n", 61, "chest pain", 6.9, 2.0, 55.0, 7.0, "myocardial infarction", 0],
        ["osce003", 35, "shortness of breath", 16.5, 180.0, 70.0, 10.0, "community-acquired pneumonia", 1],
        ["osce003n", 35, "shortness of breath", 5.8, 2.5, 62.0, 6.0, "community-acquired pneumonia", 0],
    ]
    write_csv(ROOT / "osce" / "patients.csv", header, rows)


# -- demo dataset: patients, scripted tables, synthetic world ---------------

CREAT = "Serum creatinine"
SODIUM = "Sodium levels"
HAEMO = "Haemoglobin"

# Draw designs per patient: ordered hypothetical values per feature, the
# patient's true values, and the risk rules that define the scripted tables.
DEMO = {
    "p1": {
        "age": 63.0,
        "base": 0.2,
        "true": {CREAT: 2.6, SODIUM: 131.0, HAEMO: 10.8},
        "draws": {
            CREAT: [2.6, 0.9, 2.3, 1.1],
            SODIUM: [131.0, 140.0, 138.0, 129.0],
            HAEMO: [10.8, 13.5, 12.1, 14.0],
        },
        "creat_risk": {2.6: 0.85, 2.3: 0.75, 1.1: 0.25, 0.9: 0.15},
        "sodium_delta": {131.0: 0.10, 129.0: 0.08, 138.0: 0.0, 140.0: -0.02},
        "haemo_delta": {10.8: 0.10, 12.1: 0.0, 13.5: -0.05, 14.0: -0.08},
    },
    "p2": {
        "age": 45.0,
        "base": 0.15,
        "true": {CREAT: 0.9, SODIUM: 140.0, HAEMO: 13.5},
        "draws": {
            CREAT: [0.8, 1.0, 2.2, 0.95],
            SODIUM: [140.0, 142.0, 137.0, 139.0],
            HAEMO: [13.8, 14.2, 12.9, 13.1],
        },
        "creat_risk": {2.2: 0.7, 0.8: 0.1, 1.0: 0.12, 0.95: 0.11, 0.9: 0.1},
        "sodium_delta": {140.0: -0.02, 142.0: -0.03, 137.0: 0.0, 139.0: -0.01},
        "haemo_delta": {13.8: -0.03, 14.2: -0.05, 12.9: 0.0, 13.1: -0.01, 13.5: -0.02},
    },
}

TABLE_DEPTH = 10  # draw lists cycle to this length so any m <= 10 works


def demo_risk(spec: dict, evidence: dict[str, float]) -> float:
    if CREAT in evidence:
        return spec["creat_risk"][evidence[CREAT]]
    risk = spec["base"]
    if SODIUM in evidence:
        risk += spec["sodium_delta"][evidence[SODIUM]]
    if HAEMO in evidence:
        risk += spec["haemo_delta"][evidence[HAEMO]]
    return round(min(max(risk, 0.01), 0.99), 6)


def gen_demo() -> None:
    demo_dir = ROOT / "demo"
    header = ["id", "Age", CREAT, SODIUM, HAEMO, "ckd"]
    rows = [
        ["p1", 63, 2.6, 131.0, 10.8, 1],
        ["p2", 45, 0.9, 140.0, 13.5, 0],
    ]
    write_csv(demo_dir / "patients.csv", header, rows)

    outcome_lines = []
    risk_lines = []
    for pid, spec in DEMO.items():
        for feature, values in spec["draws"].items():
            for index in range(TABLE_DEPTH):
                outcome_lines.append(
                    f"{pid}\t{feature}\t{index}\t{values[index % len(values)]!r}"
                )
        # Risk entries for every evidence combination over known values:
        # each feature is absent, any of its draw values, or its true value.
        feature_values = {
            feature: sorted({*values, spec["true"][feature]})
            for feature, values in spec["draws"].items()
        }
        age_key = f"Age={spec['age']!r}"
        options = [ [None, *feature_values[f]] for f in (CREAT, SODIUM, HAEMO) ]
        for creat, sodium, haemo in product(*options):
            evidence = {}
            if creat is not None:
                evidence[CREAT] = creat
            if sodium is not None:
                evidence[SODIUM] = sodium
            if haemo is not None:
                evidence[HAEMO] = haemo
            key_parts = [age_key] + [
                f"{name}={value!r}" for name, value in evidence.items()
            ]
            key = "|".join(sorted(key_parts))
            risk_lines.append(f"{pid}\t{key}\t{demo_risk(spec, evidence)}")

    (demo_dir / "outcomes.tsv").write_text("\n".join(outcome_lines) + "\n", encoding="utf-8")
    print(f"wrote {demo_dir / 'outcomes.tsv'} ({len(outcome_lines)} rows)")
    (demo_dir / "risks.tsv").write_text("\n".join(risk_lines) + "\n", encoding="utf-8")
    print(f"wrote {demo_dir / 'risks.tsv'} ({len(risk_lines)} rows)")

    world = {
        "prior_disease_rate": 0.4,
        "features": {
            CREAT: {
                "support": [0.9, 1.1, 2.3, 2.6],
                "p_given_sick": [0.05, 0.15, 0.35, 0.45],
                "p_given_healthy": [0.55, 0.3, 0.1, 0.05],
            },
            SODIUM: {
                "support": [129.0, 131.0, 138.0, 140.0],
                "p_given_sick": [0.3, 0.4, 0.2, 0.1],
                "p_given_healthy": [0.05, 0.15, 0.35, 0.45],
            },
            HAEMO: {
                "support": [10.8, 12.1, 13.5, 14.0],
                "p_given_sick": [0.5, 0.3, 0.15, 0.05],
                "p_given_healthy": [0.05, 0.15, 0.35, 0.45],
            },
        },
    }
    (demo_dir / "world.json").write_text(json.dumps(world, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {demo_dir / 'world.json'}")

    (demo_dir / "scripted.json").write_text(
        json.dumps(
            {"kind": "scripted", "outcomes_path": "outcomes.tsv", "risks_path": "risks.tsv"},
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )
    (demo_dir / "synthetic.json").write_text(
        json.dumps({"kind": "synthetic", "world_path": "world.json"}, indent=2) + "\n",
        encoding="utf-8",
    )
    (demo_dir / "experiment.json").write_text(
        json.dumps(
            {
                "dataset": "manifest.json",
                "methods": ["adaptive", "random", "implicit", "global", "all-features"],
                "budget": 2,
                "gammas": [0.3, 0.5, 0.7],
                "seeds": [0, 1],
                "m": 6,
                "out": "results-demo",
                "surrogate": {"kind": "synthetic", "world_path": "world.json"},
            },
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )
    print(f"wrote demo surrogate and experiment configs")


if __name__ == "__main__":
    gen_ckd()
    gen_hepatitis()
    gen_diabetes()
    gen_osce()
    gen_demo()
