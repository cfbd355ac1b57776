from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from dxsel import _kernels
from dxsel.data import PatientRecord, load_manifest

DEMO_DIR = Path(__file__).parent.parent / "src" / "dxsel" / "datasets" / "demo"
CKD_DIR = Path(__file__).parent.parent / "src" / "dxsel" / "datasets" / "ckd"
DATASETS_DIR = DEMO_DIR.parent


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    # JIT compile once up front so timed tests measure math, not compilation.
    _kernels.warm_up()


@pytest.fixture(scope="session")
def demo_dir() -> Path:
    return DEMO_DIR


@pytest.fixture(scope="session")
def datasets_dir() -> Path:
    return DATASETS_DIR


@pytest.fixture(scope="session")
def ckd_schema():
    schema, _ = load_manifest(CKD_DIR / "manifest.json")
    return schema


@pytest.fixture(scope="session")
def vignette_record() -> PatientRecord:
    # The reference 18-feature record used by the rendering golden test.
    return PatientRecord(
        id="reference",
        values={
            "Age": 63.0,
            "Blood pressure": 70.0,
            "Appetite": "poor",
            "Pedal oedema": "yes",
            "Hypertension": "yes",
            "Diabetes mellitus": "yes",
            "Coronary artery disease": "no",
            "Anaemia": "no",
            "Specific gravity": 1.010,
            "Albumin": 3.0,
            "Sugar": 0.0,
            "Blood glucose random": 380.0,
            "Blood urea": 60.0,
            "Serum creatinine": 2.7,
            "Sodium levels": 131.0,
            "Potassium levels": 4.2,
            "Haemoglobin": 10.8,
            "Packed cell volume": 32.0,
        },
        label=1,
    )


GOLDEN_VIGNETTE = (
    "The patient is 63 years old. "
    "The patient's diastolic blood pressure is 70 mm/Hg. "
    "The patient has a poor appetite. "
    "The patient has pedal oedema. "
    "The patient has hypertension. "
    "The patient has diabetes mellitus. "
    "The patient does not have coronary artery disease. "
    "The patient does not have anaemia. "
    "Specific gravity was measured at 1.01. "
    "Albumin levels in urine was measured at 3.0. "
    "Sugar levels in urine was measured at 0.0. "
    "Blood glucose random was measured at 380.0 mg/dL. "
    "Blood urea was measured at 60.0 mg/dL. "
    "Serum creatinine was measured at 2.7 mg/dL. "
    "Sodium levels was measured at 131.0 mEq/L. "
    "Potassium levels was measured at 4.2 mEq/L. "
    "Haemoglobin levels was measured at 10.8 g/dL. "
    "Packed cell volume was measured at 32.0."
)
