"""Session-oriented HTTP service for the live diagnosis loop.

A human operator opens a session against a dataset, fetches the
engine's evaluated recommendation (idempotent per step: the cached
Monte Carlo evidence is returned until a result is submitted), submits
the real test result (accepting or overriding the recommendation), and
reads the full belief trajectory. The service never acquires a value by
itself; every knowledge-base mutation arrives through a client call.

Errors use a uniform ``{code, message, field?}`` envelope. Sessions
live in an embedded sqlite store so a restart does not lose them.
"""

from __future__ import annotations

import threading
import uuid
import zlib
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Mapping

import numpy as np
from fastapi import Depends, FastAPI, Request
from fastapi.responses import JSONResponse

from .belief import StoppingPolicy
from .data import DatasetSchema, PatientRecord, load_dataset_dir
from .engine import (
    ABANDONED,
    ACTIVE,
    BUDGET_EXHAUSTED,
    DIAGNOSED,
    STOPPED,
    PendingStep,
    SessionState,
    apply_result,
    new_session,
    prepare_step,
    session_from_doc,
    session_to_doc,
)
from .errors import DxselError, SessionStateError, SurrogateError
from .store import SessionStore
from .surrogate import Surrogate, SurrogateConfig, build_surrogate

TERMINAL_STATUSES = (BUDGET_EXHAUSTED, DIAGNOSED, ABANDONED)


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str, field_name: str | None = None):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message
        self.field_name = field_name


@dataclass
class ServiceConfig:
    dataset_dir: str
    surrogate: SurrogateConfig = field(default_factory=SurrogateConfig)
    surrogate_base_dir: str = "."
    store_path: str = ":memory:"
    m: int = 10
    default_budget: int = 3
    default_theta: float = 0.5
    default_gamma: float = 0.5
    bearer_token: str | None = None
    ui_dir: str | None = None


class SessionService:
    """Request-independent core so tests can drive it without HTTP."""

    def __init__(self, config: ServiceConfig, surrogate: Surrogate | None = None):
        self.config = config
        self.datasets: dict[str, tuple[DatasetSchema, dict[str, PatientRecord]]] = {}
        for manifest in sorted(Path(config.dataset_dir).glob("*/manifest.json")):
            schema, records = load_dataset_dir(manifest)
            self.datasets[schema.name] = (schema, {r.id: r for r in records})
        if not self.datasets:
            raise DxselError(f"no dataset manifests under {config.dataset_dir}")
        self.surrogate = surrogate or build_surrogate(
            config.surrogate, config.surrogate_base_dir
        )
        self.store = SessionStore(config.store_path)
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    def _lock(self, session_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(session_id, threading.Lock())

    def _load(self, session_id: str) -> tuple[SessionState, dict]:
        doc = self.store.get(session_id)
        if doc is None:
            raise ApiError(404, "not_found", f"unknown session {session_id!r}")
        schema, _ = self.datasets[doc["dataset"]]
        return session_from_doc(doc["session"], schema), doc

    def _save(self, session_id: str, session: SessionState, doc: dict) -> dict:
        doc["session"] = session_to_doc(session)
        doc["updated_at"] = _now()
        self.store.put(session_id, doc)
        return doc

    # -- operations ----------------------------------------------------

    def create_session(self, body: Mapping) -> dict:
        dataset = body.get("dataset")
        if not dataset or dataset not in self.datasets:
            raise ApiError(404, "not_found", f"unknown dataset {dataset!r}", "dataset")
        schema, records = self.datasets[dataset]
        policy = StoppingPolicy(
            theta=float(body.get("theta", self.config.default_theta)),
            gamma=float(body.get("gamma", self.config.default_gamma)),
        )
        budget = int(body.get("budget", self.config.default_budget))
        patient_id = body.get("patient_id")
        known_values = body.get("known_values")
        if patient_id is not None:
            record = records.get(str(patient_id))
            if record is None:
                raise ApiError(404, "not_found", f"unknown patient {patient_id!r}", "patient_id")
            session = new_session(schema, patient=record, budget=budget, policy=policy)
        elif known_values is not None:
            try:
                session = new_session(
                    schema, known_values=known_values, budget=budget, policy=policy
                )
            except (ValueError, DxselError) as exc:
                raise ApiError(422, "validation", str(exc), "known_values") from exc
        else:
            raise ApiError(
                422, "validation", "either patient_id or known_values is required", "patient_id"
            )
        prior_override = body.get("prior_override")
        if prior_override is not None and not 0.0 <= float(prior_override) <= 1.0:
            raise ApiError(422, "validation", "prior_override must be in [0, 1]", "prior_override")
        session_id = uuid.uuid4().hex
        doc = {
            "session_id": session_id,
            "dataset": dataset,
            "created_at": _now(),
            "updated_at": _now(),
            "prior_override": prior_override,
            "session": None,
        }
        self._save(session_id, session, doc)
        return self._resource(session_id, session, doc)

    def get_session(self, session_id: str) -> dict:
        session, doc = self._load(session_id)
        return self._resource(session_id, session, doc)

    def recommendation(self, session_id: str) -> dict:
        with self._lock(session_id):
            session, doc = self._load(session_id)
            if session.status in TERMINAL_STATUSES:
                raise ApiError(409, "conflict", f"session is {session.status}")
            if session.acquired >= session.budget or not session.unknown:
                session.status = BUDGET_EXHAUSTED
                self._save(session_id, session, doc)
                raise ApiError(409, "conflict", "session budget is exhausted")
            if session.pending is None:
                prior_override = doc.pop("prior_override", None)
                seed = zlib.crc32(f"{session_id}:{len(session.trajectory)}".encode())
                try:
                    prepare_step(
                        session,
                        self.surrogate,
                        self.config.m,
                        rng=np.random.default_rng(seed),
                        prior_override=prior_override,
                    )
                except SurrogateError as exc:
                    raise ApiError(
                        502, "upstream", f"simulator failure: {exc}"
                    ) from exc
                if session.pending.would_stop:
                    session.status = STOPPED
                self._save(session_id, session, doc)
            return self._recommendation_view(session)

    def submit_result(self, session_id: str, body: Mapping) -> dict:
        feature = body.get("feature")
        value = body.get("value")
        override = bool(body.get("override", False))
        if not feature:
            raise ApiError(422, "validation", "feature is required", "feature")
        if value is None:
            raise ApiError(422, "validation", "value is required", "value")
        with self._lock(session_id):
            session, doc = self._load(session_id)
            if session.status in TERMINAL_STATUSES:
                raise ApiError(409, "conflict", f"session is {session.status}")
            if session.status == STOPPED and not override:
                raise ApiError(
                    409, "conflict", "stop criterion fired; submit with override to continue"
                )
            if feature in session.known:
                raise ApiError(409, "conflict", f"feature {feature!r} is already known", "feature")
            if feature not in session.unknown:
                raise ApiError(
                    422, "validation", f"feature {feature!r} is not part of this session", "feature"
                )
            pending = session.pending
            if not override:
                if pending is None or pending.recommended != feature:
                    raise ApiError(
                        422,
                        "validation",
                        "feature does not match the current recommendation; "
                        "set override to proceed",
                        "feature",
                    )
            try:
                apply_result(session, feature, value)
            except SessionStateError as exc:
                raise ApiError(409, "conflict", str(exc), "feature") from exc
            except (ValueError, DxselError) as exc:
                raise ApiError(422, "validation", str(exc), "value") from exc
            if override and pending is not None and session.trajectory:
                session.trajectory[-1].chosen_by = "override"
            self._save(session_id, session, doc)
            return self._resource(session_id, session, doc)

    def trajectory(self, session_id: str) -> dict:
        session, doc = self._load(session_id)
        body = session_to_doc(session)
        return {
            "session_id": session_id,
            "dataset": doc["dataset"],
            "disease": session.disease_name or session.schema.disease_name,
            "status": session.status,
            "policy": body["policy"],
            "initial_known": {
                name: value
                for name, value in session.known.items()
                if all(step.chosen != name for step in session.trajectory)
            },
            "steps": body["trajectory"],
            "queries": body["queries"],
        }

    def datasets_view(self) -> list[dict]:
        out = []
        for name, (schema, records) in sorted(self.datasets.items()):
            out.append(
                {
                    "name": name,
                    "disease": schema.disease_name,
                    "features": [
                        {
                            "name": f.name,
                            "kind": f.kind,
                            "unit": f.unit,
                            "categories": list(f.categories),
                            "known_at_start": f.known_at_start,
                        }
                        for f in schema.features
                    ],
                    "patients": sorted(records),
                }
            )
        return out

    # -- views ----------------------------------------------------------

    def _resource(self, session_id: str, session: SessionState, doc: dict) -> dict:
        return {
            "session_id": session_id,
            "dataset": doc["dataset"],
            "disease": session.disease_name or session.schema.disease_name,
            "status": session.status,
            "created_at": doc["created_at"],
            "updated_at": doc["updated_at"],
            "policy": {"theta": session.policy.theta, "gamma": session.policy.gamma},
            "budget": session.budget,
            "acquired": session.acquired,
            "known": dict(session.known),
            "unknown": list(session.unknown),
            "prior": session.prior,
            "steps": len(session.trajectory),
        }

    def _recommendation_view(self, session: SessionState) -> dict:
        pending: PendingStep = session.pending
        rows = sorted(
            pending.evaluations,
            key=lambda ev: (ev.failed, -ev.expected_kl),
        )
        return {
            "step_index": len(session.trajectory),
            "prior": pending.prior,
            "stop_threshold": pending.stop_threshold,
            "would_stop": pending.would_stop,
            "recommended": pending.recommended,
            "candidates": [
                {
                    "feature": ev.feature,
                    "expected_kl": ev.expected_kl,
                    "entropy_eig": ev.entropy_eig,
                    "utility": ev.utility,
                    "outcomes": [s.value for s in ev.outcome_samples],
                    "posterior_draws": ev.posterior_draws,
                    "failed": ev.failed,
                }
                for ev in rows
            ],
        }


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def create_app(config: ServiceConfig, surrogate: Surrogate | None = None) -> FastAPI:
    service = SessionService(config, surrogate)
    app = FastAPI(title="dxsel session service")
    app.state.service = service

    async def check_token(request: Request) -> None:
        token = config.bearer_token
        if not token:
            return
        header = request.headers.get("authorization", "")
        if header != f"Bearer {token}":
            raise ApiError(401, "unauthorized", "missing or invalid bearer token")

    @app.exception_handler(ApiError)
    async def handle_api_error(_request: Request, exc: ApiError):
        body = {"code": exc.code, "message": exc.message}
        if exc.field_name:
            body["field"] = exc.field_name
        return JSONResponse(status_code=exc.status, content=body)

    @app.exception_handler(DxselError)
    async def handle_dxsel_error(_request: Request, exc: DxselError):
        return JSONResponse(
            status_code=500, content={"code": "internal", "message": str(exc)}
        )

    @app.get("/v1/datasets", dependencies=[Depends(check_token)])
    async def list_datasets():
        return service.datasets_view()

    @app.post("/v1/sessions", status_code=201, dependencies=[Depends(check_token)])
    async def create_session(body: dict):
        return service.create_session(body)

    @app.get("/v1/sessions/{session_id}", dependencies=[Depends(check_token)])
    async def get_session(session_id: str):
        return service.get_session(session_id)

    @app.post(
        "/v1/sessions/{session_id}/recommendation",
        dependencies=[Depends(check_token)],
    )
    async def recommendation(session_id: str):
        return service.recommendation(session_id)

    @app.post("/v1/sessions/{session_id}/result", dependencies=[Depends(check_token)])
    async def submit_result(session_id: str, body: dict):
        return service.submit_result(session_id, body)

    @app.get(
        "/v1/sessions/{session_id}/trajectory", dependencies=[Depends(check_token)]
    )
    async def trajectory(session_id: str):
        return service.trajectory(session_id)

    if config.ui_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=config.ui_dir, html=True), name="ui")

    return app
