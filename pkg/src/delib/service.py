"""Service surface over a registry of deliberations, plus the HTTP adapter.

:class:`DeliberationService` is the operation layer: one method per
endpoint, plain dict payloads in and out, a single writer lock per
deliberation, and blindness enforced on every report (no appraisal
statistics for proposals that have not reached the minimum coverage).
The FastAPI app in :func:`create_app` is a thin translation of these
methods onto routes and status codes.
"""
from __future__ import annotations

import threading
from typing import Any, Optional

from .engine import Clock, Deliberation, logical_clock
from .errors import (
    Blocked,
    Conflict,
    DelibError,
    Forbidden,
    Invalid,
    NotFound,
    PhaseError,
    TriangleViolation,
)
from .metrics import proposal_metrics
from .model import EngineConfig
from .store import DeliberationStore

STATUS_BY_CODE = {
    "NotFound": 404,
    "Forbidden": 403,
    "Conflict": 409,
    "TriangleViolation": 422,
    "PhaseError": 409,
    "Blocked": 403,
    "Invalid": 422,
}


def error_doc(exc: DelibError) -> dict[str, Any]:
    doc = {"code": exc.code, "message": str(exc)}
    if isinstance(exc, Blocked):
        doc["deficit"] = exc.deficit
    return doc


class DeliberationService:
    """All endpoint behavior, independent of HTTP."""

    def __init__(
        self,
        store: Optional[DeliberationStore] = None,
        *,
        clock: Clock = logical_clock,
    ):
        self.store = store
        self.clock = clock
        self._engines: dict[str, Deliberation] = {}
        self._locks: dict[str, threading.RLock] = {}
        self._registry_lock = threading.Lock()
        if store is not None:
            for deliberation_id in store.list_ids():
                self._engines[deliberation_id] = store.open(
                    deliberation_id, clock=clock
                )
                self._locks[deliberation_id] = threading.RLock()

    # ------------------------------------------------------------------
    # registry

    def engine(self, deliberation_id: str) -> Deliberation:
        try:
            return self._engines[deliberation_id]
        except KeyError:
            raise NotFound(f"unknown deliberation {deliberation_id!r}") from None

    def _lock(self, deliberation_id: str) -> threading.RLock:
        self.engine(deliberation_id)
        return self._locks[deliberation_id]

    def deliberation_of(self, entity_id: str) -> str:
        """Entity ids are '<deliberation>.<suffix>'."""
        deliberation_id = entity_id.split(".", 1)[0]
        if deliberation_id not in self._engines:
            raise NotFound(f"no deliberation owns {entity_id!r}")
        return deliberation_id

    def deliberation_ids(self) -> list[str]:
        return sorted(self._engines)

    def create_deliberation(
        self,
        deliberation_id: Optional[str] = None,
        config_overrides: Optional[dict[str, Any]] = None,
        roster: tuple[str, ...] = (),
    ) -> dict[str, Any]:
        config = EngineConfig.from_overrides(config_overrides)
        with self._registry_lock:
            if deliberation_id is None:
                n = len(self._engines) + 1
                while f"d{n}" in self._engines or (
                    self.store is not None and self.store.exists(f"d{n}")
                ):
                    n += 1
                deliberation_id = f"d{n}"
            if deliberation_id in self._engines:
                raise Conflict(f"deliberation {deliberation_id!r} already exists")
            if self.store is not None:
                engine = self.store.create(
                    deliberation_id, config, roster, clock=self.clock
                )
            else:
                engine = Deliberation(
                    deliberation_id, config, roster, clock=self.clock
                )
            self._engines[deliberation_id] = engine
            self._locks[deliberation_id] = threading.RLock()
        return {
            "id": deliberation_id,
            "phase": engine.state.phase.value,
            "generation": engine.state.generation,
        }

    # ------------------------------------------------------------------
    # mutating endpoints

    def handle_submit_proposal(
        self, participant: str, deliberation: str, body: str
    ) -> dict[str, Any]:
        with self._lock(deliberation):
            proposal = self.engine(deliberation).submit_proposal(participant, body)
            return {"proposal": proposal.id, "generation": proposal.generation}

    def handle_submit_appraisal(
        self,
        participant: str,
        proposal: str,
        understanding: float,
        agreement: Optional[int] = None,
        task: Optional[str] = None,
    ) -> dict[str, Any]:
        deliberation = self.deliberation_of(proposal)
        with self._lock(deliberation):
            engine = self.engine(deliberation)
            record = engine.submit_appraisal(
                participant, proposal, understanding, agreement, task
            )
            return {
                "proposal": record.proposal,
                "understanding": record.understanding,
                "agreement": record.agreement,
            }

    def handle_next_task(
        self, participant: str, deliberation: Optional[str] = None
    ) -> Optional[dict[str, Any]]:
        if deliberation is None:
            ids = self.deliberation_ids()
            if len(ids) != 1:
                raise Invalid("specify the deliberation to pull a task from")
            deliberation = ids[0]
        with self._lock(deliberation):
            task = self.engine(deliberation).next_task(participant)
            return None if task is None else task.to_doc()

    def handle_decline_task(self, participant: str, task: str) -> dict[str, Any]:
        deliberation = self.deliberation_of(task)
        with self._lock(deliberation):
            self.engine(deliberation).decline_task(task, participant)
            return {"task": task, "status": "declined"}

    def handle_submit_rewrite(
        self, participant: str, task: str, body: str
    ) -> dict[str, Any]:
        deliberation = self.deliberation_of(task)
        with self._lock(deliberation):
            draft = self.engine(deliberation).submit_rewrite(task, participant, body)
            doc = draft.to_doc()
            if draft.published_as:
                doc["attribution"] = self.engine(deliberation).attribution_line(
                    draft.published_as
                )
            return doc

    def handle_approval(
        self, participant: str, rewrite: str, verdict: str
    ) -> dict[str, Any]:
        deliberation = self.deliberation_of(rewrite)
        with self._lock(deliberation):
            draft = self.engine(deliberation).record_approval(
                rewrite, participant, verdict
            )
            doc = draft.to_doc()
            if draft.published_as:
                doc["attribution"] = self.engine(deliberation).attribution_line(
                    draft.published_as
                )
            return doc

    def handle_advance(self, deliberation: str) -> dict[str, Any]:
        with self._lock(deliberation):
            return self.engine(deliberation).advance()

    def handle_sweep(self, deliberation: str) -> dict[str, Any]:
        with self._lock(deliberation):
            issued = self.engine(deliberation).sweep_rewrite_invitations()
            return {"issued": [t.to_doc() for t in issued]}

    def handle_get_deliberation(self, deliberation: str) -> dict[str, Any]:
        """Public facts a client needs to render controls correctly."""
        with self._lock(deliberation):
            engine = self.engine(deliberation)
            cfg = engine.state.config
            return {
                "id": deliberation,
                "phase": engine.state.phase.value,
                "generation": engine.state.generation,
                "appraisal": {
                    "understanding_levels": list(cfg.appraisal.understanding_levels),
                    "max_agreement": cfg.appraisal.max_agreement,
                },
            }

    # ------------------------------------------------------------------
    # read endpoints (no side effects; stats blinded below the floor)

    def _proposal_entry(self, engine: Deliberation, proposal_id: str) -> dict[str, Any]:
        state = engine.state
        proposal = state.proposals[proposal_id]
        entry: dict[str, Any] = {
            "proposal": proposal_id,
            "authors": list(proposal.authors),
            "body": proposal.body,
            "generation": proposal.generation,
        }
        count = state.appraisal_count(proposal_id)
        if count >= state.config.scheduler.min_appraisals:
            entry["blinded"] = False
            entry["stats"] = proposal_metrics(state, proposal_id).to_doc()
        else:
            entry["blinded"] = True
            entry["stats"] = None
        return entry

    def handle_get_digest(
        self, deliberation: str, top_k: Optional[int] = None
    ) -> dict[str, Any]:
        with self._lock(deliberation):
            engine = self.engine(deliberation)
            clusters = [
                {
                    "cluster": label,
                    "size": len(engine.clusters().clusters[label]),
                    "proposals": [self._proposal_entry(engine, pid) for pid in top],
                }
                for label, top in engine.digest(top_k)
            ]
            return {
                "deliberation": deliberation,
                "generation": engine.state.generation,
                "phase": engine.state.phase.value,
                "clusters": clusters,
            }

    def handle_get_front(self, deliberation: str) -> dict[str, Any]:
        with self._lock(deliberation):
            engine = self.engine(deliberation)
            return {
                "deliberation": deliberation,
                "generation": engine.state.generation,
                "phase": engine.state.phase.value,
                "front": engine.front(),
            }

    def handle_get_clusters(
        self, deliberation: str, threshold: Optional[float] = None
    ) -> dict[str, Any]:
        with self._lock(deliberation):
            engine = self.engine(deliberation)
            report = engine.clusters(threshold)
            return {
                "deliberation": deliberation,
                "generation": report.generation,
                "threshold": report.threshold,
                "clusters": {
                    label: list(report.rankings[label])
                    for label in sorted(report.clusters)
                },
            }

    def handle_get_proposal(self, proposal: str) -> dict[str, Any]:
        deliberation = self.deliberation_of(proposal)
        with self._lock(deliberation):
            engine = self.engine(deliberation)
            engine.state.proposal(proposal)
            return self._proposal_entry(engine, proposal)


def create_app(service: Optional[DeliberationService] = None):
    """FastAPI application over a service instance."""
    from fastapi import Body, FastAPI, Header, Query, Request, Response
    from fastapi.responses import JSONResponse

    svc = service or DeliberationService()
    app = FastAPI(title="delib", version="0.1.0")
    app.state.service = svc

    @app.exception_handler(DelibError)
    async def delib_error_handler(request: Request, exc: DelibError):
        status = STATUS_BY_CODE.get(exc.code, 500)
        return JSONResponse(status_code=status, content=error_doc(exc))

    def require_participant(participant: Optional[str]) -> str:
        if not participant:
            raise Invalid("X-Participant-Id header is required")
        return participant

    @app.post("/deliberations", status_code=201)
    def create_deliberation(payload: dict = Body(default={})) -> dict:
        return svc.create_deliberation(
            deliberation_id=payload.get("id"),
            config_overrides=payload.get("config"),
            roster=tuple(payload.get("roster", ())),
        )

    @app.post("/deliberations/{deliberation_id}/proposals", status_code=201)
    def submit_proposal(
        deliberation_id: str,
        payload: dict = Body(...),
        x_participant_id: Optional[str] = Header(default=None),
    ) -> dict:
        participant = require_participant(x_participant_id)
        body = payload.get("body", "")
        return svc.handle_submit_proposal(participant, deliberation_id, body)

    @app.post("/proposals/{proposal_id}/appraisals")
    def submit_appraisal(
        proposal_id: str,
        payload: dict = Body(...),
        x_participant_id: Optional[str] = Header(default=None),
    ) -> dict:
        participant = require_participant(x_participant_id)
        if "understanding" not in payload:
            raise Invalid("understanding is required")
        return svc.handle_submit_appraisal(
            participant,
            proposal_id,
            payload["understanding"],
            payload.get("agreement"),
            payload.get("task"),
        )

    @app.get("/participants/{participant_id}/next-task")
    def next_task(
        participant_id: str,
        deliberation: Optional[str] = Query(default=None),
    ):
        task = svc.handle_next_task(participant_id, deliberation)
        if task is None:
            return Response(status_code=204)
        return task

    @app.post("/tasks/{task_id}/decline")
    def decline_task(
        task_id: str,
        x_participant_id: Optional[str] = Header(default=None),
    ) -> dict:
        participant = require_participant(x_participant_id)
        return svc.handle_decline_task(participant, task_id)

    @app.post("/tasks/{task_id}/rewrite", status_code=201)
    def submit_rewrite(
        task_id: str,
        payload: dict = Body(...),
        x_participant_id: Optional[str] = Header(default=None),
    ) -> dict:
        participant = require_participant(x_participant_id)
        return svc.handle_submit_rewrite(participant, task_id, payload.get("body", ""))

    @app.post("/rewrites/{rewrite_id}/approval")
    def record_approval(
        rewrite_id: str,
        payload: dict = Body(...),
        x_participant_id: Optional[str] = Header(default=None),
    ) -> dict:
        participant = require_participant(x_participant_id)
        return svc.handle_approval(participant, rewrite_id, payload.get("verdict", ""))

    @app.get("/deliberations/{deliberation_id}")
    def get_deliberation(deliberation_id: str) -> dict:
        return svc.handle_get_deliberation(deliberation_id)

    @app.get("/deliberations/{deliberation_id}/digest")
    def get_digest(
        deliberation_id: str, top_k: Optional[int] = Query(default=None)
    ) -> dict:
        return svc.handle_get_digest(deliberation_id, top_k)

    @app.get("/deliberations/{deliberation_id}/front")
    def get_front(deliberation_id: str) -> dict:
        return svc.handle_get_front(deliberation_id)

    @app.get("/deliberations/{deliberation_id}/clusters")
    def get_clusters(
        deliberation_id: str, x: Optional[float] = Query(default=None)
    ) -> dict:
        return svc.handle_get_clusters(deliberation_id, x)

    @app.get("/proposals/{proposal_id}")
    def get_proposal(proposal_id: str) -> dict:
        return svc.handle_get_proposal(proposal_id)

    @app.post("/deliberations/{deliberation_id}/advance")
    def advance(deliberation_id: str) -> dict:
        return svc.handle_advance(deliberation_id)

    @app.post("/deliberations/{deliberation_id}/sweep")
    def sweep(deliberation_id: str) -> dict:
        return svc.handle_sweep(deliberation_id)

    return app
