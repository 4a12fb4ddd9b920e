"""Command layer: validates requests, records events, applies them.

One :class:`Deliberation` owns one event stream. Every mutation goes
through :meth:`_emit`, so persisting the stream and replaying it later
reconstructs the exact same state, including every scheduling decision.
"""
from __future__ import annotations

import re
from datetime import datetime, timedelta, timezone
from typing import Any, Callable, Iterable, Optional

from . import scheduler
from .clustering import Clustering, cluster_report, digest
from .errors import Conflict, CorruptLog, Forbidden, Invalid, PhaseError
from .model import (
    Appraisal,
    EngineConfig,
    Event,
    EventKind,
    ParticipantId,
    Phase,
    Proposal,
    ProposalId,
    RewriteDraft,
    RewriteKind,
    RewriteState,
    Task,
    TaskId,
    TaskKind,
    validate_appraisal,
)
from .pareto import DominanceReport, dominance_report, pareto_front
from .rewrites import advertisement_audience, attribution, rewrite_authors
from .state import DeliberationState

_EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)
_ID_PATTERN = re.compile(r"^[A-Za-z0-9_-]+$")

Clock = Callable[[int], str]


def logical_clock(seq: int) -> str:
    """Deterministic timestamp derived from the event sequence number."""
    return (_EPOCH + timedelta(seconds=seq)).isoformat()


def utc_clock(seq: int) -> str:
    return datetime.now(timezone.utc).isoformat()


class Deliberation:
    """A single deliberation: its state, event stream, and commands."""

    def __init__(
        self,
        deliberation_id: str,
        config: Optional[EngineConfig] = None,
        roster: Iterable[ParticipantId] = (),
        *,
        sink: Optional[Callable[[Event], None]] = None,
        clock: Clock = logical_clock,
    ):
        if not _ID_PATTERN.match(deliberation_id):
            raise Invalid("deliberation ids use letters, digits, '-' and '_' only")
        self.state = DeliberationState(id=deliberation_id)
        self.events: list[Event] = []
        self.sink = sink
        self.clock = clock
        self._emit(
            EventKind.CONFIG_SET,
            {
                "deliberation": deliberation_id,
                "config": (config or EngineConfig()).to_doc(),
                "roster": sorted(set(roster)),
            },
        )

    @classmethod
    def from_events(
        cls,
        events: Iterable[Event],
        *,
        sink: Optional[Callable[[Event], None]] = None,
        clock: Clock = logical_clock,
    ) -> "Deliberation":
        """Rebuild a deliberation by replaying its recorded event stream."""
        instance = cls.__new__(cls)
        instance.events = []
        instance.sink = None  # replay must not re-persist
        instance.clock = clock
        instance.state = None  # type: ignore[assignment]
        for event in events:
            if instance.state is None:
                if event.kind != EventKind.CONFIG_SET or event.seq != 1:
                    raise CorruptLog("stream must start with the configuration event")
                instance.state = DeliberationState(id=event.payload["deliberation"])
            instance.state.apply(event)
            instance.events.append(event)
        if instance.state is None:
            raise CorruptLog("empty event stream")
        instance.sink = sink
        return instance

    # ------------------------------------------------------------------
    # event plumbing

    def _emit(self, kind: EventKind, payload: dict[str, Any]) -> Event:
        event = Event(
            seq=self.state.last_seq + 1,
            timestamp=self.clock(self.state.last_seq + 1),
            kind=kind,
            payload=payload,
        )
        self.state.apply(event)
        self.events.append(event)
        if self.sink is not None:
            self.sink(event)
        return event

    def _next_proposal_id(self) -> ProposalId:
        return f"{self.state.id}.p{self.state.proposal_count + 1}"

    def _next_task_id(self) -> TaskId:
        return f"{self.state.id}.t{self.state.task_count + 1}"

    def _next_rewrite_id(self) -> str:
        return f"{self.state.id}.w{self.state.rewrite_count + 1}"

    # ------------------------------------------------------------------
    # configuration

    def set_config(
        self, config: EngineConfig, roster: Iterable[ParticipantId] = ()
    ) -> None:
        self._emit(
            EventKind.CONFIG_SET,
            {
                "deliberation": self.state.id,
                "config": config.to_doc(),
                "roster": sorted(set(roster)),
            },
        )

    # ------------------------------------------------------------------
    # contributions

    def submit_proposal(self, participant: ParticipantId, body: str) -> Proposal:
        if self.state.phase != Phase.PROPOSAL:
            raise PhaseError("proposals are submitted during the proposal phase")
        if not body or not body.strip():
            raise Invalid("proposal body must not be empty")
        scheduler.check_incentive_gate(self.state, participant)
        proposal_id = self._next_proposal_id()
        self._emit(
            EventKind.PROPOSAL_SUBMITTED,
            {
                "proposal": proposal_id,
                "author": participant,
                "body": body,
                "generation": self.state.generation,
                "voluntary": True,
            },
        )
        return self.state.proposals[proposal_id]

    def submit_appraisal(
        self,
        participant: ParticipantId,
        proposal: ProposalId,
        understanding: float,
        agreement: Optional[int] = None,
        task: Optional[TaskId] = None,
    ) -> Appraisal:
        if self.state.phase != Phase.EVALUATION:
            raise PhaseError("appraisals are recorded during the evaluation phase")
        record = self.state.proposal(proposal)
        if participant in record.authors:
            raise Forbidden("authors do not appraise their own proposal")
        validate_appraisal(understanding, agreement, self.state.config.appraisal)

        completing = self._matching_open_tasks(participant, proposal)
        if task is not None:
            explicit = self.state.task(task)
            if explicit.id not in {t.id for t in completing}:
                raise Invalid("the named task is not satisfied by this appraisal")
        self._emit(
            EventKind.APPRAISAL_RECORDED,
            {
                "participant": participant,
                "proposal": proposal,
                "understanding": understanding,
                "agreement": agreement,
                "voluntary": not completing,
                "auto": False,
            },
        )
        for done in completing:
            self._emit(EventKind.TASK_COMPLETED, {"task": done.id})
        return self.state.appraisals_of(proposal)[participant]

    def _matching_open_tasks(
        self, participant: ParticipantId, proposal: ProposalId
    ) -> list[Task]:
        appraised = self.state.appraised_by.get(participant, set())
        done: list[Task] = []
        for open_task in self.state.open_tasks_of(participant):
            if open_task.kind == TaskKind.APPRAISE_PROPOSAL:
                if open_task.payload["proposal"] == proposal:
                    done.append(open_task)
            elif open_task.kind == TaskKind.APPRAISE_PAIR:
                pair = set(open_task.payload["pair"])
                if proposal in pair and pair <= (appraised | {proposal}):
                    done.append(open_task)
        return done

    # ------------------------------------------------------------------
    # tasks

    def next_task(self, participant: ParticipantId) -> Optional[Task]:
        chosen = scheduler.next_task(self.state, participant)
        if chosen is None or isinstance(chosen, Task):
            return chosen
        task_id = self._next_task_id()
        self._emit(
            EventKind.TASK_ISSUED,
            {
                "task": task_id,
                "kind": chosen.kind.value,
                "assignee": chosen.assignee,
                "payload": chosen.payload,
            },
        )
        return self.state.tasks[task_id]

    def decline_task(self, task: TaskId, participant: ParticipantId) -> None:
        record = self.state.task(task)
        if record.assignee != participant:
            raise Forbidden("only the assignee may decline a task")
        if not record.open:
            raise Conflict(f"task is already {record.status.value}")
        self._emit(EventKind.TASK_DECLINED, {"task": task, "participant": participant})

    def sweep_rewrite_invitations(self) -> list[Task]:
        """Materialize rewrite invitations for blockers and obscure gems."""
        if self.state.phase != Phase.EVALUATION:
            raise PhaseError("rewrite invitations are issued during evaluation")
        issued: list[Task] = []
        plans = scheduler.blocker_rewrite_requests(
            self.state
        ) + scheduler.obscure_rewrite_requests(self.state)
        for plan in plans:
            task_id = self._next_task_id()
            self._emit(
                EventKind.TASK_ISSUED,
                {
                    "task": task_id,
                    "kind": plan.kind.value,
                    "assignee": plan.assignee,
                    "payload": plan.payload,
                },
            )
            issued.append(self.state.tasks[task_id])
        return issued

    # ------------------------------------------------------------------
    # rewrites

    def submit_rewrite(
        self, task: TaskId, participant: ParticipantId, body: str
    ) -> RewriteDraft:
        record = self.state.task(task)
        if record.assignee != participant:
            raise Forbidden("only the invited participant may submit this rewrite")
        if record.kind not in (TaskKind.REWRITE_OBSCURE, TaskKind.REWRITE_FOR_BLOCKER):
            raise Invalid("task is not a rewrite invitation")
        if not record.open:
            raise Forbidden(f"rewrite task is {record.status.value}")
        if not body or not body.strip():
            raise Invalid("rewrite body must not be empty")

        if record.kind == TaskKind.REWRITE_OBSCURE:
            target = record.payload["proposal"]
            kind = RewriteKind.OBSCURE_CLARIFICATION
        else:
            target = record.payload["dominator"]
            kind = RewriteKind.BLOCKER_COMPROMISE
        rewrite_id = self._next_rewrite_id()
        self._emit(
            EventKind.REWRITE_SUBMITTED,
            {
                "rewrite": rewrite_id,
                "task": task,
                "target": target,
                "rewriter": participant,
                "kind": kind.value,
                "body": body,
            },
        )
        self._emit(EventKind.TASK_COMPLETED, {"task": task})
        if kind == RewriteKind.OBSCURE_CLARIFICATION:
            approver = self.state.proposal(target).original_author
            self._emit(
                EventKind.TASK_ISSUED,
                {
                    "task": self._next_task_id(),
                    "kind": TaskKind.APPROVE_REWRITE.value,
                    "assignee": approver,
                    "payload": {"rewrite": rewrite_id, "proposal": target},
                },
            )
        else:
            # Compromise rewrites go straight to the floor; the next front
            # decides their fate.
            self._publish(rewrite_id)
        return self.state.rewrites[rewrite_id]

    def record_approval(
        self, rewrite: str, participant: ParticipantId, verdict: str
    ) -> RewriteDraft:
        draft = self.state.rewrite(rewrite)
        if draft.kind != RewriteKind.OBSCURE_CLARIFICATION:
            raise Conflict("only clarification rewrites await approval")
        if draft.state != RewriteState.SUBMITTED:
            raise Conflict(f"rewrite is already {draft.state.value}")
        target = self.state.proposal(draft.target)
        if participant != target.original_author:
            raise Forbidden("only the original-idea author decides on a rewrite")
        if verdict not in ("approve", "reject"):
            raise Invalid("verdict must be 'approve' or 'reject'")

        kind = (
            EventKind.REWRITE_APPROVED
            if verdict == "approve"
            else EventKind.REWRITE_REJECTED
        )
        self._emit(kind, {"rewrite": rewrite, "approver": participant})
        for open_task in self.state.open_tasks_of(participant):
            if (
                open_task.kind == TaskKind.APPROVE_REWRITE
                and open_task.payload["rewrite"] == rewrite
            ):
                self._emit(EventKind.TASK_COMPLETED, {"task": open_task.id})
        if verdict == "approve":
            self._publish(rewrite)
        return self.state.rewrites[rewrite]

    def _publish(self, rewrite: str) -> Proposal:
        draft = self.state.rewrites[rewrite]
        if draft.state not in (RewriteState.SUBMITTED, RewriteState.APPROVED):
            raise Conflict(f"cannot publish a rewrite that is {draft.state.value}")
        target = self.state.proposal(draft.target)
        clarification = draft.kind == RewriteKind.OBSCURE_CLARIFICATION
        proposal_id = self._next_proposal_id()
        self._emit(
            EventKind.REWRITE_PUBLISHED,
            {
                "rewrite": rewrite,
                "proposal": proposal_id,
                "authors": rewrite_authors(target, draft.rewriter, clarification),
                "body": draft.body,
                "generation": self.state.generation,
                "audience": advertisement_audience(self.state, target.id),
            },
        )
        if not clarification:
            # The rewriter's agreement is implied by authorship; record it so
            # dominance sees the compromise immediately.
            self._emit(
                EventKind.APPRAISAL_RECORDED,
                {
                    "participant": draft.rewriter,
                    "proposal": proposal_id,
                    "understanding": 1.0,
                    "agreement": self.state.config.appraisal.max_agreement,
                    "voluntary": False,
                    "auto": True,
                },
            )
        return self.state.proposals[proposal_id]

    def publish_rewrite(self, rewrite: str) -> Proposal:
        """Publish an approved clarification (normally done by approval)."""
        draft = self.state.rewrite(rewrite)
        if draft.state != RewriteState.APPROVED:
            raise Conflict(f"rewrite is {draft.state.value}, not approved")
        return self._publish(rewrite)

    # ------------------------------------------------------------------
    # phases

    def begin_evaluation(self) -> None:
        if self.state.phase != Phase.PROPOSAL:
            raise PhaseError("evaluation can only begin from the proposal phase")
        self._emit(
            EventKind.PHASE_ADVANCED,
            {
                "phase": Phase.EVALUATION.value,
                "generation": self.state.generation,
                "carried": [],
                "front": [],
            },
        )

    def advance_generation(self) -> DominanceReport:
        """Close the evaluation, carry the front into a fresh proposal phase."""
        if self.state.phase != Phase.EVALUATION:
            raise PhaseError("a generation advances from its evaluation phase")
        report = dominance_report(self.state)
        self._emit(
            EventKind.PHASE_ADVANCED,
            {
                "phase": Phase.PROPOSAL.value,
                "generation": self.state.generation + 1,
                "carried": list(report.front),
                "front": list(report.front),
            },
        )
        return report

    def advance(self) -> dict[str, Any]:
        """Operator action: move whichever phase is open to the next one."""
        if self.state.phase == Phase.PROPOSAL:
            self.begin_evaluation()
        else:
            self.advance_generation()
        return {"phase": self.state.phase.value, "generation": self.state.generation}

    # ------------------------------------------------------------------
    # read-side reports

    def front(self) -> list[ProposalId]:
        return sorted(pareto_front(self.state, force=True))

    def dominance(self, max_blockers: Optional[int] = None) -> DominanceReport:
        return dominance_report(self.state, max_blockers)

    def clusters(self, threshold: Optional[float] = None) -> Clustering:
        return cluster_report(self.state, threshold)

    def digest(
        self, top_k: Optional[int] = None, threshold: Optional[float] = None
    ) -> list[tuple[str, tuple[ProposalId, ...]]]:
        return digest(self.state, top_k, threshold)

    def rewrite_shortlist(self) -> list[dict[str, Any]]:
        """Obscure-gem targets with their metrics and suggested rewriter."""
        return [
            {
                "proposal": pid,
                "metrics": m.to_doc(),
                "rewriter": scheduler.select_rewriter(self.state, pid),
            }
            for pid, m in scheduler.select_rewrite_targets(self.state)
        ]

    def attribution_line(self, proposal: ProposalId) -> str:
        return attribution(self.state.proposal(proposal))
