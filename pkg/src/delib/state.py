"""Deliberation state and the event transitions that mutate it.

The state is only ever changed by :meth:`DeliberationState.apply`; commands
in :mod:`delib.engine` validate, build an event, then apply it. Replaying
the ordered event list therefore reconstructs the state exactly. Derived
indexes (who appraised what, agree-sets, open tasks) are maintained
incrementally and rebuilt on load; they never appear in snapshots.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterable

from .errors import CorruptLog, NotFound
from .model import (
    Appraisal,
    DeliberationId,
    EngineConfig,
    Event,
    EventKind,
    Participant,
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
    TaskStatus,
)

# Tasks tied to one generation's evaluation die when the generation closes;
# approval of an already-written draft stays actionable.
EXPIRABLE_KINDS = frozenset(
    {
        TaskKind.APPRAISE_PROPOSAL,
        TaskKind.APPRAISE_PAIR,
        TaskKind.REWRITE_OBSCURE,
        TaskKind.REWRITE_FOR_BLOCKER,
    }
)


@dataclass
class DeliberationState:
    id: DeliberationId
    config: EngineConfig = field(default_factory=EngineConfig)
    phase: Phase = Phase.PROPOSAL
    generation: int = 0
    last_seq: int = 0
    proposals: dict[ProposalId, Proposal] = field(default_factory=dict)
    participants: dict[ParticipantId, Participant] = field(default_factory=dict)
    tasks: dict[TaskId, Task] = field(default_factory=dict)
    rewrites: dict[str, RewriteDraft] = field(default_factory=dict)
    members_by_generation: dict[int, list[ProposalId]] = field(default_factory=dict)
    declined: dict[ParticipantId, set[tuple]] = field(default_factory=dict)
    proposal_count: int = 0
    task_count: int = 0
    rewrite_count: int = 0

    # -- derived indexes, rebuilt on load, never serialized --
    appraisals_by_proposal: dict[ProposalId, dict[ParticipantId, Appraisal]] = field(
        default_factory=dict, repr=False, compare=False
    )
    appraised_by: dict[ParticipantId, set[ProposalId]] = field(
        default_factory=dict, repr=False, compare=False
    )
    agree_index: dict[ProposalId, set[ParticipantId]] = field(
        default_factory=dict, repr=False, compare=False
    )
    open_tasks_by_assignee: dict[ParticipantId, list[TaskId]] = field(
        default_factory=dict, repr=False, compare=False
    )
    open_appraise_load: dict[ProposalId, int] = field(
        default_factory=dict, repr=False, compare=False
    )

    # ------------------------------------------------------------------
    # views

    def current_members(self) -> list[ProposalId]:
        return self.members_by_generation.get(self.generation, [])

    def proposal(self, proposal_id: ProposalId) -> Proposal:
        try:
            return self.proposals[proposal_id]
        except KeyError:
            raise NotFound(f"unknown proposal {proposal_id!r}") from None

    def participant(self, participant_id: ParticipantId) -> Participant:
        try:
            return self.participants[participant_id]
        except KeyError:
            raise NotFound(f"unknown participant {participant_id!r}") from None

    def task(self, task_id: TaskId) -> Task:
        try:
            return self.tasks[task_id]
        except KeyError:
            raise NotFound(f"unknown task {task_id!r}") from None

    def rewrite(self, rewrite_id: str) -> RewriteDraft:
        try:
            return self.rewrites[rewrite_id]
        except KeyError:
            raise NotFound(f"unknown rewrite {rewrite_id!r}") from None

    def appraisals_of(self, proposal_id: ProposalId) -> dict[ParticipantId, Appraisal]:
        self.proposal(proposal_id)
        return self.appraisals_by_proposal.get(proposal_id, {})

    def appraisal_count(self, proposal_id: ProposalId) -> int:
        return len(self.appraisals_by_proposal.get(proposal_id, ()))

    def open_tasks_of(self, participant_id: ParticipantId) -> list[Task]:
        ids = self.open_tasks_by_assignee.get(participant_id, [])
        return [self.tasks[t] for t in ids]

    def has_declined(self, participant_id: ParticipantId, key: tuple) -> bool:
        return key in self.declined.get(participant_id, ())

    def iter_appraisals(self) -> Iterable[Appraisal]:
        for per_proposal in self.appraisals_by_proposal.values():
            yield from per_proposal.values()

    # ------------------------------------------------------------------
    # event application

    def apply(self, event: Event) -> None:
        if event.seq != self.last_seq + 1:
            raise CorruptLog(
                f"event seq {event.seq} does not follow {self.last_seq}"
            )
        handler = _HANDLERS.get(event.kind)
        if handler is None:  # pragma: no cover - kinds enum is closed
            raise CorruptLog(f"unknown event kind {event.kind!r}")
        handler(self, event.payload, event.seq)
        self.last_seq = event.seq

    def _ensure_participant(self, participant_id: ParticipantId) -> Participant:
        record = self.participants.get(participant_id)
        if record is None:
            record = Participant(id=participant_id)
            self.participants[participant_id] = record
        return record

    def _apply_config_set(self, payload: dict[str, Any], seq: int) -> None:
        self.config = EngineConfig.from_doc(payload["config"])
        for participant_id in payload.get("roster", []):
            self._ensure_participant(participant_id)

    def _apply_proposal_submitted(self, payload: dict[str, Any], seq: int) -> None:
        author = payload["author"]
        proposal = Proposal(
            id=payload["proposal"],
            deliberation=self.id,
            generation=payload["generation"],
            body=payload["body"],
            authors=[author],
            created_seq=seq,
        )
        self._add_proposal(proposal)
        record = self._ensure_participant(author)
        if payload.get("voluntary", True):
            record.voluntary_count += 1
        record.authored.append(proposal.id)

    def _add_proposal(self, proposal: Proposal) -> None:
        self.proposals[proposal.id] = proposal
        self.members_by_generation.setdefault(proposal.generation, []).append(proposal.id)
        self.appraisals_by_proposal.setdefault(proposal.id, {})
        self.agree_index.setdefault(proposal.id, set())
        self.proposal_count += 1

    def _apply_appraisal_recorded(self, payload: dict[str, Any], seq: int) -> None:
        participant = payload["participant"]
        proposal = payload["proposal"]
        appraisal = Appraisal(
            participant=participant,
            proposal=proposal,
            understanding=payload["understanding"],
            agreement=payload["agreement"],
            seq=seq,
        )
        record = self._ensure_participant(participant)
        self.appraisals_by_proposal.setdefault(proposal, {})[participant] = appraisal
        self.appraised_by.setdefault(participant, set()).add(proposal)
        agreeing = self.agree_index.setdefault(proposal, set())
        if appraisal.agrees:
            agreeing.add(participant)
        else:
            agreeing.discard(participant)
        if payload.get("voluntary", True) and not payload.get("auto", False):
            record.voluntary_count += 1

    def _apply_task_issued(self, payload: dict[str, Any], seq: int) -> None:
        task = Task(
            id=payload["task"],
            kind=TaskKind(payload["kind"]),
            assignee=payload["assignee"],
            payload=payload["payload"],
            issued_seq=seq,
        )
        self.tasks[task.id] = task
        self.task_count += 1
        record = self._ensure_participant(task.assignee)
        record.requested_issued += 1
        self.open_tasks_by_assignee.setdefault(task.assignee, []).append(task.id)
        if task.kind == TaskKind.APPRAISE_PROPOSAL:
            target = task.payload["proposal"]
            self.open_appraise_load[target] = self.open_appraise_load.get(target, 0) + 1

    def _close_task(self, task: Task, status: TaskStatus) -> None:
        task.status = status
        open_list = self.open_tasks_by_assignee.get(task.assignee, [])
        if task.id in open_list:
            open_list.remove(task.id)
        if task.kind == TaskKind.APPRAISE_PROPOSAL:
            target = task.payload["proposal"]
            self.open_appraise_load[target] = max(0, self.open_appraise_load.get(target, 0) - 1)

    def _apply_task_declined(self, payload: dict[str, Any], seq: int) -> None:
        task = self.tasks[payload["task"]]
        self._close_task(task, TaskStatus.DECLINED)
        self.declined.setdefault(task.assignee, set()).add(task.exclusion_key())

    def _apply_task_completed(self, payload: dict[str, Any], seq: int) -> None:
        task = self.tasks[payload["task"]]
        self._close_task(task, TaskStatus.COMPLETED)
        self._ensure_participant(task.assignee).requested_completed += 1

    def _apply_rewrite_submitted(self, payload: dict[str, Any], seq: int) -> None:
        draft = RewriteDraft(
            id=payload["rewrite"],
            target=payload["target"],
            rewriter=payload["rewriter"],
            kind=RewriteKind(payload["kind"]),
            body=payload["body"],
            state=RewriteState.SUBMITTED,
            task=payload.get("task"),
        )
        self.rewrites[draft.id] = draft
        self.rewrite_count += 1

    def _apply_rewrite_approved(self, payload: dict[str, Any], seq: int) -> None:
        self.rewrites[payload["rewrite"]].state = RewriteState.APPROVED

    def _apply_rewrite_rejected(self, payload: dict[str, Any], seq: int) -> None:
        self.rewrites[payload["rewrite"]].state = RewriteState.REJECTED

    def _apply_rewrite_published(self, payload: dict[str, Any], seq: int) -> None:
        draft = self.rewrites[payload["rewrite"]]
        proposal = Proposal(
            id=payload["proposal"],
            deliberation=self.id,
            generation=payload["generation"],
            body=payload["body"],
            authors=list(payload["authors"]),
            lineage=payload["rewrite"],
            created_seq=seq,
        )
        self._add_proposal(proposal)
        draft.state = RewriteState.PUBLISHED
        draft.published_as = proposal.id
        for author in proposal.authors:
            self._ensure_participant(author)

    def _apply_phase_advanced(self, payload: dict[str, Any], seq: int) -> None:
        new_phase = Phase(payload["phase"])
        new_generation = payload["generation"]
        if new_generation != self.generation:
            self.members_by_generation[new_generation] = list(payload.get("carried", []))
            for task in self.tasks.values():
                if task.open and task.kind in EXPIRABLE_KINDS:
                    self._close_task(task, TaskStatus.EXPIRED)
        self.phase = new_phase
        self.generation = new_generation

    # ------------------------------------------------------------------
    # serialization

    def to_doc(self) -> dict[str, Any]:
        appraisals = sorted(
            (a.to_doc() for a in self.iter_appraisals()),
            key=lambda d: (d["proposal"], d["participant"]),
        )
        return {
            "id": self.id,
            "phase": self.phase.value,
            "generation": self.generation,
            "last_seq": self.last_seq,
            "config": self.config.to_doc(),
            "proposals": {p.id: p.to_doc() for p in self.proposals.values()},
            "participants": {p.id: p.to_doc() for p in self.participants.values()},
            "appraisals": appraisals,
            "tasks": {t.id: t.to_doc() for t in self.tasks.values()},
            "rewrites": {r.id: r.to_doc() for r in self.rewrites.values()},
            "members": {str(g): list(ids) for g, ids in self.members_by_generation.items()},
            "declined": {
                pid: sorted(list(key) for key in keys)
                for pid, keys in self.declined.items()
                if keys
            },
            "counters": {
                "proposal": self.proposal_count,
                "task": self.task_count,
                "rewrite": self.rewrite_count,
            },
        }

    @classmethod
    def from_doc(cls, doc: dict[str, Any]) -> "DeliberationState":
        state = cls(
            id=doc["id"],
            config=EngineConfig.from_doc(doc["config"]),
            phase=Phase(doc["phase"]),
            generation=doc["generation"],
            last_seq=doc["last_seq"],
            proposal_count=doc["counters"]["proposal"],
            task_count=doc["counters"]["task"],
            rewrite_count=doc["counters"]["rewrite"],
        )
        state.proposals = {pid: Proposal.from_doc(d) for pid, d in doc["proposals"].items()}
        state.participants = {
            pid: Participant.from_doc(d) for pid, d in doc["participants"].items()
        }
        state.tasks = {tid: Task.from_doc(d) for tid, d in doc["tasks"].items()}
        state.rewrites = {rid: RewriteDraft.from_doc(d) for rid, d in doc["rewrites"].items()}
        state.members_by_generation = {
            int(g): list(ids) for g, ids in doc["members"].items()
        }
        state.declined = {
            pid: {tuple(key) for key in keys} for pid, keys in doc["declined"].items()
        }
        for pid in state.proposals:
            state.appraisals_by_proposal.setdefault(pid, {})
            state.agree_index.setdefault(pid, set())
        for entry in doc["appraisals"]:
            appraisal = Appraisal.from_doc(entry)
            state.appraisals_by_proposal.setdefault(appraisal.proposal, {})[
                appraisal.participant
            ] = appraisal
            state.appraised_by.setdefault(appraisal.participant, set()).add(
                appraisal.proposal
            )
            if appraisal.agrees:
                state.agree_index.setdefault(appraisal.proposal, set()).add(
                    appraisal.participant
                )
        for task in state.tasks.values():
            if task.open:
                state.open_tasks_by_assignee.setdefault(task.assignee, []).append(task.id)
                if task.kind == TaskKind.APPRAISE_PROPOSAL:
                    target = task.payload["proposal"]
                    state.open_appraise_load[target] = (
                        state.open_appraise_load.get(target, 0) + 1
                    )
        for ids in state.open_tasks_by_assignee.values():
            ids.sort(key=lambda t: state.tasks[t].issued_seq)
        return state

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DeliberationState):
            return NotImplemented
        return self.to_doc() == other.to_doc()


def agree_set(state: DeliberationState, proposal_id: ProposalId) -> set[ParticipantId]:
    """Participants whose latest appraisal of the proposal agrees (a > 0)."""
    if proposal_id not in state.proposals:
        raise NotFound(f"unknown proposal {proposal_id!r}")
    return set(state.agree_index.get(proposal_id, ()))


_HANDLERS = {
    EventKind.CONFIG_SET: DeliberationState._apply_config_set,
    EventKind.PROPOSAL_SUBMITTED: DeliberationState._apply_proposal_submitted,
    EventKind.APPRAISAL_RECORDED: DeliberationState._apply_appraisal_recorded,
    EventKind.TASK_ISSUED: DeliberationState._apply_task_issued,
    EventKind.TASK_DECLINED: DeliberationState._apply_task_declined,
    EventKind.TASK_COMPLETED: DeliberationState._apply_task_completed,
    EventKind.REWRITE_SUBMITTED: DeliberationState._apply_rewrite_submitted,
    EventKind.REWRITE_APPROVED: DeliberationState._apply_rewrite_approved,
    EventKind.REWRITE_REJECTED: DeliberationState._apply_rewrite_rejected,
    EventKind.REWRITE_PUBLISHED: DeliberationState._apply_rewrite_published,
    EventKind.PHASE_ADVANCED: DeliberationState._apply_phase_advanced,
}
