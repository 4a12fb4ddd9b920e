"""Core domain types: appraisals, proposals, participants, tasks, events.

Everything here is a plain value. State transitions live in
:mod:`delib.state`; these types only know how to validate themselves and
round-trip through plain dicts for canonical serialization.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict
from enum import Enum
from typing import Any, Optional

from .errors import GridViolation, Invalid, TriangleViolation

SCHEMA_VERSION = 1

# Identifiers are opaque strings, unique within one deliberation.
ParticipantId = str
ProposalId = str
DeliberationId = str
TaskId = str
RewriteId = str

DEFAULT_UNDERSTANDING_LEVELS = (0.0, 0.25, 0.5, 0.75, 1.0)


class Phase(str, Enum):
    PROPOSAL = "proposal"
    EVALUATION = "evaluation"


def agreement_span(understanding: float, max_agreement: int) -> int:
    """Largest |agreement| permitted at this understanding level.

    Linear in understanding, rounded half-up (Python's round() rounds
    half-to-even, which would shrink the span at exact midpoints).
    """
    return int(math.floor(understanding * max_agreement + 0.5))


@dataclass(frozen=True)
class AppraisalConfig:
    """Geometry of the two-axis appraisal space."""

    understanding_levels: tuple[float, ...] = DEFAULT_UNDERSTANDING_LEVELS
    max_agreement: int = 5
    # u >= understood_threshold counts as "understands"; u <= incomprehensible_threshold
    # counts as "did not understand".
    understood_threshold: float = 0.5
    incomprehensible_threshold: float = 0.0

    def __post_init__(self) -> None:
        levels = tuple(sorted(self.understanding_levels))
        object.__setattr__(self, "understanding_levels", levels)
        if not levels or levels[0] != 0.0 or levels[-1] != 1.0:
            raise Invalid("understanding grid must include 0 and 1")
        if self.max_agreement < 1:
            raise Invalid("max_agreement must be >= 1")
        if not 0 <= self.incomprehensible_threshold < self.understood_threshold <= 1:
            raise Invalid("thresholds must satisfy 0 <= incomprehensible < understood <= 1")

    def span(self, understanding: float) -> int:
        return agreement_span(understanding, self.max_agreement)


@dataclass(frozen=True)
class ClusteringConfig:
    edge_threshold: float = 0.4  # drop edges with weight below this
    digest_size: int = 3  # proposals shown per cluster
    min_co_appraisers: int = 3  # below this a pair is "uncertain"

    def __post_init__(self) -> None:
        if not 0 <= self.edge_threshold <= 1:
            raise Invalid("edge_threshold must lie in [0, 1]")
        if self.digest_size < 1 or self.min_co_appraisers < 1:
            raise Invalid("digest_size and min_co_appraisers must be >= 1")


@dataclass(frozen=True)
class SchedulerConfig:
    min_appraisals: int = 5  # stats stay blinded until a proposal has this many
    incomprehension_threshold: float = 0.5
    support_threshold: float = 0.6
    small_cluster_percentile: float = 50.0
    max_blockers: int = 1  # blocker-set size cap for near-domination
    max_open_tasks: int = 3
    incentive_enabled: bool = False
    requested_per_authored: float = 1.0
    free_allowance: int = 1
    skill_min_appraisals: int = 3  # authored proposals need this many appraisals to count toward skill
    rng_seed: int = 0

    def __post_init__(self) -> None:
        for name in ("incomprehension_threshold", "support_threshold"):
            if not 0 <= getattr(self, name) <= 1:
                raise Invalid(f"{name} must lie in [0, 1]")
        if self.requested_per_authored < 0:
            raise Invalid("requested_per_authored must be >= 0")
        if self.max_blockers < 1:
            raise Invalid("max_blockers must be >= 1")


@dataclass(frozen=True)
class EngineConfig:
    appraisal: AppraisalConfig = field(default_factory=AppraisalConfig)
    clustering: ClusteringConfig = field(default_factory=ClusteringConfig)
    scheduler: SchedulerConfig = field(default_factory=SchedulerConfig)

    def to_doc(self) -> dict[str, Any]:
        doc = asdict(self)
        doc["appraisal"]["understanding_levels"] = list(self.appraisal.understanding_levels)
        return doc

    @classmethod
    def from_doc(cls, doc: dict[str, Any]) -> "EngineConfig":
        appraisal = dict(doc.get("appraisal", {}))
        if "understanding_levels" in appraisal:
            appraisal["understanding_levels"] = tuple(appraisal["understanding_levels"])
        return cls(
            appraisal=AppraisalConfig(**appraisal),
            clustering=ClusteringConfig(**doc.get("clustering", {})),
            scheduler=SchedulerConfig(**doc.get("scheduler", {})),
        )

    @classmethod
    def from_overrides(cls, overrides: Optional[dict[str, Any]]) -> "EngineConfig":
        """Build a config from partial per-section override dicts."""
        base = cls().to_doc()
        for section, values in (overrides or {}).items():
            if section not in base:
                raise Invalid(f"unknown config section: {section}")
            unknown = set(values) - set(base[section])
            if unknown:
                raise Invalid(f"unknown {section} options: {sorted(unknown)}")
            base[section].update(values)
        return cls.from_doc(base)


def validate_appraisal(
    understanding: float, agreement: Optional[int], cfg: AppraisalConfig
) -> None:
    """Reject (understanding, agreement) pairs outside the triangle.

    Zero understanding admits no agreement at all; above zero, |agreement|
    may not exceed the span for that understanding level.
    """
    if understanding not in cfg.understanding_levels:
        raise GridViolation(f"understanding {understanding!r} not on the grid")
    if agreement is None:
        return
    if not isinstance(agreement, int) or isinstance(agreement, bool):
        raise Invalid("agreement must be an integer when present")
    if understanding == 0:
        raise TriangleViolation("agreement cannot be rated at zero understanding")
    span = cfg.span(understanding)
    if abs(agreement) > span:
        raise TriangleViolation(
            f"|agreement| {abs(agreement)} exceeds span {span} at understanding {understanding}"
        )


def is_valid_appraisal(
    understanding: float, agreement: Optional[int], cfg: AppraisalConfig
) -> bool:
    try:
        validate_appraisal(understanding, agreement, cfg)
    except (GridViolation, TriangleViolation, Invalid):
        return False
    return True


@dataclass(frozen=True)
class Appraisal:
    """One participant's latest two-axis verdict on one proposal."""

    participant: ParticipantId
    proposal: ProposalId
    understanding: float
    agreement: Optional[int]
    seq: int

    @property
    def agrees(self) -> bool:
        return self.agreement is not None and self.agreement > 0

    def to_doc(self) -> dict[str, Any]:
        return {
            "participant": self.participant,
            "proposal": self.proposal,
            "understanding": self.understanding,
            "agreement": self.agreement,
            "seq": self.seq,
        }

    @classmethod
    def from_doc(cls, doc: dict[str, Any]) -> "Appraisal":
        return cls(**doc)


@dataclass
class Proposal:
    id: ProposalId
    deliberation: DeliberationId
    generation: int
    body: str
    authors: list[ParticipantId]  # first entry is the original-idea author
    lineage: Optional[RewriteId] = None
    created_seq: int = 0

    def __post_init__(self) -> None:
        if not self.authors:
            raise Invalid("a proposal needs at least one author")

    @property
    def original_author(self) -> ParticipantId:
        return self.authors[0]

    def to_doc(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "deliberation": self.deliberation,
            "generation": self.generation,
            "body": self.body,
            "authors": list(self.authors),
            "lineage": self.lineage,
            "created_seq": self.created_seq,
        }

    @classmethod
    def from_doc(cls, doc: dict[str, Any]) -> "Proposal":
        return cls(**doc)


@dataclass
class Participant:
    id: ParticipantId
    voluntary_count: int = 0
    requested_completed: int = 0
    requested_issued: int = 0
    authored: list[ProposalId] = field(default_factory=list)  # voluntarily submitted

    def to_doc(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "voluntary_count": self.voluntary_count,
            "requested_completed": self.requested_completed,
            "requested_issued": self.requested_issued,
            "authored": list(self.authored),
        }

    @classmethod
    def from_doc(cls, doc: dict[str, Any]) -> "Participant":
        return cls(**doc)


class TaskKind(str, Enum):
    APPRAISE_PROPOSAL = "appraise_proposal"
    APPRAISE_PAIR = "appraise_pair"
    REWRITE_OBSCURE = "rewrite_obscure"
    REWRITE_FOR_BLOCKER = "rewrite_for_blocker"
    APPROVE_REWRITE = "approve_rewrite"


class TaskStatus(str, Enum):
    OPEN = "open"
    COMPLETED = "completed"
    DECLINED = "declined"
    EXPIRED = "expired"


# Task kinds a pull may create, in next_task priority order after existing
# open tasks are re-offered.
REWRITE_KINDS = (TaskKind.REWRITE_OBSCURE, TaskKind.REWRITE_FOR_BLOCKER)

TASK_PRIORITY = {
    TaskKind.APPROVE_REWRITE: 0,
    TaskKind.REWRITE_OBSCURE: 1,
    TaskKind.REWRITE_FOR_BLOCKER: 1,
    TaskKind.APPRAISE_PROPOSAL: 2,
    TaskKind.APPRAISE_PAIR: 3,
}


@dataclass
class Task:
    """A system-requested action addressed to one participant.

    ``payload`` is kind-specific:
      appraise_proposal    {"proposal": id}
      appraise_pair        {"pair": [a, b], "missing": [ids not yet appraised]}
      rewrite_obscure      {"proposal": id, "metrics": {...}}
      rewrite_for_blocker  {"dominator": A, "dominated": B, "blocker": id}
      approve_rewrite      {"rewrite": id, "proposal": target id}
    """

    id: TaskId
    kind: TaskKind
    assignee: ParticipantId
    payload: dict[str, Any]
    issued_seq: int
    status: TaskStatus = TaskStatus.OPEN

    @property
    def open(self) -> bool:
        return self.status == TaskStatus.OPEN

    def exclusion_key(self) -> tuple:
        """Identity of the task's aim, used to avoid re-issuing after decline."""
        k = self.kind
        p = self.payload
        if k == TaskKind.APPRAISE_PROPOSAL:
            return (k.value, p["proposal"])
        if k == TaskKind.APPRAISE_PAIR:
            return (k.value, *sorted(p["pair"]))
        if k == TaskKind.REWRITE_OBSCURE:
            return (k.value, p["proposal"])
        if k == TaskKind.REWRITE_FOR_BLOCKER:
            return (k.value, p["dominator"], p["dominated"])
        return (k.value, p["rewrite"])

    def to_doc(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "kind": self.kind.value,
            "assignee": self.assignee,
            "payload": self.payload,
            "issued_seq": self.issued_seq,
            "status": self.status.value,
        }

    @classmethod
    def from_doc(cls, doc: dict[str, Any]) -> "Task":
        doc = dict(doc)
        doc["kind"] = TaskKind(doc["kind"])
        doc["status"] = TaskStatus(doc["status"])
        return cls(**doc)


class RewriteKind(str, Enum):
    OBSCURE_CLARIFICATION = "obscure_clarification"
    BLOCKER_COMPROMISE = "blocker_compromise"


class RewriteState(str, Enum):
    SUBMITTED = "submitted"
    APPROVED = "approved"
    REJECTED = "rejected"
    PUBLISHED = "published"


@dataclass
class RewriteDraft:
    """A rewrite moving through submission, approval, and publication.

    The invited stage is represented by the open rewrite task itself; a
    draft record exists from submission onward.
    """

    id: RewriteId
    target: ProposalId
    rewriter: ParticipantId
    kind: RewriteKind
    body: str
    state: RewriteState = RewriteState.SUBMITTED
    task: Optional[TaskId] = None
    published_as: Optional[ProposalId] = None

    def to_doc(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "target": self.target,
            "rewriter": self.rewriter,
            "kind": self.kind.value,
            "body": self.body,
            "state": self.state.value,
            "task": self.task,
            "published_as": self.published_as,
        }

    @classmethod
    def from_doc(cls, doc: dict[str, Any]) -> "RewriteDraft":
        doc = dict(doc)
        doc["kind"] = RewriteKind(doc["kind"])
        doc["state"] = RewriteState(doc["state"])
        return cls(**doc)


class EventKind(str, Enum):
    PROPOSAL_SUBMITTED = "ProposalSubmitted"
    APPRAISAL_RECORDED = "AppraisalRecorded"
    TASK_ISSUED = "TaskIssued"
    TASK_DECLINED = "TaskDeclined"
    TASK_COMPLETED = "TaskCompleted"
    REWRITE_SUBMITTED = "RewriteSubmitted"
    REWRITE_APPROVED = "RewriteApproved"
    REWRITE_REJECTED = "RewriteRejected"
    REWRITE_PUBLISHED = "RewritePublished"
    PHASE_ADVANCED = "PhaseAdvanced"
    CONFIG_SET = "ConfigSet"


@dataclass(frozen=True)
class Event:
    seq: int
    timestamp: str  # ISO-8601
    kind: EventKind
    payload: dict[str, Any]

    def to_doc(self) -> dict[str, Any]:
        return {
            "seq": self.seq,
            "timestamp": self.timestamp,
            "kind": self.kind.value,
            "payload": self.payload,
        }

    @classmethod
    def from_doc(cls, doc: dict[str, Any]) -> "Event":
        return cls(
            seq=doc["seq"],
            timestamp=doc["timestamp"],
            kind=EventKind(doc["kind"]),
            payload=doc["payload"],
        )
