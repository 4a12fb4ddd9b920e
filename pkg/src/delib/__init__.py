"""Deliberation engine: two-axis appraisals, agreement clustering,
Pareto-front selection over voter sets, and system-requested tasks."""

from .engine import Deliberation, logical_clock, utc_clock
from .model import (
    Appraisal,
    AppraisalConfig,
    ClusteringConfig,
    EngineConfig,
    Event,
    EventKind,
    Participant,
    Phase,
    Proposal,
    RewriteDraft,
    RewriteKind,
    RewriteState,
    SchedulerConfig,
    Task,
    TaskKind,
    TaskStatus,
    agreement_span,
    validate_appraisal,
)
from .state import DeliberationState, agree_set

__version__ = "0.1.0"

__all__ = [
    "Appraisal",
    "AppraisalConfig",
    "ClusteringConfig",
    "Deliberation",
    "DeliberationState",
    "EngineConfig",
    "Event",
    "EventKind",
    "Participant",
    "Phase",
    "Proposal",
    "RewriteDraft",
    "RewriteKind",
    "RewriteState",
    "SchedulerConfig",
    "Task",
    "TaskKind",
    "TaskStatus",
    "agree_set",
    "agreement_span",
    "logical_clock",
    "utc_clock",
    "validate_appraisal",
    "__version__",
]
