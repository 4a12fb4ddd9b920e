"""Scalar measures derived from appraisals: clarity, support, writing skill."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .model import ParticipantId, ProposalId
from .state import DeliberationState


@dataclass(frozen=True)
class ProposalMetrics:
    proposal: ProposalId
    appraisal_count: int
    clarity: Optional[float]  # mean understanding; None with no appraisals
    incomprehension_rate: Optional[float]
    support_among_understanders: Optional[float]  # None when nobody understood

    def to_doc(self) -> dict:
        return {
            "proposal": self.proposal,
            "appraisal_count": self.appraisal_count,
            "clarity": self.clarity,
            "incomprehension_rate": self.incomprehension_rate,
            "support_among_understanders": self.support_among_understanders,
        }


@dataclass(frozen=True)
class WriterSkill:
    participant: ParticipantId
    skill: Optional[float]  # None until enough appraised authored work exists
    basis: int  # authored proposals with enough appraisals to count


def proposal_metrics(state: DeliberationState, proposal_id: ProposalId) -> ProposalMetrics:
    """Clarity, incomprehension, and support for one proposal.

    Support is measured only among appraisers who reached the understood
    threshold; with none of those it stays undefined.
    """
    cfg = state.config.appraisal
    appraisals = state.appraisals_of(proposal_id)
    count = len(appraisals)
    if count == 0:
        return ProposalMetrics(proposal_id, 0, None, None, None)
    understanding = [a.understanding for a in appraisals.values()]
    clarity = sum(understanding) / count
    incomprehension = sum(
        1 for u in understanding if u <= cfg.incomprehensible_threshold
    ) / count
    understanders = [
        a for a in appraisals.values() if a.understanding >= cfg.understood_threshold
    ]
    support = (
        sum(1 for a in understanders if a.agrees) / len(understanders)
        if understanders
        else None
    )
    return ProposalMetrics(proposal_id, count, clarity, incomprehension, support)


def writer_skill(state: DeliberationState, participant_id: ParticipantId) -> WriterSkill:
    """Mean clarity of a participant's sufficiently-appraised authored work."""
    state.participant(participant_id)
    floor = state.config.scheduler.skill_min_appraisals
    clarities: list[float] = []
    for proposal in state.proposals.values():
        if participant_id not in proposal.authors:
            continue
        m = proposal_metrics(state, proposal.id)
        if m.appraisal_count >= floor and m.clarity is not None:
            clarities.append(m.clarity)
    if not clarities:
        return WriterSkill(participant_id, None, 0)
    return WriterSkill(participant_id, sum(clarities) / len(clarities), len(clarities))
