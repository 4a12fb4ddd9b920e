"""Attribution and advertisement rules for published rewrites."""
from __future__ import annotations

from .model import ParticipantId, Proposal, ProposalId
from .state import DeliberationState, agree_set


def attribution(proposal: Proposal) -> str:
    """Publication credit line; co-authored texts name the idea's originator."""
    authors = proposal.authors
    if len(authors) == 1:
        return f"written by {authors[0]}"
    return (
        "written by " + " and ".join(authors) + f" on an original idea of {authors[0]}"
    )


def advertisement_audience(
    state: DeliberationState, target: ProposalId
) -> list[ParticipantId]:
    """Who should hear about a rewrite: the target's supporters plus
    everyone who declared they did not understand it."""
    cfg = state.config.appraisal
    audience = set(agree_set(state, target))
    for participant_id, appraisal in state.appraisals_of(target).items():
        if appraisal.understanding <= cfg.incomprehensible_threshold:
            audience.add(participant_id)
    return sorted(audience)


def rewrite_authors(
    target: Proposal, rewriter: ParticipantId, clarification: bool
) -> list[ParticipantId]:
    """Author list for the published proposal.

    Clarifications keep the target's authors (idea originator first) and
    append the new rewriter; compromise rewrites stand under the rewriter's
    name alone, linked to the target through lineage.
    """
    if not clarification:
        return [rewriter]
    authors = list(target.authors)
    if rewriter not in authors:
        authors.append(rewriter)
    return authors
