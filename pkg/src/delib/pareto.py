"""Dominance over agree-sets: Pareto front, near-domination, rewrite gain.

A proposal dominates another when its agree-set strictly contains the
other's. The front is the set of current-generation proposals nobody
dominates; it seeds the next generation. Near-domination singles out the
small blocker sets whose members alone keep a proposal alive.
"""
from __future__ import annotations

from dataclasses import dataclass

from .errors import Invalid, PhaseError
from .model import ParticipantId, Phase, ProposalId
from .state import DeliberationState, agree_set


@dataclass(frozen=True)
class NearDomination:
    """A would-be domination blocked by a small set of participants.

    ``blockers`` agree with the dominated proposal but not the dominator;
    absorbing them into the dominator's agree-set would complete the
    domination.
    """

    dominator: ProposalId
    dominated: ProposalId
    blockers: frozenset[ParticipantId]


@dataclass(frozen=True)
class DominanceReport:
    generation: int
    front: tuple[ProposalId, ...]
    near_dominations: tuple[NearDomination, ...]

    def to_doc(self) -> dict:
        return {
            "generation": self.generation,
            "front": list(self.front),
            "near_dominations": [
                {
                    "dominator": nd.dominator,
                    "dominated": nd.dominated,
                    "blockers": sorted(nd.blockers),
                }
                for nd in self.near_dominations
            ],
        }


def dominates(state: DeliberationState, a: ProposalId, b: ProposalId) -> bool:
    """True when every agreer of b also agrees with a, plus at least one more."""
    voters_a = agree_set(state, a)
    voters_b = agree_set(state, b)
    return voters_b <= voters_a and voters_a != voters_b


def pareto_front(state: DeliberationState, *, force: bool = False) -> set[ProposalId]:
    """Current-generation proposals not dominated by any other member.

    Workflow callers must be in the evaluation phase; reports pass
    ``force=True`` to inspect the front at any time.
    """
    if not force and state.phase != Phase.EVALUATION:
        raise PhaseError("the front is extracted during the evaluation phase")
    members = state.current_members()
    voters = {p: state.agree_index.get(p, set()) for p in members}
    front: set[ProposalId] = set()
    for b in members:
        vb = voters[b]
        dominated = any(
            vb <= voters[a] and voters[a] != vb for a in members if a != b
        )
        if not dominated:
            front.add(b)
    return front


def near_dominations(
    state: DeliberationState, max_blockers: int = 1
) -> list[NearDomination]:
    """All ordered pairs where a small blocker set prevents domination.

    Sorted by blocker count ascending, then dominator support descending,
    then ids, so downstream request selection is deterministic.
    """
    if max_blockers < 1:
        raise Invalid("max_blockers must be >= 1")
    members = state.current_members()
    voters = {p: state.agree_index.get(p, set()) for p in members}
    found: list[NearDomination] = []
    for a in members:
        va = voters[a]
        for b in members:
            if a == b:
                continue
            blockers = voters[b] - va
            if not blockers or len(blockers) > max_blockers:
                continue
            if not (va - voters[b]):
                continue
            found.append(NearDomination(a, b, frozenset(blockers)))
    found.sort(
        key=lambda nd: (
            len(nd.blockers),
            -len(voters[nd.dominator]),
            nd.dominator,
            nd.dominated,
        )
    )
    return found


def rewrite_gain_check(
    state: DeliberationState,
    rewritten: ProposalId,
    original: ProposalId,
    dominated: ProposalId,
) -> bool:
    """Did the rewrite keep the original's agreers and win over the blockers?

    When true, the rewrite dominates both the original and the proposal it
    was aimed at as soon as its agree-set strictly exceeds each of theirs.
    """
    voters_original = agree_set(state, original)
    blockers = agree_set(state, dominated) - voters_original
    return (voters_original | blockers) <= agree_set(state, rewritten)


def dominance_report(
    state: DeliberationState, max_blockers: int | None = None
) -> DominanceReport:
    cap = max_blockers if max_blockers is not None else state.config.scheduler.max_blockers
    return DominanceReport(
        generation=state.generation,
        front=tuple(sorted(pareto_front(state, force=True))),
        near_dominations=tuple(near_dominations(state, cap)),
    )
