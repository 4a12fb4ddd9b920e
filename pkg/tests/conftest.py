from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from delib.model import EngineConfig, Event, EventKind, Phase
from delib.state import DeliberationState


def make_state(
    voters: dict[str, set[str]],
    deliberation: str = "t",
    config: EngineConfig | None = None,
    evaluation: bool = True,
) -> DeliberationState:
    """Build an evaluation-phase state carrying the given agree-sets.

    Each proposal gets a dedicated author (who never votes) plus one
    positive appraisal per listed voter, all through regular events.
    """
    state = DeliberationState(id=deliberation)
    seq = 0

    def emit(kind: EventKind, payload: dict) -> None:
        nonlocal seq
        seq += 1
        state.apply(Event(seq=seq, timestamp="", kind=kind, payload=payload))

    roster = sorted({v for vs in voters.values() for v in vs})
    emit(
        EventKind.CONFIG_SET,
        {
            "deliberation": deliberation,
            "config": (config or EngineConfig()).to_doc(),
            "roster": roster,
        },
    )
    for pid in sorted(voters):
        emit(
            EventKind.PROPOSAL_SUBMITTED,
            {
                "proposal": pid,
                "author": f"author-of-{pid}",
                "body": f"text of {pid}",
                "generation": 0,
                "voluntary": True,
            },
        )
    if evaluation:
        emit(
            EventKind.PHASE_ADVANCED,
            {"phase": Phase.EVALUATION.value, "generation": 0, "carried": [], "front": []},
        )
    for pid in sorted(voters):
        for voter in sorted(voters[pid]):
            emit(
                EventKind.APPRAISAL_RECORDED,
                {
                    "participant": voter,
                    "proposal": pid,
                    "understanding": 1.0,
                    "agreement": 1,
                    "voluntary": True,
                    "auto": False,
                },
            )
    return state


@pytest.fixture
def voters_state():
    return make_state
