"""Selection logic for system-requested actions.

Everything here is a pure function of a state snapshot; materializing the
chosen task as an event is the engine's job. Participants pull: a request
is only ever handed to someone who asked for work, and a declined request
is never offered to the same person again.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Any, Optional

from .clustering import cluster_report, uncertain_pairs
from .errors import Blocked, NotFound
from .metrics import proposal_metrics, writer_skill, ProposalMetrics
from .model import (
    ParticipantId,
    Phase,
    ProposalId,
    Task,
    TaskKind,
    TaskStatus,
    TASK_PRIORITY,
)
from .pareto import near_dominations
from .state import DeliberationState


@dataclass(frozen=True)
class TaskPlan:
    """A task the scheduler wants issued; the engine turns it into an event."""

    kind: TaskKind
    assignee: ParticipantId
    payload: dict[str, Any]

    def exclusion_key(self) -> tuple:
        return Task(
            id="", kind=self.kind, assignee=self.assignee, payload=self.payload, issued_seq=0
        ).exclusion_key()


def _selection_rng(state: DeliberationState) -> random.Random:
    # Seeded per issuance so identical state + seed gives identical choices.
    return random.Random(f"{state.config.scheduler.rng_seed}:{state.last_seq + 1}")


def _is_author(state: DeliberationState, participant_id: ParticipantId, proposal_id: ProposalId) -> bool:
    return participant_id in state.proposals[proposal_id].authors


def open_task_for(state: DeliberationState, participant_id: ParticipantId) -> Optional[Task]:
    """The open task the participant should act on next, if any."""
    open_tasks = state.open_tasks_of(participant_id)
    if not open_tasks:
        return None
    return min(open_tasks, key=lambda t: (TASK_PRIORITY[t.kind], t.issued_seq))


def plan_blind_appraisal(
    state: DeliberationState, participant_id: ParticipantId
) -> Optional[TaskPlan]:
    """Least-appraised proposal the participant may still review.

    Open assignments count toward the load so simultaneous pullers spread
    out; ties fall to the seeded RNG.
    """
    appraised = state.appraised_by.get(participant_id, set())
    candidates: list[tuple[int, ProposalId]] = []
    for pid in state.current_members():
        if pid in appraised:
            continue
        if _is_author(state, participant_id, pid):
            continue
        if state.has_declined(participant_id, (TaskKind.APPRAISE_PROPOSAL.value, pid)):
            continue
        load = state.appraisal_count(pid) + state.open_appraise_load.get(pid, 0)
        candidates.append((load, pid))
    if not candidates:
        return None
    lowest = min(load for load, _ in candidates)
    pool = sorted(pid for load, pid in candidates if load == lowest)
    choice = _selection_rng(state).choice(pool)
    return TaskPlan(
        kind=TaskKind.APPRAISE_PROPOSAL,
        assignee=participant_id,
        payload={"proposal": choice},
    )


def plan_pair_appraisal(
    state: DeliberationState, participant_id: ParticipantId
) -> Optional[TaskPlan]:
    """A disambiguation request the participant can settle at cost one."""
    appraised = state.appraised_by.get(participant_id, set())
    for a, b in uncertain_pairs(state):
        done = (a in appraised) + (b in appraised)
        if done != 1:
            continue
        missing = b if a in appraised else a
        if _is_author(state, participant_id, missing):
            continue
        if state.has_declined(
            participant_id, (TaskKind.APPRAISE_PAIR.value, *sorted((a, b)))
        ):
            continue
        return TaskPlan(
            kind=TaskKind.APPRAISE_PAIR,
            assignee=participant_id,
            payload={"pair": sorted((a, b)), "missing": [missing]},
        )
    return None


def next_task(
    state: DeliberationState, participant_id: ParticipantId
) -> Task | TaskPlan | None:
    """Highest-priority action for a participant signalling readiness.

    Already-issued open work (approvals first, then rewrite invitations) is
    re-offered before anything new is planned; new work is planned only
    during the evaluation phase.
    """
    if participant_id not in state.participants:
        raise NotFound(f"unknown participant {participant_id!r}")
    existing = open_task_for(state, participant_id)
    if existing is not None:
        return existing
    if state.phase != Phase.EVALUATION:
        return None
    plan = plan_blind_appraisal(state, participant_id)
    if plan is not None:
        return plan
    return plan_pair_appraisal(state, participant_id)


def disambiguation_candidates(
    state: DeliberationState, pair: tuple[ProposalId, ProposalId]
) -> list[tuple[ParticipantId, int]]:
    """Who can settle an uncertain pair, cheapest informants first."""
    a, b = pair
    state.proposal(a), state.proposal(b)
    results: list[tuple[int, ParticipantId]] = []
    for participant_id in state.participants:
        if _is_author(state, participant_id, a) or _is_author(state, participant_id, b):
            continue
        appraised = state.appraised_by.get(participant_id, set())
        done = (a in appraised) + (b in appraised)
        if done == 2:
            continue
        cost = 1 if done == 1 else 2
        results.append((cost, participant_id))
    results.sort()
    return [(participant_id, cost) for cost, participant_id in results]


def size_percentile(sizes: list[int], percentile: float) -> int:
    """Nearest-rank percentile of cluster sizes."""
    ordered = sorted(sizes)
    rank = max(1, math.ceil(percentile / 100 * len(ordered)))
    return ordered[rank - 1]


def select_rewrite_targets(
    state: DeliberationState,
) -> list[tuple[ProposalId, ProposalMetrics]]:
    """Obscure gems: widely misunderstood, supported by their understanders,
    and sitting in a relatively small cluster."""
    scheduler_cfg = state.config.scheduler
    clustering = cluster_report(state)
    if not clustering.clusters:
        return []
    cap = size_percentile(clustering.sizes(), scheduler_cfg.small_cluster_percentile)
    cluster_size = {
        pid: len(members)
        for members in clustering.clusters.values()
        for pid in members
    }
    picked: list[tuple[ProposalId, ProposalMetrics]] = []
    for pid in state.current_members():
        m = proposal_metrics(state, pid)
        if m.appraisal_count < scheduler_cfg.min_appraisals:
            continue
        if m.incomprehension_rate is None or m.incomprehension_rate < scheduler_cfg.incomprehension_threshold:
            continue
        if m.support_among_understanders is None or m.support_among_understanders < scheduler_cfg.support_threshold:
            continue
        if cluster_size[pid] > cap:
            continue
        picked.append((pid, m))
    picked.sort(key=lambda item: (-item[1].incomprehension_rate, item[0]))
    return picked


def rewriter_ranking(
    state: DeliberationState, proposal_id: ProposalId
) -> list[ParticipantId]:
    """Candidate rewriters, best first: understanders with known writing
    skill, agreeing ones ahead of the rest."""
    proposal = state.proposals[proposal_id]
    cfg = state.config.appraisal
    appraisals = state.appraisals_of(proposal_id)
    ranked: list[tuple[int, float, int, ParticipantId]] = []
    for participant_id, appraisal in appraisals.items():
        if participant_id in proposal.authors:
            continue
        if appraisal.understanding < cfg.understood_threshold:
            continue
        skill = writer_skill(state, participant_id).skill
        if skill is None:
            continue
        agrees = 0 if appraisal.agrees else 1  # agreement preferred, not required
        open_count = len(state.open_tasks_of(participant_id))
        ranked.append((agrees, -skill, open_count, participant_id))
    ranked.sort()
    return [participant_id for _, _, _, participant_id in ranked]


def select_rewriter(
    state: DeliberationState, proposal_id: ProposalId
) -> Optional[ParticipantId]:
    ranking = rewriter_ranking(state, proposal_id)
    return ranking[0] if ranking else None


def _has_task_with_key(
    state: DeliberationState,
    key: tuple,
    assignee: Optional[ParticipantId] = None,
) -> bool:
    for task in state.tasks.values():
        if task.status == TaskStatus.EXPIRED:
            continue
        if assignee is not None and task.assignee != assignee:
            continue
        if task.exclusion_key() == key:
            return True
    return False


def blocker_rewrite_requests(state: DeliberationState) -> list[TaskPlan]:
    """Invitations for blockers to rewrite the proposal they stand against.

    One invitation per (blocker, pair); the same person may collect several
    across different near-dominations, up to their open-task cap.
    """
    scheduler_cfg = state.config.scheduler
    plans: list[TaskPlan] = []
    open_count = {
        pid: len(tasks) for pid, tasks in state.open_tasks_by_assignee.items()
    }
    for nd in near_dominations(state, scheduler_cfg.max_blockers):
        key = (TaskKind.REWRITE_FOR_BLOCKER.value, nd.dominator, nd.dominated)
        for blocker in sorted(nd.blockers):
            if state.has_declined(blocker, key):
                continue
            if _has_task_with_key(state, key, assignee=blocker):
                continue
            if open_count.get(blocker, 0) >= scheduler_cfg.max_open_tasks:
                continue
            plans.append(
                TaskPlan(
                    kind=TaskKind.REWRITE_FOR_BLOCKER,
                    assignee=blocker,
                    payload={
                        "dominator": nd.dominator,
                        "dominated": nd.dominated,
                        "blocker": blocker,
                    },
                )
            )
            open_count[blocker] = open_count.get(blocker, 0) + 1
    return plans


def obscure_rewrite_requests(state: DeliberationState) -> list[TaskPlan]:
    """Invitations to clarify obscure gems, one open rewriter per target."""
    scheduler_cfg = state.config.scheduler
    plans: list[TaskPlan] = []
    open_count = {
        pid: len(tasks) for pid, tasks in state.open_tasks_by_assignee.items()
    }
    for target, m in select_rewrite_targets(state):
        key = (TaskKind.REWRITE_OBSCURE.value, target)
        if _has_task_with_key(state, key):
            continue
        for candidate in rewriter_ranking(state, target):
            if state.has_declined(candidate, key):
                continue
            if open_count.get(candidate, 0) >= scheduler_cfg.max_open_tasks:
                continue
            plans.append(
                TaskPlan(
                    kind=TaskKind.REWRITE_OBSCURE,
                    assignee=candidate,
                    payload={"proposal": target, "metrics": m.to_doc()},
                )
            )
            open_count[candidate] = open_count.get(candidate, 0) + 1
            break
    return plans


def incentive_gate(
    state: DeliberationState, participant_id: ParticipantId
) -> tuple[bool, int]:
    """(allowed, deficit) for a participant wanting to contribute.

    With the gate disabled everything is allowed. Otherwise each authored
    contribution past the free allowance must be covered by completed
    requested actions at the configured ratio.
    """
    cfg = state.config.scheduler
    if not cfg.incentive_enabled:
        return True, 0
    record = state.participants.get(participant_id)
    if record is None:
        return True, 0
    needed = cfg.requested_per_authored * max(
        0, len(record.authored) - cfg.free_allowance
    )
    if record.requested_completed >= needed:
        return True, 0
    return False, math.ceil(needed - record.requested_completed)


def check_incentive_gate(state: DeliberationState, participant_id: ParticipantId) -> None:
    allowed, deficit = incentive_gate(state, participant_id)
    if not allowed:
        raise Blocked(
            f"complete {deficit} more requested action(s) before contributing",
            deficit=deficit,
        )


def tasks_completed_by_appraisal(
    state: DeliberationState, participant_id: ParticipantId, proposal_id: ProposalId
) -> list[Task]:
    """Open tasks of the participant satisfied by this appraisal landing."""
    done: list[Task] = []
    appraised = state.appraised_by.get(participant_id, set())
    for task in state.open_tasks_of(participant_id):
        if task.kind == TaskKind.APPRAISE_PROPOSAL:
            if task.payload["proposal"] == proposal_id:
                done.append(task)
        elif task.kind == TaskKind.APPRAISE_PAIR:
            pair = set(task.payload["pair"])
            if proposal_id in pair and pair <= (appraised | {proposal_id}):
                done.append(task)
    return done
