from __future__ import annotations

import pytest

from delib.engine import Deliberation
from delib.errors import Blocked, Conflict, Forbidden, NotFound
from delib.model import (
    EngineConfig,
    SchedulerConfig,
    TaskKind,
)
from delib.scheduler import (
    disambiguation_candidates,
    incentive_gate,
    select_rewrite_targets,
    select_rewriter,
    size_percentile,
)


def config(**scheduler_overrides) -> EngineConfig:
    return EngineConfig(scheduler=SchedulerConfig(**scheduler_overrides))


def fresh_engine(name="sched", roster=(), **scheduler_overrides) -> Deliberation:
    return Deliberation(name, config(**scheduler_overrides), roster=roster)


class TestNextTask:
    def test_least_appraised_proposal_goes_first(self):
        engine = fresh_engine(roster=["v1", "v2", "v3"])
        a = engine.submit_proposal("wa", "text a").id
        b = engine.submit_proposal("wb", "text b").id
        engine.begin_evaluation()
        engine.submit_appraisal("v1", b, 1.0, 1)
        engine.submit_appraisal("v2", b, 1.0, 1)
        task = engine.next_task("v3")
        assert task.kind == TaskKind.APPRAISE_PROPOSAL
        assert task.payload["proposal"] == a

    def test_unknown_participant(self):
        engine = fresh_engine(roster=["v1"])
        with pytest.raises(NotFound):
            engine.next_task("stranger")

    def test_pull_reoffers_open_task(self):
        engine = fresh_engine(roster=["v1"])
        engine.submit_proposal("wa", "text a")
        engine.begin_evaluation()
        first = engine.next_task("v1")
        second = engine.next_task("v1")
        assert first.id == second.id
        assert len(engine.state.open_tasks_of("v1")) == 1

    def test_author_never_asked_to_self_review(self):
        engine = fresh_engine(roster=["v1"])
        engine.submit_proposal("v1", "my own words")
        engine.begin_evaluation()
        assert engine.next_task("v1") is None

    def test_nothing_to_do_in_proposal_phase(self):
        engine = fresh_engine(roster=["v1"])
        engine.submit_proposal("wa", "text a")
        assert engine.next_task("v1") is None

    def test_pair_task_after_declining_single(self):
        # Disambiguation reaches someone who turned down the plain request:
        # the pair carries its own justification.
        engine = fresh_engine(roster=["v1", "v2"])
        a = engine.submit_proposal("wa", "text a").id
        b = engine.submit_proposal("wb", "text b").id
        engine.begin_evaluation()
        engine.submit_appraisal("v1", a, 1.0, 1)
        task = engine.next_task("v1")
        assert task.payload["proposal"] == b
        engine.decline_task(task.id, "v1")
        pair_task = engine.next_task("v1")
        assert pair_task is not None
        assert pair_task.kind == TaskKind.APPRAISE_PAIR
        assert pair_task.payload["pair"] == sorted((a, b))
        assert pair_task.payload["missing"] == [b]

    def test_declined_task_never_reissued(self):
        engine = fresh_engine(roster=["v1"])
        a = engine.submit_proposal("wa", "text a").id
        engine.begin_evaluation()
        task = engine.next_task("v1")
        engine.decline_task(task.id, "v1")
        follow_up = engine.next_task("v1")
        assert follow_up is None or follow_up.payload.get("proposal") != a

    def test_decline_leaves_target_for_others(self):
        engine = fresh_engine(roster=["v1", "v2"])
        a = engine.submit_proposal("wa", "text a").id
        engine.begin_evaluation()
        task = engine.next_task("v1")
        engine.decline_task(task.id, "v1")
        assert engine.state.appraisal_count(a) == 0
        other = engine.next_task("v2")
        assert other.payload["proposal"] == a

    def test_decline_completed_task_conflicts(self):
        engine = fresh_engine(roster=["v1"])
        a = engine.submit_proposal("wa", "text a").id
        engine.begin_evaluation()
        task = engine.next_task("v1")
        engine.submit_appraisal("v1", a, 1.0, 1, task.id)
        with pytest.raises(Conflict):
            engine.decline_task(task.id, "v1")

    def test_decline_requires_ownership(self):
        engine = fresh_engine(roster=["v1", "v2"])
        engine.submit_proposal("wa", "text a")
        engine.begin_evaluation()
        task = engine.next_task("v1")
        with pytest.raises(Forbidden):
            engine.decline_task(task.id, "v2")

    def test_seeded_determinism(self):
        def issue_sequence(seed):
            engine = fresh_engine("det", roster=["v1", "v2", "v3"], rng_seed=seed)
            for i in range(4):
                engine.submit_proposal(f"w{i}", f"text {i}")
            engine.begin_evaluation()
            issued = []
            for _ in range(3):
                for reviewer in ("v1", "v2", "v3"):
                    task = engine.next_task(reviewer)
                    if task is None:
                        continue
                    issued.append((reviewer, task.payload["proposal"]))
                    engine.submit_appraisal(
                        reviewer, task.payload["proposal"], 1.0, 1, task.id
                    )
            return issued

        assert issue_sequence(7) == issue_sequence(7)
        # different seeds are allowed to differ; identical ones must not


class TestFairness:
    def test_one_shot_pullers_keep_counts_within_one(self):
        # Pullers with full eligibility: the min-count rule keeps the load
        # spread within one at every single step.
        reviewers = [f"r{i:02d}" for i in range(60)]
        engine = fresh_engine("fair1", roster=reviewers, rng_seed=3)
        proposals = [engine.submit_proposal(f"w{i}", f"text {i}").id for i in range(7)]
        engine.begin_evaluation()
        for reviewer in reviewers:
            task = engine.next_task(reviewer)
            engine.submit_appraisal(reviewer, task.payload["proposal"], 1.0, 1, task.id)
            counts = [engine.state.appraisal_count(p) for p in proposals]
            assert max(counts) - min(counts) <= 1

    def test_round_robin_until_quota_ends_balanced(self):
        # Each reviewer covers half the proposals, so eligibility erodes;
        # the min-count rule still lands within one of perfect balance.
        reviewers = [f"r{i:02d}" for i in range(12)]
        engine = fresh_engine("fair2", roster=reviewers, rng_seed=5)
        proposals = [engine.submit_proposal(f"w{i}", f"text {i}").id for i in range(8)]
        engine.begin_evaluation()
        done = {r: 0 for r in reviewers}
        while any(d < 4 for d in done.values()):
            for reviewer in reviewers:
                if done[reviewer] >= 4:
                    continue
                task = engine.next_task(reviewer)
                engine.submit_appraisal(
                    reviewer, task.payload["proposal"], 1.0, 1, task.id
                )
                done[reviewer] += 1
        counts = [engine.state.appraisal_count(p) for p in proposals]
        ideal = len(reviewers) * 4 / len(proposals)
        assert all(abs(count - ideal) <= 1 for count in counts)


class TestDisambiguationCandidates:
    def _state(self):
        engine = fresh_engine(roster=["v-one", "u-none", "w-both"])
        a = engine.submit_proposal("wa", "text a").id
        b = engine.submit_proposal("wb", "text b").id
        engine.begin_evaluation()
        engine.submit_appraisal("v-one", a, 1.0, 1)
        engine.submit_appraisal("w-both", a, 1.0, 1)
        engine.submit_appraisal("w-both", b, 1.0, -1)
        return engine.state, a, b

    def test_cost_classes(self):
        state, a, b = self._state()
        candidates = disambiguation_candidates(state, (a, b))
        assert ("v-one", 1) in candidates
        assert ("u-none", 2) in candidates
        assert all(pid != "w-both" for pid, _ in candidates)

    def test_cost_one_always_first(self):
        state, a, b = self._state()
        candidates = disambiguation_candidates(state, (a, b))
        costs = [cost for _, cost in candidates]
        assert costs == sorted(costs)

    def test_authors_excluded(self):
        state, a, b = self._state()
        assert all(pid not in ("wa", "wb") for pid, _ in disambiguation_candidates(state, (a, b)))


class TestSizePercentile:
    def test_median_of_three(self):
        assert size_percentile([1, 4, 6], 50) == 4

    def test_all_sizes(self):
        assert size_percentile([5], 50) == 5
        assert size_percentile([1, 9], 50) == 1
        assert size_percentile([1, 9], 100) == 9


def build_gem_engine(support=(1, 1, -1), extra_readers=6):
    """One obscure proposal plus clear mainstream ones.

    ``support`` sets the agreement sign of each understander of the gem.
    """
    insiders = [f"ins{i}" for i in range(len(support))]
    outsiders = [f"out{i}" for i in range(extra_readers)]
    engine = fresh_engine("gem", roster=insiders + outsiders, min_appraisals=5)
    gem = engine.submit_proposal("gem-author", "dense prose").id
    clear = [engine.submit_proposal(f"ins{i}", f"clear text {i}").id for i in range(len(support))]
    engine.begin_evaluation()
    # everyone reads the clear ones well, giving insiders defined skill
    for reader in insiders + outsiders:
        for pid in clear:
            if reader in engine.state.proposals[pid].authors:
                continue
            engine.submit_appraisal(reader, pid, 1.0, 1)
    # the gem: insiders understand it, outsiders do not
    for insider, sign in zip(insiders, support):
        engine.submit_appraisal(insider, gem, 1.0, sign)
    for outsider in outsiders:
        engine.submit_appraisal(outsider, gem, 0.0, None)
    return engine, gem, clear


class TestRewriteTargets:
    def test_obscure_supported_small_cluster_selected(self):
        engine, gem, _ = build_gem_engine(support=(1, 1, -1))
        targets = select_rewrite_targets(engine.state)
        assert gem in [pid for pid, _ in targets]

    def test_unsupported_target_rejected(self):
        engine, gem, _ = build_gem_engine(support=(-1, -1, 1))
        assert gem not in [pid for pid, _ in select_rewrite_targets(engine.state)]

    def test_clear_proposal_rejected(self):
        engine, gem, clear = build_gem_engine()
        assert not set(clear) & {pid for pid, _ in select_rewrite_targets(engine.state)}

    def test_under_appraised_target_stays_blinded(self):
        engine, gem, _ = build_gem_engine(extra_readers=1)  # 4 appraisals < 5
        assert gem not in [pid for pid, _ in select_rewrite_targets(engine.state)]


class TestSelectRewriter:
    def test_best_skilled_agreeing_understander(self):
        engine, gem, _ = build_gem_engine(support=(1, 1, -1))
        chosen = select_rewriter(engine.state, gem)
        appraisal = engine.state.appraisals_of(gem)[chosen]
        assert appraisal.understanding >= 0.5
        assert appraisal.agrees

    def test_disagreeing_understander_when_no_agreers(self):
        engine, gem, _ = build_gem_engine(support=(-1, -1, -1))
        chosen = select_rewriter(engine.state, gem)
        assert chosen is not None
        assert not engine.state.appraisals_of(gem)[chosen].agrees

    def test_none_without_understanders(self):
        engine = fresh_engine(roster=["r1", "r2"])
        gem = engine.submit_proposal("w", "opaque").id
        engine.begin_evaluation()
        engine.submit_appraisal("r1", gem, 0.0, None)
        assert select_rewriter(engine.state, gem) is None

    def test_higher_skill_wins(self):
        engine = fresh_engine(roster=["sharp", "dull", "r1", "r2", "r3"], min_appraisals=3)
        gem = engine.submit_proposal("w", "gem").id
        good = engine.submit_proposal("sharp", "lucid").id
        bad = engine.submit_proposal("dull", "murky").id
        engine.begin_evaluation()
        for reader in ("r1", "r2", "r3"):
            engine.submit_appraisal(reader, good, 1.0, 1)
            engine.submit_appraisal(reader, bad, 0.25, None)
        engine.submit_appraisal("sharp", gem, 1.0, 2)
        engine.submit_appraisal("dull", gem, 1.0, 2)
        assert select_rewriter(engine.state, gem) == "sharp"


class TestBlockerInvitations:
    def _near_dom_engine(self, **overrides):
        engine = fresh_engine(roster=["1", "2", "3", "5"], **overrides)
        a = engine.submit_proposal("wa", "text a").id
        b = engine.submit_proposal("wb", "text b").id
        engine.begin_evaluation()
        for voter in ("1", "2", "3"):
            engine.submit_appraisal(voter, a, 1.0, 1)
        for voter in ("1", "2", "5"):
            engine.submit_appraisal(voter, b, 1.0, 1)
        engine.submit_appraisal("5", a, 1.0, -1)
        return engine, a, b

    def test_blocker_invited_to_rewrite_dominator(self):
        engine, a, b = self._near_dom_engine()
        issued = engine.sweep_rewrite_invitations()
        mine = [t for t in issued if t.assignee == "5"]
        assert len(mine) == 1
        assert mine[0].kind == TaskKind.REWRITE_FOR_BLOCKER
        assert mine[0].payload["dominator"] == a
        assert mine[0].payload["dominated"] == b

    def test_sweep_is_idempotent_while_open(self):
        engine, *_ = self._near_dom_engine()
        first = engine.sweep_rewrite_invitations()
        second = engine.sweep_rewrite_invitations()
        assert first and not second

    def test_shared_blocker_capped_by_open_tasks(self):
        engine = fresh_engine(roster=["1", "2", "3", "4", "9"], max_open_tasks=2)
        dominators = [engine.submit_proposal(f"w{i}", f"text {i}").id for i in range(3)]
        blocked = engine.submit_proposal("wb", "the one 9 stands behind").id
        engine.begin_evaluation()
        # 9 alone keeps `blocked` alive against three stronger proposals
        for i, dominator in enumerate(dominators):
            engine.submit_appraisal("1", dominator, 1.0, 1)
            engine.submit_appraisal(str(i + 2), dominator, 1.0, 1)
        engine.submit_appraisal("1", blocked, 1.0, 1)
        engine.submit_appraisal("9", blocked, 1.0, 1)
        issued = engine.sweep_rewrite_invitations()
        for_nine = [t for t in issued if t.assignee == "9"]
        assert len(for_nine) == 2  # third invitation held back by the cap
        assert {t.payload["dominated"] for t in for_nine} == {blocked}
        assert len({t.payload["dominator"] for t in for_nine}) == 2

    def test_declined_invitation_not_reissued(self):
        engine, a, b = self._near_dom_engine()
        task = engine.sweep_rewrite_invitations()[0]
        engine.decline_task(task.id, task.assignee)
        assert engine.sweep_rewrite_invitations() == []


class TestIncentiveGate:
    def test_disabled_gate_allows(self):
        engine = fresh_engine(roster=["v"])
        allowed, deficit = incentive_gate(engine.state, "v")
        assert allowed and deficit == 0

    def test_covered_author_allowed(self):
        engine = fresh_engine(roster=["v"], incentive_enabled=True)
        state = engine.state
        record = state.participants["v"]
        record.authored = ["x", "y", "z"]
        record.requested_completed = 2
        allowed, deficit = incentive_gate(state, "v")
        assert allowed and deficit == 0

    def test_deficit_reported(self):
        engine = fresh_engine(roster=["v"], incentive_enabled=True)
        record = engine.state.participants["v"]
        record.authored = ["x", "y", "z"]
        record.requested_completed = 1
        allowed, deficit = incentive_gate(engine.state, "v")
        assert not allowed and deficit == 1

    def test_gate_blocks_submission(self):
        # The check runs against counters as they stand when submitting, so
        # the allowance lets the first one through and a second rides on the
        # still-zero excess; the third needs completed requested work.
        engine = fresh_engine(
            roster=["v"], incentive_enabled=True, free_allowance=1
        )
        engine.submit_proposal("v", "first is free")
        engine.submit_proposal("v", "second rides the allowance check")
        with pytest.raises(Blocked) as exc:
            engine.submit_proposal("v", "third needs credit")
        assert exc.value.deficit == 1
