from __future__ import annotations

import random

import pytest
from hypothesis import given, settings, strategies as st

from delib.engine import Deliberation
from delib.errors import NotFound, PhaseError
from delib.pareto import (
    dominance_report,
    dominates,
    near_dominations,
    pareto_front,
    rewrite_gain_check,
)
from delib.state import agree_set
from conftest import make_state
from oracles import oracle_front, oracle_near_dominations


class TestDominates:
    def test_strict_superset(self):
        state = make_state({"A": {"1", "2", "3"}, "B": {"1", "2"}})
        assert dominates(state, "A", "B")
        assert not dominates(state, "B", "A")

    def test_equal_sets_do_not_dominate(self):
        state = make_state({"A": {"1", "2"}, "B": {"1", "2"}})
        assert not dominates(state, "A", "B")
        assert not dominates(state, "B", "A")

    def test_incomparable(self):
        state = make_state({"A": {"1", "2"}, "B": {"1", "3"}})
        assert not dominates(state, "A", "B")

    def test_unknown_proposal(self):
        state = make_state({"A": {"1"}})
        with pytest.raises(NotFound):
            dominates(state, "A", "ghost")


class TestParetoFront:
    def test_worked_example(self):
        voters = {"A": {"1", "2", "3"}, "B": {"1", "2"}, "C": {"3", "4"}}
        state = make_state(voters)
        assert pareto_front(state) == oracle_front(voters) == {"A", "C"}

    def test_single_proposal(self):
        state = make_state({"A": set()})
        assert pareto_front(state) == {"A"}

    def test_identical_voter_sets_all_survive(self):
        voters = {"A": {"1", "2"}, "B": {"1", "2"}, "C": {"1", "2"}}
        assert pareto_front(make_state(voters)) == {"A", "B", "C"}

    def test_no_votes_nothing_dominated(self):
        voters = {"A": set(), "B": set(), "C": set()}
        assert pareto_front(make_state(voters)) == {"A", "B", "C"}

    def test_unvoted_proposal_falls_to_any_voted_one(self):
        voters = {"A": {"1"}, "B": set()}
        assert pareto_front(make_state(voters)) == {"A"}

    def test_phase_guard(self):
        state = make_state({"A": {"1"}}, evaluation=False)
        with pytest.raises(PhaseError):
            pareto_front(state)
        assert pareto_front(state, force=True) == {"A"}

    def test_front_members_never_dominated(self):
        rng = random.Random(11)
        for _ in range(50):
            voters = {
                f"P{i}": {str(v) for v in range(8) if rng.random() < 0.5}
                for i in range(rng.randint(1, 6))
            }
            state = make_state(voters)
            front = pareto_front(state)
            assert front, "front is never empty while proposals exist"
            for member in front:
                assert not any(
                    dominates(state, other, member) for other in voters if other != member
                )


class TestNearDominations:
    def test_worked_example(self):
        voters = {"A": {"1", "2", "3", "4"}, "B": {"1", "2", "5"}}
        result = near_dominations(make_state(voters), 1)
        assert [(nd.dominator, nd.dominated, set(nd.blockers)) for nd in result] == [
            ("A", "B", {"5"})
        ]

    def test_true_domination_excluded(self):
        voters = {"A": {"1", "2", "3"}, "B": {"1", "2"}}
        assert near_dominations(make_state(voters), 1) == []

    def test_no_exclusive_voter_excluded(self):
        voters = {"A": {"1", "2"}, "B": {"1", "2", "5"}}
        assert near_dominations(make_state(voters), 1) == []

    def test_blocker_cap(self):
        voters = {"A": {"1", "2", "3"}, "B": {"1", "4", "5"}}
        assert near_dominations(make_state(voters), 1) == []
        result = near_dominations(make_state(voters), 2)
        assert {(nd.dominator, nd.dominated) for nd in result} == {("A", "B"), ("B", "A")}

    def test_ordering_contract(self):
        voters = {
            "A": {"1", "2", "3", "4"},  # strong dominator, 1 blocker vs D
            "B": {"1", "2"},            # weaker dominator, 1 blocker vs C
            "C": {"1", "2", "9"},
            "D": {"1", "2", "3", "8"},
        }
        result = near_dominations(make_state(voters), 2)
        keys = [
            (len(nd.blockers), -len(agree_set(make_state(voters), nd.dominator)))
            for nd in result
        ]
        assert keys == sorted(keys)
        # ties inside equal keys fall back to id order
        for earlier, later in zip(result, result[1:]):
            ke = (len(earlier.blockers), -len(agree_set(make_state(voters), earlier.dominator)))
            kl = (len(later.blockers), -len(agree_set(make_state(voters), later.dominator)))
            if ke == kl:
                assert (earlier.dominator, earlier.dominated) < (
                    later.dominator,
                    later.dominated,
                )

    def test_soundness_conditions_hold(self):
        rng = random.Random(23)
        for _ in range(60):
            voters = {
                f"P{i}": {str(v) for v in range(10) if rng.random() < 0.4}
                for i in range(rng.randint(2, 7))
            }
            state = make_state(voters)
            for nd in near_dominations(state, 2):
                va = agree_set(state, nd.dominator)
                vb = agree_set(state, nd.dominated)
                assert nd.blockers == frozenset(vb - va)
                assert 1 <= len(nd.blockers) <= 2
                assert va - vb


class TestRewriteGainCheck:
    def test_gain_achieved(self):
        voters = {
            "A": {"1", "2", "3"},
            "B": {"1", "2", "5"},
            "A2": {"1", "2", "3", "5"},
        }
        state = make_state(voters)
        assert rewrite_gain_check(state, "A2", "A", "B")
        assert dominates(state, "A2", "A")
        assert dominates(state, "A2", "B")
        assert pareto_front(state) == {"A2"}

    def test_lost_supporter_fails(self):
        voters = {"A": {"1", "2", "3"}, "B": {"1", "2", "5"}, "A2": {"1", "2", "5"}}
        assert not rewrite_gain_check(make_state(voters), "A2", "A", "B")

    def test_extra_supporters_still_pass(self):
        voters = {
            "A": {"1", "2", "3"},
            "B": {"1", "2", "5"},
            "A2": {"1", "2", "3", "5", "9"},
        }
        assert rewrite_gain_check(make_state(voters), "A2", "A", "B")


class TestAdvanceGeneration:
    def _engine_with_votes(self):
        engine = Deliberation("adv", roster=["1", "2", "3", "4"])
        a = engine.submit_proposal("author-a", "proposal a").id
        b = engine.submit_proposal("author-b", "proposal b").id
        c = engine.submit_proposal("author-c", "proposal c").id
        engine.begin_evaluation()
        for voter in ("1", "2", "3"):
            engine.submit_appraisal(voter, a, 1.0, 1)
        for voter in ("1", "2"):
            engine.submit_appraisal(voter, b, 1.0, 1)
        for voter in ("3", "4"):
            engine.submit_appraisal(voter, c, 1.0, 1)
        return engine, a, b, c

    def test_front_carried_forward(self):
        engine, a, b, c = self._engine_with_votes()
        report = engine.advance_generation()
        assert set(report.front) == {a, c}
        assert engine.state.generation == 1
        assert engine.state.current_members() == sorted([a, c])
        assert engine.state.phase.value == "proposal"

    def test_no_votes_carries_everything(self):
        engine = Deliberation("adv2")
        ids = [engine.submit_proposal(f"auth{i}", f"text {i}").id for i in range(3)]
        engine.begin_evaluation()
        engine.advance_generation()
        assert engine.state.current_members() == sorted(ids)

    def test_double_advance_is_phase_error(self):
        engine, *_ = self._engine_with_votes()
        engine.advance_generation()
        with pytest.raises(PhaseError):
            engine.advance_generation()

    def test_begin_evaluation_guard(self):
        engine, *_ = self._engine_with_votes()
        with pytest.raises(PhaseError):
            engine.begin_evaluation()


@st.composite
def random_instance(draw):
    n = draw(st.integers(min_value=1, max_value=8))
    m = draw(st.integers(min_value=1, max_value=12))
    voters = {}
    for i in range(n):
        voters[f"P{i}"] = {
            str(v) for v in range(m) if draw(st.booleans())
        }
    return voters


@settings(max_examples=150, deadline=None)
@given(instance=random_instance())
def test_front_matches_oracle(instance):
    assert pareto_front(make_state(instance)) == oracle_front(instance)


@settings(max_examples=100, deadline=None)
@given(instance=random_instance(), cap=st.integers(min_value=1, max_value=2))
def test_near_dominations_match_oracle(instance, cap):
    result = near_dominations(make_state(instance), cap)
    as_set = {(nd.dominator, nd.dominated, nd.blockers) for nd in result}
    assert as_set == oracle_near_dominations(instance, cap)
    assert len(as_set) == len(result), "no duplicates"


def test_report_independent_of_insertion_order():
    voters = {"A": {"1", "2", "3"}, "B": {"1", "2"}, "C": {"4"}}
    forward = make_state(voters)
    # same votes, recorded in a different order
    state = make_state({k: set() for k in voters})
    from delib.model import Event, EventKind

    seq = state.last_seq
    for pid, voter in [("C", "4"), ("B", "2"), ("A", "3"), ("A", "1"), ("B", "1"), ("A", "2")]:
        seq += 1
        state.apply(
            Event(
                seq=seq,
                timestamp="",
                kind=EventKind.APPRAISAL_RECORDED,
                payload={
                    "participant": voter,
                    "proposal": pid,
                    "understanding": 1.0,
                    "agreement": 1,
                    "voluntary": True,
                    "auto": False,
                },
            )
        )
    assert dominance_report(forward).to_doc() == dominance_report(state).to_doc()
