"""Deterministic synthetic-participant simulations.

Agents hold latent opinion vectors; proposals carry latent positions and
an intrinsic clarity. An agent's understanding is its perceived clarity
snapped to the grid, and its agreement scales a latent-space similarity
by the span that understanding allows, so generated appraisals always
respect the triangle constraint.

Scenarios drive the real engine exclusively through the service layer:
submit, advance, pull, appraise, sweep, rewrite, exactly as a client
would. Each run is a pure function of its config and seed, down to the
event log bytes.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Any, Optional

from . import scheduler
from .engine import Deliberation
from .errors import Invalid
from .metrics import writer_skill
from .model import AppraisalConfig, TaskKind
from .pareto import rewrite_gain_check
from .service import DeliberationService
from .state import agree_set

SCENARIOS = ("cluster-recovery", "obscure-gem", "front-shrink")


def round_half_away(x: float) -> int:
    return int(math.floor(x + 0.5)) if x >= 0 else int(math.ceil(x - 0.5))


def nearest_level(value: float, levels: tuple[float, ...]) -> float:
    return min(levels, key=lambda level: (abs(level - value), level))


def cosine(a: tuple[float, ...], b: tuple[float, ...]) -> float:
    dot = sum(x * y for x, y in zip(a, b))
    norm = math.sqrt(sum(x * x for x in a)) * math.sqrt(sum(y * y for y in b))
    return 0.0 if norm == 0 else max(-1.0, min(1.0, dot / norm))


@dataclass(frozen=True)
class BlocSpec:
    size: int
    center: tuple[float, ...]
    spread: float = 0.0


@dataclass(frozen=True)
class PopulationSpec:
    participants: int
    dimensions: int = 1
    blocs: tuple[BlocSpec, ...] = ()
    skill_range: tuple[float, float] = (0.5, 0.95)
    clarity_noise: float = 0.05
    accept_probability: float = 1.0

    def __post_init__(self) -> None:
        if self.dimensions < 1:
            raise Invalid("dimensions must be >= 1")
        if self.blocs and sum(b.size for b in self.blocs) != self.participants:
            raise Invalid("bloc sizes must sum to the participant count")
        for bloc in self.blocs:
            if len(bloc.center) != self.dimensions:
                raise Invalid("bloc centers must match the dimension count")

    @classmethod
    def from_doc(cls, doc: dict[str, Any]) -> "PopulationSpec":
        blocs = tuple(
            BlocSpec(size=b["size"], center=tuple(b["center"]), spread=b.get("spread", 0.0))
            for b in doc.get("blocs", ())
        )
        return cls(
            participants=doc["participants"],
            dimensions=doc.get("dimensions", 1),
            blocs=blocs,
            skill_range=tuple(doc.get("skill", (0.5, 0.95))),
            clarity_noise=doc.get("clarity_noise", 0.05),
            accept_probability=doc.get("accept_probability", 1.0),
        )


@dataclass
class Agent:
    id: str
    bloc: int
    opinion: tuple[float, ...]
    skill: float


@dataclass
class LatentProposal:
    id: str  # filled once the engine assigns it
    author: str
    bloc: int
    position: tuple[float, ...]
    clarity: float
    # per-agent perceived-clarity overrides (planted insiders)
    perceived: dict[str, float] = field(default_factory=dict)
    # per-agent similarity overrides (planted agreement)
    affinity: dict[str, float] = field(default_factory=dict)

    def clarity_for(self, agent: Agent) -> float:
        return self.perceived.get(agent.id, self.clarity)

    def similarity_for(self, agent: Agent) -> float:
        if agent.id in self.affinity:
            return self.affinity[agent.id]
        return cosine(agent.opinion, self.position)


def build_population(spec: PopulationSpec, rng: random.Random) -> list[Agent]:
    agents: list[Agent] = []
    lo, hi = spec.skill_range
    blocs = spec.blocs or (BlocSpec(spec.participants, (1.0,) * spec.dimensions),)
    index = 0
    for bloc_no, bloc in enumerate(blocs):
        for _ in range(bloc.size):
            opinion = tuple(
                c + (rng.gauss(0.0, bloc.spread) if bloc.spread else 0.0)
                for c in bloc.center
            )
            agents.append(
                Agent(
                    id=f"a{index:03d}",
                    bloc=bloc_no,
                    opinion=opinion,
                    skill=rng.uniform(lo, hi),
                )
            )
            index += 1
    return agents


def draw_appraisal(
    clarity: float,
    similarity: float,
    cfg: AppraisalConfig,
    clarity_noise: float,
    rng: random.Random,
) -> tuple[float, Optional[int]]:
    """One synthetic (understanding, agreement) verdict.

    Understanding is perceived clarity plus noise, snapped to the grid;
    below the incomprehensible threshold no agreement is emitted at all.
    """
    perceived = clarity + (rng.gauss(0.0, clarity_noise) if clarity_noise else 0.0)
    u = nearest_level(max(0.0, min(1.0, perceived)), cfg.understanding_levels)
    if u <= cfg.incomprehensible_threshold:
        return u, None
    span = cfg.span(u)
    a = round_half_away(similarity * span)
    return u, max(-span, min(span, a))


def agent_appraise(
    agent: Agent,
    proposal: LatentProposal,
    cfg: AppraisalConfig,
    clarity_noise: float,
    rng: random.Random,
) -> tuple[float, Optional[int]]:
    return draw_appraisal(
        proposal.clarity_for(agent), proposal.similarity_for(agent), cfg, clarity_noise, rng
    )


def purity(
    clusters: dict[str, list[str]], planted: dict[str, int], total: int
) -> float:
    """Max-overlap purity of a clustering against planted bloc labels."""
    if total == 0:
        return 1.0
    hit = 0
    for members in clusters.values():
        by_bloc: dict[int, int] = {}
        for pid in members:
            by_bloc[planted[pid]] = by_bloc.get(planted[pid], 0) + 1
        hit += max(by_bloc.values())
    return hit / total


# ----------------------------------------------------------------------
# the pull loop shared by all scenarios


def run_pull_rounds(
    service: DeliberationService,
    deliberation: str,
    agents: list[Agent],
    proposals: dict[str, LatentProposal],
    cfg: AppraisalConfig,
    clarity_noise: float,
    rng: random.Random,
    *,
    max_rounds: Optional[int] = None,
    completions_target: Optional[int] = None,
) -> dict[str, int]:
    """Round-robin pulls until nobody gets work (or limits are reached).

    Appraisal tasks are performed with the agent model; rewrite and
    approval requests are declined here — scenarios that exercise them
    drive those flows explicitly.
    """
    completions = {agent.id: 0 for agent in agents}
    rounds = 0
    while True:
        idle = True
        rounds += 1
        for agent in agents:
            if completions_target is not None and completions[agent.id] >= completions_target:
                continue
            task = service.handle_next_task(agent.id, deliberation)
            if task is None:
                continue
            idle = False
            kind = TaskKind(task["kind"])
            if kind == TaskKind.APPRAISE_PROPOSAL:
                targets = [task["payload"]["proposal"]]
            elif kind == TaskKind.APPRAISE_PAIR:
                targets = list(task["payload"]["missing"])
            else:
                service.handle_decline_task(agent.id, task["id"])
                continue
            for target in targets:
                u, a = agent_appraise(agent, proposals[target], cfg, clarity_noise, rng)
                service.handle_submit_appraisal(agent.id, target, u, a, task["id"])
            completions[agent.id] += 1
        if idle:
            break
        if max_rounds is not None and rounds >= max_rounds:
            break
        if completions_target is not None and all(
            done >= completions_target for done in completions.values()
        ):
            break
    return completions


# ----------------------------------------------------------------------
# scenarios


def _new_service() -> DeliberationService:
    return DeliberationService()


def run_cluster_recovery(doc: dict[str, Any], seed: int) -> tuple[Deliberation, dict]:
    params = doc.get("params", {})
    population = PopulationSpec.from_doc(doc["population"])
    rng = random.Random(seed)
    agents = build_population(population, rng)
    n_proposals = params.get("proposals", 40)
    agree_within = params.get("agree_within", 0.9)
    agree_across = params.get("agree_across", 0.1)
    proposal_clarity = params.get("proposal_clarity", 0.9)
    threshold = params.get("threshold", 0.4)

    service = _new_service()
    deliberation = doc.get("deliberation", "sim")
    service.create_deliberation(
        deliberation,
        config_overrides={
            "clustering": {"edge_threshold": threshold},
            "scheduler": {"rng_seed": seed},
        },
        roster=tuple(agent.id for agent in agents),
    )
    engine = service.engine(deliberation)
    cfg = engine.state.config.appraisal

    # Alternate authors across blocs so the planted proposal blocs stay balanced.
    by_bloc: dict[int, list[Agent]] = {}
    for agent in agents:
        by_bloc.setdefault(agent.bloc, []).append(agent)
    author_order = [
        agent
        for tier in zip(*by_bloc.values())
        for agent in tier
    ] or agents
    proposals: dict[str, LatentProposal] = {}
    planted: dict[str, int] = {}
    for i in range(n_proposals):
        author = author_order[i % len(author_order)]
        latent = LatentProposal(
            id="",
            author=author.id,
            bloc=author.bloc,
            position=author.opinion,
            clarity=proposal_clarity,
        )
        created = service.handle_submit_proposal(
            author.id, deliberation, f"position statement {i} from bloc {author.bloc}"
        )
        latent.id = created["proposal"]
        proposals[latent.id] = latent
        planted[latent.id] = author.bloc

    # Planted agreement: same-bloc readers lean yes, others lean no.
    for latent in proposals.values():
        for agent in agents:
            p_yes = agree_within if agent.bloc == latent.bloc else agree_across
            latent.affinity[agent.id] = 1.0 if rng.random() < p_yes else -1.0

    service.handle_advance(deliberation)
    run_pull_rounds(
        service, deliberation, agents, proposals, cfg, population.clarity_noise, rng
    )

    clusters_doc = service.handle_get_clusters(deliberation)
    score = purity(clusters_doc["clusters"], planted, n_proposals)
    report = {
        "scenario": "cluster-recovery",
        "seed": seed,
        "purity": score,
        "cluster_sizes": sorted(
            (len(m) for m in clusters_doc["clusters"].values()), reverse=True
        ),
        "bloc_sizes": [b.size for b in population.blocs],
        "proposals": n_proposals,
        "threshold": threshold,
    }
    return engine, report


def run_obscure_gem(doc: dict[str, Any], seed: int) -> tuple[Deliberation, dict]:
    params = doc.get("params", {})
    population = PopulationSpec.from_doc(doc["population"])
    rng = random.Random(seed)
    agents = build_population(population, rng)
    n_proposals = params.get("proposals", 10)
    insider_count = params.get("insiders", 6)
    planted_support = params.get("planted_support", 0.8)
    gem_clarity = params.get("gem_clarity", 0.05)
    insider_clarity = params.get("insider_clarity", 0.95)
    normal_clarity = params.get("normal_clarity", 0.9)
    mainstream_agree = params.get("mainstream_agree", 0.8)

    if insider_count + 1 > len(agents) or n_proposals < 2:
        raise Invalid("obscure-gem needs insiders plus room for normal proposals")

    service = _new_service()
    deliberation = doc.get("deliberation", "sim")
    service.create_deliberation(
        deliberation,
        config_overrides={"scheduler": {"rng_seed": seed}},
        roster=tuple(agent.id for agent in agents),
    )
    engine = service.engine(deliberation)
    cfg = engine.state.config.appraisal

    # The gem's author is one insider; the other insiders keep their
    # defined writing skill through ordinary authored proposals.
    insiders = [agent.id for agent in agents[: insider_count + 1]]
    gem_author, understanders = insiders[0], insiders[1:]
    agreer_count = round_half_away(planted_support * len(understanders))

    proposals: dict[str, LatentProposal] = {}
    gem = LatentProposal(
        id="", author=gem_author, bloc=0, position=(0.0,) * population.dimensions,
        clarity=gem_clarity,
    )
    for i, insider in enumerate(understanders):
        gem.perceived[insider] = insider_clarity
        gem.affinity[insider] = 1.0 if i < agreer_count else -1.0
    created = service.handle_submit_proposal(
        gem_author, deliberation, "a dense but promising idea"
    )
    gem.id = created["proposal"]
    proposals[gem.id] = gem

    authors = understanders + [a.id for a in agents[insider_count + 1 :]]
    for i in range(n_proposals - 1):
        author = authors[i % len(authors)]
        latent = LatentProposal(
            id="", author=author, bloc=0,
            position=(1.0,) * population.dimensions, clarity=normal_clarity,
        )
        for agent in agents:
            latent.affinity[agent.id] = 1.0 if rng.random() < mainstream_agree else -1.0
        created = service.handle_submit_proposal(
            author, deliberation, f"mainstream proposal {i}"
        )
        latent.id = created["proposal"]
        proposals[latent.id] = latent

    service.handle_advance(deliberation)
    run_pull_rounds(
        service, deliberation, agents, proposals, cfg, population.clarity_noise, rng
    )

    targets = scheduler.select_rewrite_targets(engine.state)
    target_ids = [pid for pid, _ in targets]
    rewriter = scheduler.select_rewriter(engine.state, gem.id)
    appraisal = engine.state.appraisals_of(gem.id).get(rewriter) if rewriter else None
    agreeing_understanders = [
        pid
        for pid, a in engine.state.appraisals_of(gem.id).items()
        if a.understanding >= cfg.understood_threshold
        and a.agrees
        and pid not in engine.state.proposals[gem.id].authors
    ]
    issued = service.handle_sweep(deliberation)["issued"]
    report = {
        "scenario": "obscure-gem",
        "seed": seed,
        "gem": gem.id,
        "targets": target_ids,
        "gem_selected": gem.id in target_ids,
        "rewriter": rewriter,
        "rewriter_understands": bool(
            appraisal and appraisal.understanding >= cfg.understood_threshold
        ),
        "rewriter_skill_defined": bool(
            rewriter and writer_skill(engine.state, rewriter).skill is not None
        ),
        "rewriter_agrees": bool(appraisal and appraisal.agrees),
        "any_agreeing_understander": bool(agreeing_understanders),
        "invitations": [
            t["id"] for t in issued if t["kind"] == TaskKind.REWRITE_OBSCURE.value
        ],
    }
    return engine, report


def run_front_shrink(doc: dict[str, Any], seed: int) -> tuple[Deliberation, dict]:
    params = doc.get("params", {})
    population_doc = doc.get("population", {})
    accept_probability = population_doc.get("accept_probability", 1.0)
    voters_a = params.get("voters_a", ["v1", "v2", "v3"])
    voters_b = params.get("voters_b", ["v1", "v2", "v5"])
    generations = params.get("generations", 1)
    rng = random.Random(seed)

    roster = sorted(set(voters_a) | set(voters_b) | {"author-a", "author-b"})
    service = _new_service()
    deliberation = doc.get("deliberation", "sim")
    service.create_deliberation(
        deliberation,
        config_overrides={"scheduler": {"rng_seed": seed}},
        roster=tuple(roster),
    )
    engine = service.engine(deliberation)
    max_agreement = engine.state.config.appraisal.max_agreement

    proposal_a = service.handle_submit_proposal(
        "author-a", deliberation, "proposal A"
    )["proposal"]
    proposal_b = service.handle_submit_proposal(
        "author-b", deliberation, "proposal B"
    )["proposal"]
    service.handle_advance(deliberation)

    for voter in voters_a:
        service.handle_submit_appraisal(voter, proposal_a, 1.0, max_agreement)
    for voter in voters_b:
        service.handle_submit_appraisal(voter, proposal_b, 1.0, max_agreement)
    # Blockers have read the proposal they stand against.
    for voter in set(voters_b) - set(voters_a):
        service.handle_submit_appraisal(voter, proposal_a, 1.0, -1)

    front_sizes = [len(service.handle_get_front(deliberation)["front"])]

    issued = service.handle_sweep(deliberation)["issued"]
    published: list[dict[str, Any]] = []
    for task in issued:
        if task["kind"] != TaskKind.REWRITE_FOR_BLOCKER.value:
            continue
        blocker = task["assignee"]
        if rng.random() >= accept_probability:
            service.handle_decline_task(blocker, task["id"])
            continue
        target = task["payload"]["dominator"]
        draft = service.handle_submit_rewrite(
            blocker, task["id"], f"compromise rewrite of {target} by {blocker}"
        )
        new_id = draft["published_as"]
        for supporter in sorted(agree_set(engine.state, target)):
            if supporter == blocker:
                continue
            if rng.random() < accept_probability:
                service.handle_submit_appraisal(supporter, new_id, 1.0, max_agreement)
        published.append(
            {
                "rewrite": draft["id"],
                "target": target,
                "aimed_at": task["payload"]["dominated"],
                "published_as": new_id,
                "blocker": blocker,
            }
        )

    front_after = service.handle_get_front(deliberation)["front"]
    front_sizes.append(len(front_after))
    gains = [
        {
            "published_as": p["published_as"],
            "target": p["target"],
            "aimed_at": p["aimed_at"],
            "gain": rewrite_gain_check(
                engine.state, p["published_as"], p["target"], p["aimed_at"]
            ),
        }
        for p in published
    ]

    if generations:
        service.handle_advance(deliberation)  # close the evaluation, open the next gen
        front_sizes.append(len(service.handle_get_front(deliberation)["front"]))

    report = {
        "scenario": "front-shrink",
        "seed": seed,
        "proposal_a": proposal_a,
        "proposal_b": proposal_b,
        "published": published,
        "gains": gains,
        "front_sizes": front_sizes,
        "front_after": sorted(front_after),
        "a_in_next_front": proposal_a in front_after,
        "b_in_next_front": proposal_b in front_after,
    }
    return engine, report


_RUNNERS = {
    "cluster-recovery": run_cluster_recovery,
    "obscure-gem": run_obscure_gem,
    "front-shrink": run_front_shrink,
}


def run_experiment(doc: dict[str, Any], seed: Optional[int] = None) -> tuple[Deliberation, dict]:
    """Run one scenario config; returns the live engine and its metrics."""
    scenario = doc.get("scenario")
    if scenario not in _RUNNERS:
        raise Invalid(f"scenario must be one of {', '.join(SCENARIOS)}")
    effective_seed = doc.get("seed", 0) if seed is None else seed
    if "population" not in doc and scenario != "front-shrink":
        raise Invalid("scenario config needs a population section")
    return _RUNNERS[scenario](doc, effective_seed)


def build_analysis(
    engine: Deliberation,
    threshold: Optional[float] = None,
    top_k: Optional[int] = None,
) -> dict[str, Any]:
    """Operator view of an engine: front, clusters, digest, rewrite shortlist."""
    clustering = engine.clusters(threshold)
    return {
        "deliberation": engine.state.id,
        "generation": engine.state.generation,
        "phase": engine.state.phase.value,
        "front": engine.front(),
        "clusters": clustering.to_doc(),
        "digest": [
            {"cluster": label, "proposals": list(top)}
            for label, top in engine.digest(top_k, threshold)
        ],
        "rewrite_shortlist": engine.rewrite_shortlist(),
    }
