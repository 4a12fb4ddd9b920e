"""Agreement graph over proposals, threshold clustering, and the digest.

Pair weights are the Jaccard overlap of agree-sets. Clusters are the
connected components that survive deleting every edge below the threshold.
The digest takes the top-ranked proposals of every cluster, however small,
so minority positions stay visible.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .errors import Invalid, SelfEdge
from .model import ProposalId
from .state import DeliberationState, agree_set


def jaccard(a: set, b: set) -> float:
    """|a ∩ b| / |a ∪ b|, with two empty sets giving 0."""
    if not a and not b:
        return 0.0
    union = len(a | b)
    return len(a & b) / union


@dataclass(frozen=True)
class AgreementGraph:
    """Complete weighted graph over one generation's proposals."""

    nodes: tuple[ProposalId, ...]
    weights: dict[tuple[ProposalId, ProposalId], float] = field(hash=False)

    def weight(self, a: ProposalId, b: ProposalId) -> float:
        if a == b:
            raise SelfEdge(f"no self edge for {a!r}")
        key = (a, b) if a < b else (b, a)
        return self.weights[key]


@dataclass(frozen=True)
class Clustering:
    generation: int
    threshold: float
    # label -> members; the label is the smallest member id
    clusters: dict[str, tuple[ProposalId, ...]] = field(hash=False)
    rankings: dict[str, tuple[ProposalId, ...]] = field(hash=False)

    def sizes(self) -> list[int]:
        return [len(m) for m in self.clusters.values()]

    def cluster_of(self, proposal_id: ProposalId) -> str:
        for label, members in self.clusters.items():
            if proposal_id in members:
                return label
        raise Invalid(f"{proposal_id!r} is not in any cluster")

    def to_doc(self) -> dict:
        return {
            "generation": self.generation,
            "threshold": self.threshold,
            "clusters": {
                label: list(self.rankings[label]) for label in sorted(self.clusters)
            },
        }


def jaccard_weight(state: DeliberationState, a: ProposalId, b: ProposalId) -> float:
    """Agreement overlap between two distinct proposals."""
    if a == b:
        raise SelfEdge(f"no self edge for {a!r}")
    return jaccard(agree_set(state, a), agree_set(state, b))


def build_graph(state: DeliberationState) -> AgreementGraph:
    """All n(n-1)/2 pair weights for the current generation."""
    nodes = tuple(sorted(state.current_members()))
    voters = {p: state.agree_index.get(p, set()) for p in nodes}
    weights: dict[tuple[ProposalId, ProposalId], float] = {}
    for i, a in enumerate(nodes):
        for b in nodes[i + 1 :]:
            weights[(a, b)] = jaccard(voters[a], voters[b])
    return AgreementGraph(nodes=nodes, weights=weights)


def connected_components(
    nodes: tuple[ProposalId, ...],
    weights: dict[tuple[ProposalId, ProposalId], float],
    threshold: float,
) -> dict[str, tuple[ProposalId, ...]]:
    """Components of the subgraph keeping edges with weight >= threshold."""
    parent = {n: n for n in nodes}

    def find(n: str) -> str:
        while parent[n] != n:
            parent[n] = parent[parent[n]]
            n = parent[n]
        return n

    for (a, b), w in weights.items():
        if w >= threshold:
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)

    groups: dict[str, list[ProposalId]] = {}
    for n in nodes:
        groups.setdefault(find(n), []).append(n)
    return {
        min(members): tuple(sorted(members)) for members in groups.values()
    }


def threshold_clusters(graph: AgreementGraph, threshold: float) -> dict[str, tuple[ProposalId, ...]]:
    if not 0 <= threshold:  # thresholds above 1 are allowed: they isolate every node
        raise Invalid("threshold must be >= 0")
    return connected_components(graph.nodes, graph.weights, threshold)


def rank_within_cluster(
    state: DeliberationState, cluster: tuple[ProposalId, ...] | set[ProposalId]
) -> tuple[ProposalId, ...]:
    """Cluster members ordered by clarity, then appraisal count, then id."""
    from .metrics import proposal_metrics  # local import to avoid a cycle

    def sort_key(pid: ProposalId):
        m = proposal_metrics(state, pid)
        clarity = m.clarity if m.clarity is not None else -1.0
        return (-clarity, -m.appraisal_count, pid)

    return tuple(sorted(cluster, key=sort_key))


def cluster_report(
    state: DeliberationState, threshold: float | None = None
) -> Clustering:
    cfg = state.config.clustering
    x = cfg.edge_threshold if threshold is None else threshold
    graph = build_graph(state)
    clusters = threshold_clusters(graph, x)
    rankings = {
        label: rank_within_cluster(state, members)
        for label, members in clusters.items()
    }
    return Clustering(
        generation=state.generation, threshold=x, clusters=clusters, rankings=rankings
    )


def digest(
    state: DeliberationState,
    top_k: int | None = None,
    threshold: float | None = None,
) -> list[tuple[str, tuple[ProposalId, ...]]]:
    """Top-ranked proposals from every cluster, largest clusters first."""
    cfg = state.config.clustering
    k = cfg.digest_size if top_k is None else top_k
    if k < 1:
        raise Invalid("top_k must be >= 1")
    clustering = cluster_report(state, threshold)
    ordered = sorted(
        clustering.clusters, key=lambda label: (-len(clustering.clusters[label]), label)
    )
    return [(label, clustering.rankings[label][:k]) for label in ordered]


def co_appraiser_count(state: DeliberationState, a: ProposalId, b: ProposalId) -> int:
    appraisers_a = state.appraisals_by_proposal.get(a, {})
    appraisers_b = state.appraisals_by_proposal.get(b, {})
    if len(appraisers_a) > len(appraisers_b):
        appraisers_a, appraisers_b = appraisers_b, appraisers_a
    return sum(1 for p in appraisers_a if p in appraisers_b)


def uncertain_pairs(
    state: DeliberationState, min_co_appraisers: int | None = None
) -> list[tuple[ProposalId, ProposalId]]:
    """Pairs without enough shared appraisers to trust their edge weight."""
    floor = (
        state.config.clustering.min_co_appraisers
        if min_co_appraisers is None
        else min_co_appraisers
    )
    nodes = sorted(state.current_members())
    flagged: list[tuple[int, ProposalId, ProposalId]] = []
    for i, a in enumerate(nodes):
        for b in nodes[i + 1 :]:
            shared = co_appraiser_count(state, a, b)
            if shared < floor:
                flagged.append((shared, a, b))
    flagged.sort()
    return [(a, b) for _, a, b in flagged]
