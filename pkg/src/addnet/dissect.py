"""Inference by dissecting additive nodes.

An additive node with k terms splits a network into k subnetworks, one per
term, each keeping only that term's parent arcs. The joint of the additive
network is the weight-mixture of the subnetwork joints, so queries can be
answered on the (sparser) subnetworks and recombined.

The planner dissects greedily and only while doing so shrinks the largest
clique table.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import ImpossibleEvidenceError, NotAdditiveError, ShapeError
from .exact import QueryResult, ls_calibrate, ls_marginal
from .graphops import JunctionTree, clique_inventory, compile_network, table_size
from .model import AdditiveCpt, FullCpt, Network, as_evidence

log = logging.getLogger(__name__)

MODE_TOL = 1e-9


def dissect_at(network: Network, node: str, term_index: int) -> Network:
    """Replace ``node``'s additive table with one of its terms."""
    cpt = network.cpts[network.variable(node).name]
    if not isinstance(cpt, AdditiveCpt):
        raise NotAdditiveError(f"{node!r} does not have an additive table")
    if len(cpt.terms) < 2:
        raise NotAdditiveError(f"{node!r} has a single term; nothing to dissect")
    if not 0 <= term_index < len(cpt.terms):
        raise ShapeError(f"{node!r} has {len(cpt.terms)} terms, no index {term_index}")
    table = cpt.terms[term_index].table
    return network.replace(node, FullCpt(node, table.parents, table.rows))


def max_table_size(network: Network) -> int:
    cards = network.cardinalities
    return max(table_size(c, cards) for c in clique_inventory(network))


@dataclass
class PlanStep:
    path: tuple[tuple[str, int], ...]
    node: str
    subsets: list[tuple[str, ...]]
    weights: list[float]
    before: int
    after: int


@dataclass
class PlanLeaf:
    network: Network
    weight: float
    path: tuple[tuple[str, int], ...]
    tree: JunctionTree
    max_table_size: int


@dataclass
class DissectionPlan:
    root: Network
    root_max_table_size: int
    steps: list[PlanStep] = field(default_factory=list)
    leaves: list[PlanLeaf] = field(default_factory=list)

    @property
    def max_table_size(self) -> int:
        return max(leaf.max_table_size for leaf in self.leaves)

    def report(self) -> dict:
        return {
            "max_table_size_before": self.root_max_table_size,
            "max_table_size_after": self.max_table_size,
            "steps": [
                {
                    "path": [f"{n}[{i}]" for n, i in s.path],
                    "node": s.node,
                    "subsets": [list(x) for x in s.subsets],
                    "weights": s.weights,
                    "before": s.before,
                    "after": s.after,
                }
                for s in self.steps
            ],
            "leaves": [
                {
                    "path": [f"{n}[{i}]" for n, i in leaf.path],
                    "weight": leaf.weight,
                    "max_table_size": leaf.max_table_size,
                    "cliques": [
                        {"members": list(c), "table_size": table_size(c, leaf.tree.cardinalities)}
                        for c in leaf.tree.cliques
                    ],
                }
                for leaf in self.leaves
            ],
        }


def _candidates(network: Network, cliques, largest: int) -> list[str]:
    cards = network.cardinalities
    found = set()
    for c in cliques:
        if table_size(c, cards) != largest:
            continue
        for n in c:
            cpt = network.cpts[n]
            if isinstance(cpt, AdditiveCpt) and len(cpt.terms) >= 2:
                found.add(n)
    return sorted(found)


def _expand(plan: DissectionPlan, network: Network, weight: float, path) -> None:
    cards = network.cardinalities
    cliques = clique_inventory(network)
    largest = max(table_size(c, cards) for c in cliques)
    best = None
    for node in _candidates(network, cliques, largest):
        n_terms = len(network.cpts[node].terms)
        after = max(max_table_size(dissect_at(network, node, j)) for j in range(n_terms))
        if best is None or after < best[0]:
            best = (after, node)
    if best is None or best[0] >= largest:
        tree = compile_network(network)
        plan.leaves.append(PlanLeaf(network, weight, tuple(path), tree, tree.max_table_size))
        return
    after, node = best
    cpt = network.cpts[node]
    log.debug("dissecting %s: max table %d -> %d", node, largest, after)
    plan.steps.append(
        PlanStep(tuple(path), node, cpt.subsets, cpt.weights.tolist(), largest, after)
    )
    for j, term in enumerate(cpt.terms):
        _expand(plan, dissect_at(network, node, j), weight * term.weight, path + [(node, j)])


def build_plan(network: Network) -> DissectionPlan:
    """Greedy dissection plan.

    In each (sub)network, consider additive nodes in the largest cliques and
    pick the one whose dissection yields the smallest worst-case table over
    the resulting subnetworks (ties by name). Dissect only when that strictly
    shrinks the largest table, then recurse into every subnetwork.
    """
    plan = DissectionPlan(network, max_table_size(network))
    _expand(plan, network, 1.0, [])
    return plan


@dataclass
class AbnmResult(QueryResult):
    mode: str = "exact"
    exact: np.ndarray | None = None
    naive: np.ndarray | None = None
    leaf_weights: list[float] = field(default_factory=list)
    leaf_likelihoods: list[float] = field(default_factory=list)
    leaf_distributions: list[np.ndarray | None] = field(default_factory=list)

    @property
    def modes_differ(self) -> bool:
        return bool(np.max(np.abs(self.exact - self.naive)) > MODE_TOL)


def abnm_query(plan: DissectionPlan, query: str, evidence=None, mode: str = "exact") -> AbnmResult:
    """Combine per-leaf clique-tree answers into Pr[query | evidence].

    ``exact`` weights each leaf conditional by weight x leaf evidence
    likelihood, which is the conditional of the mixture joint. ``naive``
    weights by leaf weight alone; the two agree when every leaf assigns the
    evidence the same likelihood (e.g. no evidence). Leaves that rule the
    evidence out are dropped from the naive average.
    """
    if mode not in ("exact", "naive"):
        raise ValueError(f"mode must be 'exact' or 'naive', got {mode!r}")
    root = plan.root
    var = root.variable(query)
    evidence = as_evidence(evidence).validate(root)
    weights, likes, dists = [], [], []
    for leaf in plan.leaves:
        weights.append(leaf.weight)
        try:
            cal = ls_calibrate(leaf.network, evidence, leaf.tree)
        except ImpossibleEvidenceError:
            likes.append(0.0)
            dists.append(None)
            continue
        likes.append(cal.evidence_likelihood)
        dists.append(ls_marginal(cal, query))

    total = sum(w * l for w, l in zip(weights, likes))
    if total <= 0.0:
        raise ImpossibleEvidenceError(f"evidence {dict(evidence.assignments)} has probability 0")
    exact = np.zeros(var.cardinality)
    naive = np.zeros(var.cardinality)
    naive_mass = 0.0
    for w, l, d in zip(weights, likes, dists):
        if d is None:
            continue
        exact += w * l * d
        naive += w * d
        naive_mass += w
    exact /= total
    naive /= naive_mass
    result = AbnmResult(
        query,
        var.states,
        exact if mode == "exact" else naive,
        total,
        mode=mode,
        exact=exact,
        naive=naive,
        leaf_weights=weights,
        leaf_likelihoods=likes,
        leaf_distributions=dists,
    )
    if result.modes_differ:
        log.info("exact and naive combinations differ for %s", query)
    return result
