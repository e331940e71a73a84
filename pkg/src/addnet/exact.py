"""Exact inference: brute-force enumeration and clique-tree propagation.

Enumeration builds the full joint as a product of (effective) CPTs and is
the oracle for everything else. Clique-tree propagation uses Hugin-style
collect/distribute passes over a junction tree built by graphops.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ImpossibleEvidenceError, SizeLimitError, UnknownVariableError
from .graphops import JunctionTree, compile_network, cpt_factor, expand_to
from .model import Evidence, Network, as_evidence, effective_cpt

DEFAULT_ENUM_CAP = 2**22


def enumeration_cap() -> int:
    value = os.environ.get("ADDNET_ENUM_CAP")
    return int(value) if value else DEFAULT_ENUM_CAP


def marginalize(values: np.ndarray, axes: Sequence[str], keep: Sequence[str]) -> np.ndarray:
    """Sum out every axis not in ``keep``; result axes follow ``keep`` order."""
    axes = list(axes)
    drop = tuple(i for i, a in enumerate(axes) if a not in keep)
    summed = values.sum(axis=drop) if drop else values
    remaining = [a for a in axes if a in keep]
    return np.transpose(summed, [remaining.index(k) for k in keep]) if keep else summed


@dataclass
class JointTable:
    variables: tuple[str, ...]
    values: np.ndarray

    def probability(self, assignment: dict[str, int]) -> float:
        return float(self.values[tuple(assignment[v] for v in self.variables)])


@dataclass
class QueryResult:
    variable: str
    states: tuple[str, ...]
    probabilities: np.ndarray
    evidence_likelihood: float

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.states, self.probabilities.tolist()))


def _check_cap(network: Network, cap: int | None) -> None:
    cap = enumeration_cap() if cap is None else cap
    size = math.prod(network.cardinalities.values())
    if size > cap:
        raise SizeLimitError(f"joint has {size} entries, enumeration cap is {cap}")


def enumerate_joint(network: Network, cap: int | None = None) -> JointTable:
    """Full joint distribution: product of every node's conditional table."""
    _check_cap(network, cap)
    names = network.names
    cards = network.cardinalities
    joint = np.ones([cards[n] for n in names])
    for node in names:
        values, axes = cpt_factor(effective_cpt(network, node), cards)
        joint = joint * expand_to(values, axes, names)
    return JointTable(names, joint)


def evidence_mask(network: Network, evidence, variables: Sequence[str]) -> np.ndarray:
    """0/1 array over ``variables`` keeping instantiations consistent with evidence."""
    idx = network.evidence_indices(as_evidence(evidence))
    cards = network.cardinalities
    mask = np.ones([cards[v] for v in variables])
    for name, state in idx.items():
        if name not in variables:
            continue
        ind = np.zeros(cards[name])
        ind[state] = 1.0
        mask = mask * expand_to(ind, (name,), variables)
    return mask


def query_by_enumeration(
    network: Network, query: str, evidence=None, joint: JointTable | None = None
) -> QueryResult:
    """Pr[query | evidence] by summing consistent joint entries."""
    var = network.variable(query)
    evidence = as_evidence(evidence)
    if joint is None:
        joint = enumerate_joint(network)
    consistent = joint.values * evidence_mask(network, evidence, joint.variables)
    mass = float(consistent.sum())
    if mass <= 0.0:
        raise ImpossibleEvidenceError(f"evidence {dict(evidence.assignments)} has probability 0")
    dist = marginalize(consistent, joint.variables, (query,)) / mass
    return QueryResult(query, var.states, dist, mass)


@dataclass
class CalibratedTree:
    tree: JunctionTree
    evidence: Evidence
    evidence_likelihood: float
    root: int


def _root(tree: JunctionTree) -> int:
    smallest = min(tree.cardinalities)
    return tree.containing(smallest)[0]


def _traversal(tree: JunctionTree, root: int) -> list[tuple[int, int, int]]:
    """(parent, child, edge) triples in pre-order from ``root``."""
    out, seen, stack = [], {root}, [root]
    while stack:
        i = stack.pop()
        for j, e in reversed(tree.neighbors(i)):
            if j not in seen:
                seen.add(j)
                out.append((i, j, e))
                stack.append(j)
    return out


def _divide(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    out = np.zeros_like(num)
    np.divide(num, den, out=out, where=den != 0)
    return out


def _absorb(pots, seps, tree: JunctionTree, src: int, dst: int, edge: int) -> None:
    sep_axes = tree.separators[edge]
    message = marginalize(pots[src], tree.cliques[src], sep_axes)
    ratio = _divide(message, seps[edge])
    pots[dst] = pots[dst] * expand_to(ratio, sep_axes, tree.cliques[dst])
    seps[edge] = message


def ls_calibrate(network: Network, evidence=None, tree: JunctionTree | None = None) -> CalibratedTree:
    """Enter evidence and run collect + distribute message passing.

    ``tree`` may be a precompiled junction tree for ``network`` (its
    potentials are not modified). Clique tables of the result are normalized
    posteriors; the mass removed by normalization is the evidence likelihood.
    """
    evidence = as_evidence(evidence)
    idx = network.evidence_indices(evidence)
    if tree is None:
        tree = compile_network(network)
    pots = [p.copy() for p in tree.potentials]
    cards = tree.cardinalities
    for name, state in idx.items():
        home = tree.containing(name)[0]
        ind = np.zeros(cards[name])
        ind[state] = 1.0
        pots[home] = pots[home] * expand_to(ind, (name,), tree.cliques[home])
    seps = [np.ones([cards[v] for v in s]) for s in tree.separators]

    root = _root(tree)
    order = _traversal(tree, root)
    for parent, child, edge in reversed(order):
        _absorb(pots, seps, tree, child, parent, edge)
    mass = float(pots[root].sum())
    if mass <= 0.0:
        raise ImpossibleEvidenceError(f"evidence {dict(evidence.assignments)} has probability 0")
    for parent, child, edge in order:
        _absorb(pots, seps, tree, parent, child, edge)

    calibrated = JunctionTree(
        cliques=tree.cliques,
        edges=tree.edges,
        separators=tree.separators,
        potentials=[p / mass for p in pots],
        elimination_order=tree.elimination_order,
        cardinalities=tree.cardinalities,
        assignment=tree.assignment,
    )
    return CalibratedTree(calibrated, evidence, mass, root)


def ls_marginal(calibrated: CalibratedTree, variable: str, clique: int | None = None) -> np.ndarray:
    """Posterior of ``variable`` from the smallest clique holding it (or ``clique``)."""
    tree = calibrated.tree
    holders = tree.containing(variable)
    if not holders:
        raise UnknownVariableError(f"unknown variable {variable!r}")
    if clique is None:
        clique = min(holders, key=lambda i: (len(tree.cliques[i]), i))
    elif clique not in holders:
        raise UnknownVariableError(f"clique {clique} does not contain {variable!r}")
    return marginalize(tree.potentials[clique], tree.cliques[clique], (variable,))


def ls_query(network: Network, query: str, evidence=None, tree: JunctionTree | None = None) -> QueryResult:
    var = network.variable(query)
    cal = ls_calibrate(network, evidence, tree)
    return QueryResult(query, var.states, ls_marginal(cal, query), cal.evidence_likelihood)
