"""Choosing additive partitions and checking their qualitative signature.

``prescribe_partition`` turns an intercausal dependence graph over a node's
predictors into term subsets. The synergy helpers evaluate 2x2 sub-tables of
a binary CPT; an additive table always has zero additive synergy between
predictors that never share a term, and nonpositive product synergy when both
predictors push the child the same way.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations, product
from typing import Mapping, Sequence

import numpy as np

from .errors import NonBinaryError, ShapeError, UnknownVariableError
from .graphops import UndirectedGraph, max_clique
from .model import FullCpt, Network


@dataclass
class Partition:
    subsets: list[tuple[str, ...]]
    members: list[str]
    alternatives: list[tuple[str, ...]] = field(default_factory=list)

    def covers(self, vertices) -> bool:
        return set().union(*map(set, self.subsets)) == set(vertices)


def _equal_size_cliques(graph: UndirectedGraph, size: int) -> list[tuple[str, ...]]:
    names = sorted(graph.vertices)
    return [c for c in combinations(names, size) if graph.is_clique(c)]


def prescribe_partition(icgraph: UndirectedGraph, report_alternatives: bool = True) -> Partition:
    """Term subsets for a node whose predictors are ``icgraph``'s vertices.

    A complete graph gives one singleton subset per predictor. Otherwise take
    a maximum clique X_1..X_k and use S_i = {X_i} plus every predictor not
    adjacent to X_i.
    """
    vertices = list(icgraph.vertices)
    if not vertices:
        raise ShapeError("intercausal graph has no vertices")
    if icgraph.is_clique(vertices):
        return Partition([(v,) for v in vertices], list(vertices))
    clique = max_clique(icgraph)
    subsets = []
    for x in clique:
        nb = icgraph.neighbors(x)
        subsets.append(tuple(v for v in vertices if v == x or v not in nb))
    alternatives = []
    if report_alternatives and len(vertices) <= 20:
        alternatives = [c for c in _equal_size_cliques(icgraph, len(clique)) if c != clique]
    return Partition(subsets, list(clique), alternatives)


def additive_skeleton(node: str, parents: Sequence[str], partition: Partition, network: Network | None = None) -> dict:
    """Additive ``cpt`` entry with uniform weights and uniform rows, ready to edit."""
    k = len(partition.subsets)
    terms = []
    for subset in partition.subsets:
        given = [p for p in parents if p in subset]
        if network is not None:
            d = network.variable(node).cardinality
            n_rows = int(np.prod([network.variable(p).cardinality for p in given])) if given else 1
            rows = [[1.0 / d] * d for _ in range(n_rows)]
        else:
            rows = []
        terms.append({"weight": 1.0 / k, "given": given, "rows": rows})
    return {"var": node, "parents": list(parents), "cpt": {"type": "additive", "terms": terms}}


# ---------------------------------------------------------------------------
# synergy diagnostics


class _BinaryView:
    """Indexes a binary-child CPT by parent state positions."""

    def __init__(self, cpt: FullCpt, cards: Mapping[str, int], positive: Mapping[str, int]):
        if cards[cpt.child] != 2:
            raise NonBinaryError(f"{cpt.child!r} is not binary")
        self.cpt = cpt
        self.table = cpt.rows.reshape([cards[p] for p in cpt.parents] + [2])
        self.cards = cards
        self.pos = positive

    def high(self, name: str) -> int:
        return self.pos.get(name, self.cards[name] - 1)

    def low(self, name: str) -> int:
        return 1 - self.high(name)

    def require_binary(self, name: str) -> None:
        if name not in self.cpt.parents:
            raise UnknownVariableError(f"{name!r} is not a parent of {self.cpt.child!r}")
        if self.cards[name] != 2:
            raise NonBinaryError(f"predictor {name!r} is not binary")

    def p(self, setting: Mapping[str, int]) -> float:
        idx = tuple(setting[q] for q in self.cpt.parents)
        return float(self.table[idx + (self.high(self.cpt.child),)])


def _cards(cpt: FullCpt, network: Network | None, cards: Mapping[str, int] | None) -> dict:
    if network is not None:
        return network.cardinalities
    if cards is not None:
        return dict(cards)
    # binary default: every variable in the table is assumed two-state
    out = {p: 2 for p in cpt.parents}
    out[cpt.child] = cpt.rows.shape[1]
    return out


def _context(view: _BinaryView, context, free: Sequence[str]) -> dict[str, int]:
    """Resolve ``context`` (state labels or indices) for parents outside ``free``."""
    ctx = {}
    context = dict(context or {})
    for q in view.cpt.parents:
        if q in free:
            continue
        if q not in context:
            raise ShapeError(f"context must fix parent {q!r}")
        ctx[q] = int(context[q])
    return ctx


def _contexts(view: _BinaryView, free: Sequence[str]):
    others = [q for q in view.cpt.parents if q not in free]
    for combo in product(*(range(view.cards[q]) for q in others)):
        yield dict(zip(others, combo))


def positive_influence(
    cpt: FullCpt,
    predictor: str,
    context: Mapping[str, int] | None = None,
    *,
    network: Network | None = None,
    cards: Mapping[str, int] | None = None,
    positive: Mapping[str, int] | None = None,
) -> bool:
    """P(y+ | x+, context) >= P(y+ | x-, context).

    ``context`` maps every other parent to a state index. Positive states
    default to each variable's last state; override via ``positive``.
    """
    view = _BinaryView(cpt, _cards(cpt, network, cards), positive or {})
    view.require_binary(predictor)
    ctx = _context(view, context, (predictor,))
    hi = view.p({**ctx, predictor: view.high(predictor)})
    lo = view.p({**ctx, predictor: view.low(predictor)})
    return hi >= lo


def positive_influence_all(cpt: FullCpt, predictor: str, **kw) -> bool:
    view = _BinaryView(cpt, _cards(cpt, kw.get("network"), kw.get("cards")), kw.get("positive") or {})
    view.require_binary(predictor)
    return all(
        positive_influence(cpt, predictor, ctx, **kw) for ctx in _contexts(view, (predictor,))
    )


def _corners(cpt, pair, context, network, cards, positive):
    a, b = pair
    if a == b:
        raise ShapeError("synergy needs two distinct predictors")
    view = _BinaryView(cpt, _cards(cpt, network, cards), positive or {})
    view.require_binary(a)
    view.require_binary(b)
    ctx = _context(view, context, pair)
    ah, al, bh, bl = view.high(a), view.low(a), view.high(b), view.low(b)
    return (
        view.p({**ctx, a: ah, b: bh}),
        view.p({**ctx, a: al, b: bl}),
        view.p({**ctx, a: ah, b: bl}),
        view.p({**ctx, a: al, b: bh}),
    )


def additive_synergy(cpt, pair, context=None, *, network=None, cards=None, positive=None) -> float:
    """P(y+|a+b+) + P(y+|a-b-) - P(y+|a+b-) - P(y+|a-b+) at a fixed context."""
    hh, ll, hl, lh = _corners(cpt, pair, context, network, cards, positive)
    return hh + ll - hl - lh


def product_synergy(cpt, pair, context=None, *, network=None, cards=None, positive=None) -> float:
    """P(y+|a+b+) * P(y+|a-b-) - P(y+|a+b-) * P(y+|a-b+) at a fixed context."""
    hh, ll, hl, lh = _corners(cpt, pair, context, network, cards, positive)
    return hh * ll - hl * lh
