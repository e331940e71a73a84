"""Undirected graph machinery behind clique-tree inference.

Moral graph -> min-fill triangulation -> maximal cliques -> junction tree.
Everything here is deterministic: ties are broken by table size and then by
vertex name, so clique inventories are reproducible run to run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    NetworkSyntaxError,
    NonChordalError,
    SizeLimitError,
    TriangulationError,
    UnknownVariableError,
)
from .model import Network, effective_cpt

MAX_CLIQUE_VERTICES = 64


class UndirectedGraph:
    """Simple graph on named vertices. Vertex order is kept as given."""

    def __init__(self, vertices: Iterable[str], edges: Iterable[tuple[str, str]] = ()):
        self._vertices = tuple(dict.fromkeys(vertices))
        self._adj = {v: set() for v in self._vertices}
        for a, b in edges:
            self.add_edge(a, b)

    def add_edge(self, a: str, b: str) -> None:
        if a == b:
            raise ValueError(f"self-loop on {a!r}")
        for v in (a, b):
            if v not in self._adj:
                raise UnknownVariableError(f"edge references undeclared vertex {v!r}")
        self._adj[a].add(b)
        self._adj[b].add(a)

    @property
    def vertices(self) -> tuple[str, ...]:
        return self._vertices

    @property
    def edges(self) -> set[frozenset[str]]:
        return {frozenset((a, b)) for a in self._adj for b in self._adj[a]}

    def neighbors(self, v: str) -> frozenset[str]:
        return frozenset(self._adj[v])

    def has_edge(self, a: str, b: str) -> bool:
        return b in self._adj.get(a, ())

    def is_clique(self, vertices: Iterable[str]) -> bool:
        vs = list(vertices)
        return all(self.has_edge(a, b) for a, b in combinations(vs, 2))

    def copy(self) -> "UndirectedGraph":
        return UndirectedGraph(self._vertices, [tuple(e) for e in self.edges])

    def __len__(self):
        return len(self._vertices)

    def __eq__(self, other):
        if not isinstance(other, UndirectedGraph):
            return NotImplemented
        return set(self._vertices) == set(other._vertices) and self.edges == other.edges

    __hash__ = None

    def __repr__(self):
        return f"UndirectedGraph({len(self._vertices)} vertices, {len(self.edges)} edges)"


def parse_icg(text: str) -> UndirectedGraph:
    """Read an intercausal dependence graph.

    Lines without ``--`` list vertex names (whitespace separated); each other
    line is one edge ``A -- B``. ``#`` starts a comment.
    """
    vertices, edges = [], []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "--" in line:
            parts = [p.strip() for p in line.split("--")]
            if len(parts) != 2 or not all(parts) or any(" " in p for p in parts):
                raise NetworkSyntaxError(f"bad edge {raw.strip()!r}; expected 'A -- B'", lineno, 1)
            edges.append((parts[0], parts[1], lineno))
        else:
            vertices.extend(line.split())
    graph = UndirectedGraph(vertices)
    for a, b, lineno in edges:
        if a == b:
            raise NetworkSyntaxError(f"self-loop on {a!r}", lineno, 1)
        try:
            graph.add_edge(a, b)
        except UnknownVariableError as exc:
            raise NetworkSyntaxError(str(exc), lineno, 1) from None
    return graph


def format_icg(graph: UndirectedGraph) -> str:
    lines = [" ".join(graph.vertices)]
    lines += [f"{a} -- {b}" for a, b in sorted(tuple(sorted(e)) for e in graph.edges)]
    return "\n".join(lines) + "\n"


def moralize(network: Network) -> UndirectedGraph:
    graph = UndirectedGraph(network.names)
    for child, cpt in network.cpts.items():
        for p in cpt.parents:
            graph.add_edge(p, child)
        for a, b in combinations(cpt.parents, 2):
            graph.add_edge(a, b)
    return graph


def table_size(clique: Iterable[str], network: Network | Mapping[str, int]) -> int:
    """Number of entries in a joint table over ``clique``."""
    cards = network.cardinalities if isinstance(network, Network) else network
    return math.prod(cards[v] for v in clique)


def _fill_in(adj: Mapping[str, set], v: str) -> int:
    nb = sorted(adj[v])
    return sum(1 for a, b in combinations(nb, 2) if b not in adj[a])


def triangulate(
    graph: UndirectedGraph, cardinalities: Mapping[str, int] | None = None
) -> tuple[UndirectedGraph, list[str]]:
    """Min-fill triangulation.

    Ties on fill-in go to the vertex whose elimination clique has the smaller
    table size (cardinalities default to 2), then to the smaller name.
    Returns the chordal supergraph and its perfect elimination order.
    """
    cards = {v: 2 for v in graph.vertices}
    if cardinalities:
        cards.update({v: cardinalities[v] for v in graph.vertices if v in cardinalities})
    adj = {v: set(graph.neighbors(v)) for v in graph.vertices}
    chordal = graph.copy()
    order = []
    while adj:
        v = min(
            adj,
            key=lambda u: (_fill_in(adj, u), cards[u] * math.prod(cards[w] for w in adj[u]), u),
        )
        nb = adj.pop(v)
        for a, b in combinations(sorted(nb), 2):
            if b not in adj[a]:
                adj[a].add(b)
                adj[b].add(a)
                chordal.add_edge(a, b)
        for u in nb:
            adj[u].discard(v)
        order.append(v)
    return chordal, order


def is_perfect_elimination_order(graph: UndirectedGraph, order: Sequence[str]) -> bool:
    pos = {v: i for i, v in enumerate(order)}
    for v in order:
        later = [u for u in graph.neighbors(v) if pos[u] > pos[v]]
        if not graph.is_clique(later):
            return False
    return True


def maximal_cliques(chordal: UndirectedGraph, order: Sequence[str]) -> list[tuple[str, ...]]:
    """Maximal cliques of a chordal graph read off its perfect elimination order."""
    if sorted(order) != sorted(chordal.vertices):
        raise NonChordalError("elimination order does not cover the vertex set")
    pos = {v: i for i, v in enumerate(order)}
    candidates = []
    for v in order:
        later = {u for u in chordal.neighbors(v) if pos[u] > pos[v]}
        if not chordal.is_clique(later):
            raise NonChordalError(f"graph is not chordal under the given order (at {v!r})")
        candidates.append(frozenset(later | {v}))
    maximal = {c for c in candidates if not any(c < d for d in candidates)}
    return sorted(tuple(sorted(c)) for c in maximal)


def max_clique(graph: UndirectedGraph, limit: int = MAX_CLIQUE_VERTICES) -> tuple[str, ...]:
    """Exact maximum clique by branch and bound.

    Candidates are explored in name order, so the first clique found at the
    maximum size is the lexicographically smallest sorted one; later cliques
    only replace it when strictly larger. Greedy colouring bounds the search.
    """
    n = len(graph.vertices)
    if n > limit:
        raise SizeLimitError(f"max_clique limited to {limit} vertices, graph has {n}")
    if n == 0:
        return ()
    names = sorted(graph.vertices)
    idx = {v: i for i, v in enumerate(names)}
    nbrs = [0] * n
    for i, v in enumerate(names):
        for u in graph.neighbors(v):
            nbrs[i] |= 1 << idx[u]
    best: list[int] = []

    def colour_bound(cand: int) -> int:
        colours = 0
        rest = cand
        while rest:
            colours += 1
            avail = rest
            while avail:
                low = avail & -avail
                avail &= ~low & ~nbrs[low.bit_length() - 1]
                rest &= ~low
        return colours

    def expand(current: list[int], cand: int) -> None:
        nonlocal best
        if len(current) > len(best):
            best = list(current)
        if not cand or len(current) + colour_bound(cand) <= len(best):
            return
        while cand:
            low = cand & -cand
            i = low.bit_length() - 1
            cand &= ~low
            if len(current) + 1 + bin(cand).count("1") <= len(best):
                return
            current.append(i)
            expand(current, cand & nbrs[i])
            current.pop()

    expand([], (1 << n) - 1)
    return tuple(names[i] for i in best)


@dataclass
class JunctionTree:
    """Cliques of a triangulated moral graph joined into a tree.

    ``potentials[i]`` is an array with one axis per name in ``cliques[i]``
    (in that order). ``edges`` lists tree edges as clique-index pairs with
    matching ``separators``.
    """

    cliques: list[tuple[str, ...]]
    edges: list[tuple[int, int]]
    separators: list[tuple[str, ...]]
    potentials: list[np.ndarray]
    elimination_order: list[str]
    cardinalities: dict[str, int]
    assignment: dict[str, int] = field(default_factory=dict)

    @property
    def max_table_size(self) -> int:
        return max(table_size(c, self.cardinalities) for c in self.cliques)

    def neighbors(self, i: int) -> list[tuple[int, int]]:
        """(neighbor clique, edge index) pairs for clique ``i``."""
        out = []
        for e, (a, b) in enumerate(self.edges):
            if a == i:
                out.append((b, e))
            elif b == i:
                out.append((a, e))
        return sorted(out)

    def containing(self, variable: str) -> list[int]:
        return [i for i, c in enumerate(self.cliques) if variable in c]

    def has_running_intersection(self) -> bool:
        for v in self.cardinalities:
            holders = set(self.containing(v))
            if not holders:
                continue
            start = min(holders)
            seen, stack = {start}, [start]
            while stack:
                i = stack.pop()
                for j, _ in self.neighbors(i):
                    if j in holders and j not in seen:
                        seen.add(j)
                        stack.append(j)
            if seen != holders:
                return False
        return True


def expand_to(values: np.ndarray, axes: Sequence[str], target: Sequence[str]) -> np.ndarray:
    """View ``values`` (axes named ``axes``) broadcastable against ``target`` axes."""
    order = [axes.index(a) for a in target if a in axes]
    moved = np.transpose(values, order) if order else values
    shape = []
    it = iter(moved.shape)
    for a in target:
        shape.append(next(it) if a in axes else 1)
    return moved.reshape(shape)


def cpt_factor(cpt, cards: Mapping[str, int]) -> tuple[np.ndarray, tuple[str, ...]]:
    """A full table as an array over (parents..., child)."""
    axes = cpt.parents + (cpt.child,)
    return cpt.rows.reshape([cards[a] for a in axes]), axes


def build_junction_tree(
    cliques: Sequence[Sequence[str]],
    network: Network,
    elimination_order: Sequence[str] = (),
) -> JunctionTree:
    """Join cliques by a maximum-weight spanning tree and load CPT potentials.

    Edge weight is separator size; ties prefer the smaller separator table,
    then the lexicographically smaller clique pair. Each family's table
    (effective table for additive nodes) multiplies into the first clique,
    in list order, that contains the family.
    """
    cliques = [tuple(sorted(c)) for c in cliques]
    cards = network.cardinalities
    candidates = []
    for i, j in combinations(range(len(cliques)), 2):
        sep = tuple(sorted(set(cliques[i]) & set(cliques[j])))
        candidates.append((-len(sep), table_size(sep, cards), cliques[i], cliques[j], i, j, sep))
    candidates.sort()
    parent = list(range(len(cliques)))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    edges, separators = [], []
    for *_, i, j, sep in candidates:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj
            edges.append((i, j))
            separators.append(sep)

    potentials = [np.ones([cards[v] for v in c]) for c in cliques]
    assignment = {}
    for node in network.names:
        fam = set(network.family(node))
        home = next((i for i, c in enumerate(cliques) if fam <= set(c)), None)
        if home is None:
            raise TriangulationError(f"family of {node!r} lies in no clique")
        assignment[node] = home
        values, axes = cpt_factor(effective_cpt(network, node), cards)
        potentials[home] = potentials[home] * expand_to(values, axes, cliques[home])
    return JunctionTree(
        cliques=cliques,
        edges=edges,
        separators=separators,
        potentials=potentials,
        elimination_order=list(elimination_order),
        cardinalities=cards,
        assignment=assignment,
    )


def compile_network(network: Network) -> JunctionTree:
    """Moralize, triangulate, extract cliques and build the junction tree."""
    chordal, order = triangulate(moralize(network), network.cardinalities)
    return build_junction_tree(maximal_cliques(chordal, order), network, order)


def clique_inventory(network: Network) -> list[tuple[str, ...]]:
    chordal, order = triangulate(moralize(network), network.cardinalities)
    return maximal_cliques(chordal, order)
