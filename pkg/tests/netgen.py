"""Random networks, fit problems and independent oracles shared by the tests."""

import itertools
import math

import numpy as np

from addnet.fit import FamilyMarginal
from addnet.model import AdditiveCpt, FullCpt, Network, Term, Variable


def random_rows(rng, n_rows, d, concentration=1.0):
    return rng.dirichlet(np.full(d, concentration), size=n_rows)


def random_subsets(rng, parents, k):
    """k subsets of ``parents`` whose union is all of them (overlap allowed)."""
    while True:
        subsets = [set() for _ in range(k)]
        for p in parents:
            owners = [j for j in range(k) if rng.random() < 0.35]
            if not owners:
                owners = [int(rng.integers(k))]
            for j in owners:
                subsets[j].add(p)
        if all(subsets):
            return [tuple(p for p in parents if p in s) for s in subsets]


def random_additive(rng, child, parents, cards, k=None):
    k = k or int(rng.integers(2, 4))
    k = min(k, max(2, len(parents)))
    subsets = random_subsets(rng, parents, k)
    weights = rng.dirichlet(np.ones(k))
    terms = []
    for w, s in zip(weights, subsets):
        n = math.prod(cards[p] for p in s)
        terms.append(Term(float(w), FullCpt(child, s, random_rows(rng, n, cards[child]))))
    return AdditiveCpt(child, parents, tuple(terms))


def random_network(rng, max_nodes=8, max_card=4, max_parents=3, p_additive=0.6):
    n = int(rng.integers(2, max_nodes + 1))
    names = [f"v{i}" for i in range(n)]
    cards = {v: int(rng.integers(2, max_card + 1)) for v in names}
    variables = [Variable(v, [f"s{j}" for j in range(cards[v])]) for v in names]
    cpts = {}
    for i, v in enumerate(names):
        n_par = int(rng.integers(0, min(i, max_parents) + 1))
        parents = tuple(sorted(rng.choice(names[:i], size=n_par, replace=False), key=names.index)) if n_par else ()
        if len(parents) >= 2 and rng.random() < p_additive:
            cpts[v] = random_additive(rng, v, parents, cards)
        else:
            rows = random_rows(rng, math.prod(cards[p] for p in parents), cards[v])
            cpts[v] = FullCpt(v, parents, rows)
    return Network(variables, cpts)


def random_evidence(rng, network, max_size=3):
    names = list(network.names)
    size = int(rng.integers(0, min(max_size, len(names)) + 1))
    chosen = rng.choice(names, size=size, replace=False) if size else []
    return {
        str(v): network.variable(str(v)).states[int(rng.integers(network.variable(str(v)).cardinality))]
        for v in chosen
    }


# ---------------------------------------------------------------------------
# oracles that avoid the library's table-lifting code


def row_index(config, cards):
    """Row of a configuration with the first variable most significant."""
    idx = 0
    for state, card in zip(config, cards):
        idx = idx * card + state
    return idx


def cpt_entry(network, node, assignment):
    """Pr[node = assignment[node] | parents] straight from the stored terms."""
    cpt = network.cpts[node]
    cards = network.cardinalities
    x = assignment[node]
    if isinstance(cpt, FullCpt):
        return cpt.rows[row_index([assignment[p] for p in cpt.parents], [cards[p] for p in cpt.parents]), x]
    total = 0.0
    for term in cpt.terms:
        given = term.given
        r = row_index([assignment[p] for p in given], [cards[p] for p in given])
        total += term.weight * term.table.rows[r, x]
    return total


def instantiations(network):
    names = network.names
    cards = network.cardinalities
    for combo in itertools.product(*(range(cards[v]) for v in names)):
        yield dict(zip(names, combo))


def joint_probability(network, assignment):
    return math.prod(cpt_entry(network, n, assignment) for n in network.names)


def brute_query(network, query, evidence):
    """Pr[query | evidence] and Pr[evidence] by looping over every instantiation."""
    ev = {k: network.variable(k).index(v) for k, v in evidence.items()}
    dist = np.zeros(network.variable(query).cardinality)
    for a in instantiations(network):
        if all(a[k] == s for k, s in ev.items()):
            dist[a[query]] += joint_probability(network, a)
    mass = dist.sum()
    return dist / mass, mass


# ---------------------------------------------------------------------------
# fit problems


def fit_problem(rng, k, mixture_weights=None, n_parents=3, max_card=3, d=None):
    """Family marginal, reference table and k-term additive table for one node.

    With ``mixture_weights`` the reference is exactly that mixture of the
    terms; otherwise it is an unrelated random table.
    """
    parents = tuple(f"p{i}" for i in range(n_parents))
    cards = {p: int(rng.integers(2, max_card + 1)) for p in parents}
    cards["y"] = d or int(rng.integers(2, 4))
    terms = random_additive(rng, "y", parents, cards, k=k)
    n_rows = math.prod(cards[p] for p in parents)
    if mixture_weights is not None:
        terms = terms.with_weights(mixture_weights)
        from addnet.model import expand_terms

        rows = np.tensordot(np.asarray(mixture_weights), expand_terms(terms, cards), axes=1)
    else:
        rows = random_rows(rng, n_rows, cards["y"])
    reference = FullCpt("y", parents, rows)
    pa = rng.dirichlet(np.ones(n_rows))
    family = FamilyMarginal("y", parents, pa[:, None] * reference.rows, cards)
    return family, reference, terms
