"""Forward (ancestral) sampling of complete cases."""

from __future__ import annotations

import numpy as np

from .model import CaseSet, Network, effective_cpt


def forward_sample(network: Network, n: int, rng=None) -> CaseSet:
    """Draw ``n`` complete cases by sampling nodes in topological order."""
    rng = np.random.default_rng(rng)
    cards = network.cardinalities
    drawn = {}
    for node in network.topological_order:
        cpt = effective_cpt(network, node)
        if cpt.parents:
            config = np.ravel_multi_index(
                tuple(drawn[p] for p in cpt.parents), tuple(cards[p] for p in cpt.parents)
            )
        else:
            config = np.zeros(n, dtype=np.intp)
        cdf = np.cumsum(cpt.rows, axis=1)[config]
        u = rng.random(n)[:, None]
        drawn[node] = np.minimum((u >= cdf).sum(axis=1), cards[node] - 1)
    names = network.names
    states = [network.variable(v).states for v in names]
    rows = tuple(
        tuple(states[j][drawn[v][i]] for j, v in enumerate(names)) for i in range(n)
    )
    return CaseSet(tuple(names), rows)
