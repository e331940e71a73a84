"""Inference and weight fitting for additive belief networks."""

from importlib import resources

from .decompose import (
    Partition,
    additive_synergy,
    positive_influence,
    positive_influence_all,
    prescribe_partition,
    product_synergy,
)
from .dissect import DissectionPlan, abnm_query, build_plan, dissect_at
from .errors import AddnetError
from .exact import (
    enumerate_joint,
    ls_calibrate,
    ls_marginal,
    ls_query,
    query_by_enumeration,
)
from .fit import (
    WeightPosterior,
    bayes_update_batch,
    bayes_update_weights,
    cross_entropy_total,
    family_marginal,
    induce_cpt,
    marginalize_cpt,
    node_cross_entropy,
    optimize_weights,
    stationarity_residual,
)
from .graphops import (
    UndirectedGraph,
    build_junction_tree,
    max_clique,
    maximal_cliques,
    moralize,
    table_size,
    triangulate,
)
from .model import (
    AdditiveCpt,
    CaseSet,
    Evidence,
    FullCpt,
    Network,
    Term,
    Variable,
    data_requirement,
    effective_cpt,
    load_network,
    parse_cases,
    parse_network,
    serialize_network,
)

__version__ = "0.1.0"


def example_path(name: str):
    """Path to a bundled example file (``riot.abn``, ``alarmx.abn``, ``abc.icg``)."""
    return resources.files(__name__).joinpath("data", name)


def load_example(name: str) -> Network:
    return parse_network(example_path(name).read_text(encoding="utf-8"))
