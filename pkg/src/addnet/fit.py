"""Fitting and validating additive weights.

Cross entropy between a reference network and its additive approximation
splits into one term per node, each depending only on that node's weights
and its family marginal under the reference. Each term is convex in the
weights, so it is minimized directly on the simplex.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Mapping, Sequence

import numpy as np

from .dissect import dissect_at
from .errors import (
    BoundaryError,
    ImpossibleEvidenceError,
    NotAdditiveError,
    ShapeError,
    StructureMismatchError,
    SubsetUnionError,
)
from .exact import enumerate_joint, ls_calibrate, marginalize
from .graphops import compile_network
from .model import (
    AdditiveCpt,
    CaseSet,
    FullCpt,
    Network,
    Term,
    as_evidence,
    effective_cpt,
    expand_terms,
)

LOG_FLOOR = 1e-300
GOLDEN_TOL = 1e-8
PG_TOL = 1e-8
SAME_TABLE_TOL = 1e-15


@dataclass
class FamilyMarginal:
    """Joint Pr[node, parents] laid out like the node's CPT rows."""

    node: str
    parents: tuple[str, ...]
    values: np.ndarray
    cardinalities: dict[str, int]

    @property
    def parent_marginal(self) -> np.ndarray:
        return self.values.sum(axis=1)


def family_marginal(network: Network, node: str, method: str = "jt") -> FamilyMarginal:
    """Exact joint over a node and its parents.

    ``method="jt"`` reads it off a calibrated junction tree (a family always
    sits inside one clique); ``method="enum"`` sums the full joint.
    """
    parents = network.parents(node)
    axes = parents + (node,)
    cards = network.cardinalities
    expanded = network.expanded()
    if method == "jt":
        cal = ls_calibrate(expanded, None)
        tree = cal.tree
        home = next(i for i, c in enumerate(tree.cliques) if set(axes) <= set(c))
        table = marginalize(tree.potentials[home], tree.cliques[home], axes)
    elif method == "enum":
        joint = enumerate_joint(expanded)
        table = marginalize(joint.values, joint.variables, axes)
    else:
        raise ValueError(f"unknown method {method!r}")
    values = np.asarray(table).reshape(-1, cards[node])
    return FamilyMarginal(node, parents, values, {a: cards[a] for a in axes})


def _lifted(family: FamilyMarginal, terms: AdditiveCpt) -> np.ndarray:
    if terms.parents != family.parents or terms.child != family.node:
        raise ShapeError(
            f"terms for {terms.child!r} given {list(terms.parents)} do not match family "
            f"of {family.node!r} given {list(family.parents)}"
        )
    lifted = expand_terms(terms, family.cardinalities)
    if lifted.shape[1:] != family.values.shape:
        raise ShapeError("term tables do not match the family marginal")
    return lifted


def _weights(weights, k: int) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    if w.shape != (k,):
        raise ShapeError(f"expected {k} weights, got shape {w.shape}")
    return w


class _NodeObjective:
    """I(alpha) = sum P * (log ref - log(alpha . T)) restricted to P > 0."""

    def __init__(self, family: FamilyMarginal, reference: FullCpt, terms: AdditiveCpt):
        if reference.rows.shape != family.values.shape:
            raise ShapeError("reference table does not match the family marginal")
        lifted = _lifted(family, terms)
        support = family.values.ravel() > 0
        self.p = family.values.ravel()[support]
        self.log_ref = np.log(np.maximum(reference.rows.ravel()[support], LOG_FLOOR))
        self.t = lifted.reshape(lifted.shape[0], -1)[:, support]
        self.k = lifted.shape[0]

    def mixture(self, w: np.ndarray) -> np.ndarray:
        return w @ self.t

    def diverges(self, w: np.ndarray) -> bool:
        return bool(np.any(self.mixture(w) < LOG_FLOOR))

    def value(self, w: np.ndarray) -> float:
        mix = np.maximum(self.mixture(w), LOG_FLOOR)
        return float(np.sum(self.p * (self.log_ref - np.log(mix))))

    def gradient(self, w: np.ndarray) -> np.ndarray:
        """d I / d alpha_j treating all k weights as free."""
        mix = np.maximum(self.mixture(w), LOG_FLOOR)
        return -(self.t @ (self.p / mix))

    def hessian(self, w: np.ndarray) -> np.ndarray:
        mix = np.maximum(self.mixture(w), LOG_FLOOR)
        scaled = self.t * (np.sqrt(self.p) / mix)
        return scaled @ scaled.T

    def identifiable(self) -> bool:
        return bool(np.max(np.abs(self.t - self.t[0])) > SAME_TABLE_TOL)


def node_cross_entropy(
    family: FamilyMarginal, reference_cpt: FullCpt, terms: AdditiveCpt, weights: Sequence[float]
) -> float:
    """Contribution of one additive node to the total cross entropy.

    Mixture values below 1e-300 are clamped; use ``mixture_diverges`` to see
    whether that happened (the true value is then +inf).
    """
    obj = _NodeObjective(family, reference_cpt, terms)
    # the exact value is nonnegative; clip rounding noise
    return max(obj.value(_weights(weights, obj.k)), 0.0)


def mixture_diverges(family, reference_cpt, terms, weights) -> bool:
    obj = _NodeObjective(family, reference_cpt, terms)
    return obj.diverges(_weights(weights, obj.k))


def stationarity_residual(
    family: FamilyMarginal, reference_cpt: FullCpt, terms: AdditiveCpt, weights: Sequence[float]
) -> np.ndarray:
    """Left-hand sides of the stationarity conditions, one per free weight.

    Component j is sum P(x, pa) (T_j - T_k) / (alpha . T), with the last
    weight eliminated as 1 - sum of the others. This equals minus the
    derivative of ``node_cross_entropy`` along that parameterization.
    """
    obj = _NodeObjective(family, reference_cpt, terms)
    w = _weights(weights, obj.k)
    if np.any(w <= 0.0) or np.any(w >= 1.0):
        raise BoundaryError("stationarity residual needs weights strictly inside the simplex")
    mix = obj.mixture(w)
    if np.any(mix <= 0.0):
        raise BoundaryError("mixture vanishes on the support of the family marginal")
    diff = obj.t[:-1] - obj.t[-1]
    return diff @ (obj.p / mix)


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto {w >= 0, sum w = 1} (sort-based)."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    ind = np.arange(1, len(v) + 1)
    rho = np.nonzero(u - css / ind > 0)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


@dataclass
class WeightFit:
    weights: np.ndarray
    value: float
    interior: bool
    residual_norm: float | None
    diverged: bool = False
    non_identifiable: bool = False
    iterations: int = 0

    def as_dict(self) -> dict:
        return {
            "weights": self.weights.tolist(),
            "cross_entropy": self.value,
            "interior": self.interior,
            "residual_norm": self.residual_norm,
            "diverged": self.diverged,
            "non_identifiable": self.non_identifiable,
        }


def _golden(f, lo: float, hi: float, tol: float) -> tuple[float, float, int]:
    inv = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c, d = b - inv * (b - a), a + inv * (b - a)
    fc, fd = f(c), f(d)
    it = 0
    while b - a > tol:
        it += 1
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - inv * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv * (b - a)
            fd = f(d)
    return a, b, it


def _newton_root(slope, curvature, x: float, lo: float, hi: float) -> float:
    """Root of an increasing ``slope`` in [lo, hi], Newton steps with bisection fallback."""
    for _ in range(100):
        g = slope(x)
        if g == 0.0:
            return x
        if g > 0.0:
            hi = x
        else:
            lo = x
        h = curvature(x)
        step = x - g / h if h > 0.0 else 0.5 * (lo + hi)
        x_new = step if lo < step < hi else 0.5 * (lo + hi)
        if abs(x_new - x) <= 4 * np.finfo(float).eps or hi - lo <= 4 * np.finfo(float).eps:
            return x_new
        x = x_new
    return x


def _fit_two(obj: _NodeObjective) -> tuple[np.ndarray, int]:
    e = np.array([1.0, -1.0])
    f = lambda a: obj.value(np.array([a, 1.0 - a]))
    slope = lambda a: float(obj.gradient(np.array([a, 1.0 - a])) @ e)
    curvature = lambda a: float(e @ obj.hessian(np.array([a, 1.0 - a])) @ e)

    a, b, it = _golden(f, 0.0, 1.0, GOLDEN_TOL)
    x = 0.5 * (a + b)
    # golden section stalls once f differences hit rounding; the slope does not
    if 0.0 < x < 1.0:
        lo, hi, width = x, x, GOLDEN_TOL
        while lo > 0.0 and slope(lo) > 0.0:
            lo, width = max(lo - width, 0.0), 2 * width
        width = GOLDEN_TOL
        while hi < 1.0 and slope(hi) < 0.0:
            hi, width = min(hi + width, 1.0), 2 * width
        if slope(lo) <= 0.0 <= slope(hi):
            x = _newton_root(slope, curvature, x, lo, hi)
    candidates = [x, 0.0, 1.0]
    best = min(candidates, key=lambda c: (f(c), candidates.index(c)))
    return np.array([best, 1.0 - best]), it


def _fit_many(obj: _NodeObjective, max_iter: int = 200000) -> tuple[np.ndarray, int]:
    """Projected gradient with Barzilai-Borwein trial steps and Armijo backtracking."""
    w = np.full(obj.k, 1.0 / obj.k)
    fw = obj.value(w)
    g = obj.gradient(w)
    step = 1.0
    prev_w = prev_g = None
    for it in range(1, max_iter + 1):
        if np.linalg.norm(w - project_simplex(w - g)) <= PG_TOL:
            return w, it
        if prev_w is not None:
            s, y = w - prev_w, g - prev_g
            sy = float(s @ y)
            step = float(s @ s) / sy if sy > 0 else 1.0
            step = min(max(step, 1e-12), 1e12)
        # near the minimizer the decrease drops below rounding noise in f
        noise = 64 * np.finfo(float).eps * max(1.0, abs(fw))
        while True:
            trial = project_simplex(w - step * g)
            d = trial - w
            ft = obj.value(trial)
            if ft <= fw + float(g @ d) + float(d @ d) / (2.0 * step) + noise:
                break
            step *= 0.5
            if step < 1e-20:
                return w, it
        prev_w, prev_g = w, g
        w, fw = trial, ft
        g = obj.gradient(w)
    return w, max_iter


def _gradient_mapping(obj: _NodeObjective, w: np.ndarray) -> float:
    return float(np.linalg.norm(w - project_simplex(w - obj.gradient(w))))


def _polish(obj: _NodeObjective, w: np.ndarray, rounds: int = 20) -> np.ndarray:
    """Newton steps on the face of the simplex where ``w`` is positive."""
    for _ in range(rounds):
        active = np.flatnonzero(w > 0.0)
        if active.size < 2:
            return w
        g = obj.gradient(w)[active]
        h = obj.hessian(w)[np.ix_(active, active)]
        n = active.size
        kkt = np.zeros((n + 1, n + 1))
        kkt[:n, :n] = h
        kkt[:n, n] = kkt[n, :n] = 1.0
        try:
            sol = np.linalg.solve(kkt, np.concatenate([-g, [0.0]]))
        except np.linalg.LinAlgError:
            return w
        trial = w.copy()
        trial[active] += sol[:n]
        if np.any(trial < 0.0):
            return w
        trial /= trial.sum()
        if _gradient_mapping(obj, trial) > _gradient_mapping(obj, w):
            return w
        if np.max(np.abs(trial - w)) <= 4 * np.finfo(float).eps:
            return trial
        w = trial
    return w


def optimize_weights(family: FamilyMarginal, reference_cpt: FullCpt, terms: AdditiveCpt) -> WeightFit:
    """Weights on the simplex minimizing the node's cross entropy.

    Two terms: golden-section search on [0, 1]. More terms: projected
    gradient descent. When every term table is the same the objective does
    not depend on the weights; uniform weights are returned and flagged.
    """
    obj = _NodeObjective(family, reference_cpt, terms)
    if obj.k == 1:
        w = np.array([1.0])
        return WeightFit(w, obj.value(w), False, None, obj.diverges(w))
    if not obj.identifiable():
        w = np.full(obj.k, 1.0 / obj.k)
        return WeightFit(w, obj.value(w), True, 0.0, obj.diverges(w), non_identifiable=True)
    if obj.k == 2:
        w, it = _fit_two(obj)
    else:
        w, it = _fit_many(obj)
        w = _polish(obj, w)
    interior = bool(np.all(w > 0.0))
    residual = None
    if interior and np.all(w < 1.0):
        try:
            residual = float(np.linalg.norm(stationarity_residual(family, reference_cpt, terms, w)))
        except BoundaryError:
            residual = None
    value = max(obj.value(w), 0.0)
    return WeightFit(w, value, interior, residual, obj.diverges(w), iterations=it)


def kkt_violation(family, reference_cpt, terms, weights) -> float:
    """How far ``weights`` are from first-order optimality on the simplex.

    Zero-weight terms must have a derivative no smaller than the common
    derivative of the positive-weight terms.
    """
    obj = _NodeObjective(family, reference_cpt, terms)
    w = _weights(weights, obj.k)
    g = obj.gradient(w)
    active = w > 0
    level = float(np.mean(g[active]))
    spread = float(np.max(np.abs(g[active] - level)))
    below = float(np.max(np.maximum(level - g[~active], 0.0))) if np.any(~active) else 0.0
    return max(spread, below)


# ---------------------------------------------------------------------------
# whole-network cross entropy


def _check_structure(reference: Network, abnm: Network) -> None:
    if list(reference.variables.values()) != list(abnm.variables.values()):
        raise StructureMismatchError("networks declare different variables or states")
    for n in reference.names:
        if reference.parents(n) != abnm.parents(n):
            raise StructureMismatchError(f"{n!r} has different parents in the two networks")


def cross_entropy_total(reference: Network, abnm: Network, cap: int | None = None) -> float:
    """sum_x P(x) log(P(x) / P'(x)) in nats; ``math.inf`` when P' misses P's support."""
    _check_structure(reference, abnm)
    p = enumerate_joint(reference, cap).values.ravel()
    q = enumerate_joint(abnm, cap).values.ravel()
    support = p > 0
    if np.any(q[support] <= 0):
        return math.inf
    return max(float(np.sum(p[support] * (np.log(p[support]) - np.log(q[support])))), 0.0)


def cross_entropy_by_node(reference: Network, abnm: Network) -> dict[str, float]:
    """Per-node terms of the cross entropy under the reference family marginals."""
    _check_structure(reference, abnm)
    out = {}
    for n in reference.names:
        ref = effective_cpt(reference, n)
        approx = effective_cpt(abnm, n)
        if np.array_equal(ref.rows, approx.rows):
            out[n] = 0.0
            continue
        fam = family_marginal(reference, n)
        sup = fam.values > 0
        if np.any(approx.rows[sup] <= 0):
            out[n] = math.inf
            continue
        value = float(np.sum(fam.values[sup] * (np.log(ref.rows[sup]) - np.log(approx.rows[sup]))))
        out[n] = max(value, 0.0)
    return out


# ---------------------------------------------------------------------------
# building term tables


def _check_subset(network: Network, node: str, subset: Sequence[str]) -> tuple[str, ...]:
    parents = network.parents(node)
    subset = tuple(subset)
    stray = [s for s in subset if s not in parents]
    if stray or len(set(subset)) != len(subset):
        raise SubsetUnionError(f"{list(subset)} is not a subset of the parents of {node!r}")
    return subset


def marginalize_cpt(network: Network, node: str, subset: Sequence[str]) -> tuple[FullCpt, list[int]]:
    """Pr[node | subset] from the full table, averaging removed parents by Pr[removed | subset].

    Returns the table and the row indices where Pr[subset] = 0; those rows
    fall back to an unweighted average over the removed parents.
    """
    subset = _check_subset(network, node, subset)
    parents = network.parents(node)
    cards = network.cardinalities
    full = effective_cpt(network, node)
    if subset == parents:
        return FullCpt(node, subset, full.rows), []
    pa_cards = [cards[p] for p in parents]
    d = cards[node]
    cond = full.rows.reshape(pa_cards + [d])
    pa = family_marginal(network, node).parent_marginal.reshape(pa_cards)
    axes = parents + (node,)
    joint = cond * pa[..., None]
    num = np.asarray(marginalize(joint, axes, subset + (node,))).reshape(-1, d)
    den = np.asarray(marginalize(pa, parents, subset)).reshape(-1)
    flat = np.asarray(marginalize(cond, axes, subset + (node,))).reshape(-1, d)
    n_removed = math.prod(cards[p] for p in parents if p not in subset)
    rows = np.empty_like(num)
    fallback = []
    for i in range(num.shape[0]):
        if den[i] > 0:
            rows[i] = num[i] / den[i]
        else:
            rows[i] = flat[i] / n_removed
            fallback.append(i)
    rows /= rows.sum(axis=1, keepdims=True)
    return FullCpt(node, subset, rows), fallback


def induce_cpt(
    cases: CaseSet, network: Network, node: str, subset: Sequence[str], pseudocount: float = 1.0
) -> tuple[FullCpt, int]:
    """Laplace-smoothed counting estimate of Pr[node | subset].

    Cases missing any family variable are skipped; their number is returned.
    Rows with no mass (no cases and no pseudocount) are uniform.
    """
    subset = _check_subset(network, node, subset)
    cards = network.cardinalities
    fam = (node,) + subset
    missing_cols = [v for v in fam if v not in cases.columns]
    if missing_cols:
        raise ShapeError(f"case file lacks columns {missing_cols}")
    cols = [cases.columns.index(v) for v in fam]
    d = cards[node]
    counts = np.zeros((math.prod(cards[s] for s in subset), d))
    skipped = 0
    for row in cases.rows:
        cells = [row[c] for c in cols]
        if any(c is None for c in cells):
            skipped += 1
            continue
        x = network.variable(node).index(cells[0])
        config = [network.variable(s).index(c) for s, c in zip(subset, cells[1:])]
        r = int(np.ravel_multi_index(config, [cards[s] for s in subset])) if subset else 0
        counts[r, x] += 1
    smoothed = counts + pseudocount
    totals = smoothed.sum(axis=1, keepdims=True)
    rows = np.where(totals > 0, smoothed / np.where(totals > 0, totals, 1.0), 1.0 / d)
    return FullCpt(node, subset, rows), skipped


# ---------------------------------------------------------------------------
# fitting a decomposition of a full network


@dataclass
class NodeFitReport:
    node: str
    subsets: list[tuple[str, ...]]
    fit: WeightFit
    fallback_rows: dict[int, list[int]] = field(default_factory=dict)


@dataclass
class DecompositionFit:
    reference: Network
    abnm: Network
    nodes: list[NodeFitReport]

    @property
    def total(self) -> float:
        return float(sum(r.fit.value for r in self.nodes))


def fit_decomposition(reference: Network, decomposition: Mapping[str, Sequence[Sequence[str]]]) -> DecompositionFit:
    """Marginalize term tables from ``reference`` and fit each node's weights."""
    abnm = reference
    reports = []
    for node, subsets in decomposition.items():
        parents = reference.parents(node)
        for s in subsets:
            _check_subset(reference, node, s)
        subsets = [tuple(p for p in parents if p in s) for s in subsets]
        tables, fallback = [], {}
        for j, s in enumerate(subsets):
            table, rows = marginalize_cpt(reference, node, s)
            tables.append(table)
            if rows:
                fallback[j] = rows
        k = len(tables)
        terms = AdditiveCpt(node, parents, tuple(Term(1.0 / k, t) for t in tables))
        fam = family_marginal(reference, node)
        result = optimize_weights(fam, effective_cpt(reference, node), terms)
        abnm = abnm.replace(node, terms.with_weights(result.weights.tolist()))
        reports.append(NodeFitReport(node, subsets, result, fallback))
    return DecompositionFit(reference, abnm, reports)


# ---------------------------------------------------------------------------
# Bayesian weight posterior


def simplex_grid(k: int, step: float) -> np.ndarray:
    """Points of the k-simplex whose coordinates are multiples of ``step``."""
    m = int(round(1.0 / step))
    if m <= 0 or abs(m * step - 1.0) > 1e-9:
        raise ShapeError(f"grid step {step} must divide 1")
    points = []
    # compositions of m into k nonnegative parts via stars and bars
    for bars in combinations(range(m + k - 1), k - 1):
        prev, parts = -1, []
        for b in bars:
            parts.append(b - prev - 1)
            prev = b
        parts.append(m + k - 2 - prev)
        points.append(parts)
    return np.array(points, dtype=float) / m


@dataclass
class WeightPosterior:
    grid: np.ndarray
    masses: np.ndarray
    step: float

    @classmethod
    def uniform(cls, k: int, step: float) -> "WeightPosterior":
        grid = simplex_grid(k, step)
        return cls(grid, np.full(len(grid), 1.0 / len(grid)), step)

    def mean(self) -> np.ndarray:
        return self.masses @ self.grid

    def mode(self) -> np.ndarray:
        return self.grid[int(np.argmax(self.masses))]

    def credible_interval(self, component: int = 0, level: float = 0.95) -> tuple[float, float]:
        """Equal-tailed interval for one weight's marginal posterior."""
        values = self.grid[:, component]
        uniq = np.unique(values)
        mass = np.array([self.masses[values == u].sum() for u in uniq])
        cdf = np.cumsum(mass)
        tail = (1.0 - level) / 2.0
        lo = uniq[min(np.searchsorted(cdf, tail, side="left"), len(uniq) - 1)]
        hi = uniq[min(np.searchsorted(cdf, 1.0 - tail, side="left"), len(uniq) - 1)]
        return float(lo), float(hi)


class TermLikelihood:
    """Per-term evidence likelihoods for one additive node.

    With the node's other terms fixed, Pr[e | weights] = sum_j w_j Pr_j[e],
    where Pr_j is the network dissected at term j. Results are cached per
    distinct case.
    """

    def __init__(self, abnm: Network, node: str):
        cpt = abnm.cpts[abnm.variable(node).name]
        if not isinstance(cpt, AdditiveCpt):
            raise NotAdditiveError(f"{node!r} does not have an additive table")
        self.node = node
        self.network = abnm
        if len(cpt.terms) == 1:
            self.leaves = [abnm]
        else:
            self.leaves = [dissect_at(abnm, node, j) for j in range(len(cpt.terms))]
        self.trees = [compile_network(n) for n in self.leaves]
        self._cache = {}

    @property
    def k(self) -> int:
        return len(self.leaves)

    def __call__(self, case) -> np.ndarray:
        case = as_evidence(case).validate(self.network)
        if case not in self._cache:
            out = []
            for net, tree in zip(self.leaves, self.trees):
                try:
                    out.append(ls_calibrate(net, case, tree).evidence_likelihood)
                except ImpossibleEvidenceError:
                    out.append(0.0)
            self._cache[case] = np.array(out)
        return self._cache[case]


def bayes_update_weights(
    prior: WeightPosterior, abnm: Network, node: str, case, likelihood: TermLikelihood | None = None
) -> WeightPosterior:
    """Posterior over the node's weights after one (possibly partial) case."""
    if likelihood is None:
        likelihood = TermLikelihood(abnm, node)
    if prior.grid.shape[1] != likelihood.k:
        raise ShapeError(f"grid has {prior.grid.shape[1]} weights, {node!r} has {likelihood.k} terms")
    lik = prior.grid @ likelihood(case)
    post = prior.masses * lik
    total = post.sum()
    if total <= 0.0:
        raise ImpossibleEvidenceError("case has probability 0 at every grid point")
    return WeightPosterior(prior.grid, post / total, prior.step)


def bayes_update_batch(
    prior: WeightPosterior, abnm: Network, node: str, cases, likelihood: TermLikelihood | None = None
) -> WeightPosterior:
    """Same as folding ``bayes_update_weights`` over ``cases``, in log space."""
    if likelihood is None:
        likelihood = TermLikelihood(abnm, node)
    if isinstance(cases, CaseSet):
        cases = cases.evidence()
    with np.errstate(divide="ignore"):
        logpost = np.log(prior.masses)
        for case in cases:
            logpost = logpost + np.log(prior.grid @ likelihood(case))
    top = np.max(logpost)
    if not np.isfinite(top):
        raise ImpossibleEvidenceError("cases have probability 0 at every grid point")
    post = np.exp(logpost - top)
    return WeightPosterior(prior.grid, post / post.sum(), prior.step)

