"""Data model for additive belief networks.

A network is a DAG of finite discrete variables. Each node carries either a
full conditional probability table or an additive one: a weighted sum of
tables that each condition on a subset of the parents.

Table layout
------------
A conditional table over ``parents = (P1, ..., Pm)`` is stored as an array of
shape ``(prod(card(Pi)), card(child))``. Parent configurations are enumerated
in C order: the first-listed parent is most significant and the last one
varies fastest. ``rows.reshape(*parent_cards, child_card)`` therefore gives
the table indexed by state positions.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np
import yaml

from .errors import (
    CycleError,
    DanglingReferenceError,
    NetworkSyntaxError,
    RowSumError,
    ShapeError,
    SubsetUnionError,
    UnknownStateError,
    UnknownVariableError,
    WeightSumError,
)

PROB_TOL = 1e-9
MISSING = "?"


@dataclass(frozen=True)
class Variable:
    name: str
    states: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "name", str(self.name))
        object.__setattr__(self, "states", tuple(str(s) for s in self.states))
        if len(self.states) < 2:
            raise ShapeError(f"variable {self.name!r} needs at least 2 states")
        if len(set(self.states)) != len(self.states):
            raise ShapeError(f"variable {self.name!r} has duplicate state labels")

    @property
    def cardinality(self) -> int:
        return len(self.states)

    def index(self, state: str) -> int:
        try:
            return self.states.index(state)
        except ValueError:
            raise UnknownStateError(
                f"{state!r} is not a state of {self.name!r} (states: {', '.join(self.states)})"
            ) from None


def _frozen_array(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


def _normalized_rows(rows: np.ndarray, where: str) -> np.ndarray:
    """Check that each row is a distribution; snap sums within tolerance to 1."""
    if np.any(~np.isfinite(rows)) or np.any(rows < 0.0) or np.any(rows > 1.0 + PROB_TOL):
        raise RowSumError(f"{where}: entries must lie in [0, 1]")
    sums = rows.sum(axis=1)
    bad = np.flatnonzero(np.abs(sums - 1.0) > PROB_TOL)
    if bad.size:
        i = int(bad[0])
        raise RowSumError(f"{where}: row {i} sums to {sums[i]!r}, not 1")
    slack = 8 * rows.shape[1] * np.finfo(float).eps
    if np.any(np.abs(sums - 1.0) > slack):
        rows = rows / sums[:, None]
    return np.minimum(rows, 1.0)


@dataclass(frozen=True, eq=False)
class FullCpt:
    """Pr[child | parents] as one probability row per parent configuration."""

    child: str
    parents: tuple[str, ...]
    rows: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "child", str(self.child))
        object.__setattr__(self, "parents", tuple(str(p) for p in self.parents))
        rows = np.asarray(self.rows, dtype=float)
        if rows.ndim != 2:
            raise ShapeError(f"table for {self.child!r} must be 2-dimensional")
        rows = _normalized_rows(rows, f"table for {self.child!r}")
        object.__setattr__(self, "rows", _frozen_array(rows))

    def __eq__(self, other):
        if not isinstance(other, FullCpt):
            return NotImplemented
        return (
            self.child == other.child
            and self.parents == other.parents
            and np.array_equal(self.rows, other.rows)
        )

    __hash__ = None

    def check_shape(self, cards: Mapping[str, int]) -> None:
        n = math.prod(cards[p] for p in self.parents)
        if self.rows.shape != (n, cards[self.child]):
            raise ShapeError(
                f"table for {self.child!r} given {list(self.parents)} has shape "
                f"{self.rows.shape}, expected ({n}, {cards[self.child]})"
            )


@dataclass(frozen=True, eq=False)
class Term:
    weight: float
    table: FullCpt

    @property
    def given(self) -> tuple[str, ...]:
        return self.table.parents

    def __eq__(self, other):
        if not isinstance(other, Term):
            return NotImplemented
        return self.weight == other.weight and self.table == other.table

    __hash__ = None


@dataclass(frozen=True, eq=False)
class AdditiveCpt:
    """Pr[child | parents] = sum_i weight_i * Pr_i[child | given_i]."""

    child: str
    parents: tuple[str, ...]
    terms: tuple[Term, ...]

    def __post_init__(self):
        object.__setattr__(self, "child", str(self.child))
        object.__setattr__(self, "parents", tuple(str(p) for p in self.parents))
        terms = tuple(self.terms)
        if not terms:
            raise ShapeError(f"additive table for {self.child!r} has no terms")
        weights = np.array([t.weight for t in terms], dtype=float)
        if np.any(~np.isfinite(weights)) or np.any(weights < 0.0) or np.any(weights > 1.0 + PROB_TOL):
            raise WeightSumError(f"weights for {self.child!r} must lie in [0, 1]")
        total = weights.sum()
        if abs(total - 1.0) > PROB_TOL:
            raise WeightSumError(f"weights for {self.child!r} sum to {total!r}, not 1")
        if abs(total - 1.0) > 8 * len(terms) * np.finfo(float).eps:
            weights = weights / total
            terms = tuple(Term(float(w), t.table) for w, t in zip(weights, terms))
        covered = set()
        for t in terms:
            if t.table.child != self.child:
                raise ShapeError(f"term table for {t.table.child!r} inside {self.child!r}")
            stray = [g for g in t.given if g not in self.parents]
            if stray:
                raise SubsetUnionError(f"{self.child!r}: term conditions on non-parents {stray}")
            covered.update(t.given)
        missing = [p for p in self.parents if p not in covered]
        if missing:
            raise SubsetUnionError(f"{self.child!r}: parents {missing} appear in no term")
        object.__setattr__(self, "terms", terms)

    @property
    def weights(self) -> np.ndarray:
        return np.array([t.weight for t in self.terms])

    @property
    def subsets(self) -> list[tuple[str, ...]]:
        return [t.given for t in self.terms]

    def with_weights(self, weights: Sequence[float]) -> "AdditiveCpt":
        if len(weights) != len(self.terms):
            raise ShapeError(f"{self.child!r} has {len(self.terms)} terms, got {len(weights)} weights")
        return AdditiveCpt(
            self.child,
            self.parents,
            tuple(Term(float(w), t.table) for w, t in zip(weights, self.terms)),
        )

    def check_shape(self, cards: Mapping[str, int]) -> None:
        for t in self.terms:
            t.table.check_shape(cards)

    def __eq__(self, other):
        if not isinstance(other, AdditiveCpt):
            return NotImplemented
        return (
            self.child == other.child
            and self.parents == other.parents
            and self.terms == other.terms
        )

    __hash__ = None


class Network:
    """A validated, immutable belief network.

    ``variables`` keeps declaration order; ``cpts`` maps each variable name to
    its FullCpt or AdditiveCpt.
    """

    def __init__(self, variables: Iterable[Variable], cpts: Mapping[str, FullCpt | AdditiveCpt]):
        variables = list(variables)
        vmap = {}
        for v in variables:
            if v.name in vmap:
                raise NetworkSyntaxError(f"duplicate variable {v.name!r}")
            vmap[v.name] = v
        self._variables = MappingProxyType(vmap)
        for name, cpt in cpts.items():
            if name not in vmap:
                raise DanglingReferenceError(f"table given for undeclared variable {name!r}")
            if cpt.child != name:
                raise ShapeError(f"table keyed {name!r} is for {cpt.child!r}")
        missing = [n for n in vmap if n not in cpts]
        if missing:
            raise NetworkSyntaxError(f"no table for variables {missing}")
        self._cpts = MappingProxyType({n: cpts[n] for n in vmap})
        cards = self.cardinalities
        for name, cpt in self._cpts.items():
            if len(set(cpt.parents)) != len(cpt.parents):
                raise NetworkSyntaxError(f"{name!r} lists a parent twice")
            for p in cpt.parents:
                if p not in vmap:
                    raise DanglingReferenceError(f"{name!r} has undeclared parent {p!r}")
                if p == name:
                    raise CycleError(f"{name!r} is its own parent")
            cpt.check_shape(cards)
        self._order = self._toposort()

    def _toposort(self) -> tuple[str, ...]:
        indeg = {n: len(self._cpts[n].parents) for n in self._variables}
        kids = {n: [] for n in self._variables}
        for n, cpt in self._cpts.items():
            for p in cpt.parents:
                kids[p].append(n)
        order = []
        ready = [n for n in self._variables if indeg[n] == 0]
        while ready:
            n = ready.pop(0)
            order.append(n)
            for c in kids[n]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    ready.append(c)
        if len(order) != len(self._variables):
            stuck = sorted(n for n in self._variables if indeg[n] > 0)
            raise CycleError(f"parent lists contain a directed cycle through {stuck}")
        return tuple(order)

    @property
    def variables(self) -> Mapping[str, Variable]:
        return self._variables

    @property
    def cpts(self) -> Mapping[str, FullCpt | AdditiveCpt]:
        return self._cpts

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(self._variables)

    @property
    def cardinalities(self) -> dict[str, int]:
        return {n: v.cardinality for n, v in self._variables.items()}

    @property
    def topological_order(self) -> tuple[str, ...]:
        return self._order

    def variable(self, name: str) -> Variable:
        try:
            return self._variables[name]
        except KeyError:
            raise UnknownVariableError(f"unknown variable {name!r}") from None

    def parents(self, name: str) -> tuple[str, ...]:
        self.variable(name)
        return self._cpts[name].parents

    def children(self, name: str) -> tuple[str, ...]:
        self.variable(name)
        return tuple(n for n, c in self._cpts.items() if name in c.parents)

    def family(self, name: str) -> tuple[str, ...]:
        return (name,) + self.parents(name)

    def is_additive(self, name: str) -> bool:
        self.variable(name)
        return isinstance(self._cpts[name], AdditiveCpt)

    @property
    def additive_nodes(self) -> tuple[str, ...]:
        return tuple(n for n, c in self._cpts.items() if isinstance(c, AdditiveCpt))

    def edges(self) -> list[tuple[str, str]]:
        return [(p, n) for n, c in self._cpts.items() for p in c.parents]

    def replace(self, name: str, cpt: FullCpt | AdditiveCpt) -> "Network":
        self.variable(name)
        cpts = dict(self._cpts)
        cpts[name] = cpt
        return Network(self._variables.values(), cpts)

    def with_weights(self, name: str, weights: Sequence[float]) -> "Network":
        self.variable(name)
        cpt = self._cpts[name]
        if not isinstance(cpt, AdditiveCpt):
            raise ShapeError(f"{name!r} is not additive")
        return self.replace(name, cpt.with_weights(weights))

    def expanded(self) -> "Network":
        """Same network with every additive table replaced by its effective table."""
        if not self.additive_nodes:
            return self
        return Network(
            self._variables.values(), {n: effective_cpt(self, n) for n in self._variables}
        )

    def evidence_indices(self, evidence: "Evidence | Mapping[str, str] | None") -> dict[str, int]:
        if evidence is None:
            return {}
        items = evidence.assignments if isinstance(evidence, Evidence) else evidence
        return {n: self.variable(n).index(s) for n, s in items.items()}

    def __eq__(self, other):
        if not isinstance(other, Network):
            return NotImplemented
        return (
            list(self._variables.values()) == list(other._variables.values())
            and dict(self._cpts) == dict(other._cpts)
        )

    __hash__ = None

    def __repr__(self):
        return f"Network({len(self._variables)} variables, additive={list(self.additive_nodes)})"


@dataclass(frozen=True)
class Evidence:
    assignments: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "assignments", MappingProxyType(dict(self.assignments)))

    @classmethod
    def parse(cls, text: str | None) -> "Evidence":
        """Parse ``"A=s1,B=s2"``. Repeating a variable is an error."""
        out = {}
        for item in (text or "").split(","):
            item = item.strip()
            if not item:
                continue
            name, sep, state = item.partition("=")
            if not sep or not name.strip() or not state.strip():
                raise NetworkSyntaxError(f"bad evidence item {item!r}; expected VAR=STATE")
            name = name.strip()
            if name in out:
                raise NetworkSyntaxError(f"variable {name!r} observed twice")
            out[name] = state.strip()
        return cls(out)

    def validate(self, network: Network) -> "Evidence":
        network.evidence_indices(self)
        return self

    def __len__(self):
        return len(self.assignments)

    def __hash__(self):
        return hash(tuple(sorted(self.assignments.items())))

    def __eq__(self, other):
        if not isinstance(other, Evidence):
            return NotImplemented
        return dict(self.assignments) == dict(other.assignments)


def as_evidence(evidence) -> Evidence:
    if evidence is None:
        return Evidence()
    if isinstance(evidence, Evidence):
        return evidence
    if isinstance(evidence, str):
        return Evidence.parse(evidence)
    return Evidence(dict(evidence))


# ---------------------------------------------------------------------------
# effective tables


def _config_grid(cards: Sequence[int]) -> np.ndarray:
    """All configurations as rows of state indices, first column most significant."""
    if not cards:
        return np.zeros((1, 0), dtype=np.intp)
    return np.indices(tuple(cards)).reshape(len(cards), -1).T


def restrict_rows(parents: Sequence[str], subset: Sequence[str], cards: Mapping[str, int]) -> np.ndarray:
    """For each full parent configuration, the row index into a table given ``subset``."""
    grid = _config_grid([cards[p] for p in parents])
    if not subset:
        return np.zeros(grid.shape[0], dtype=np.intp)
    pos = [list(parents).index(s) for s in subset]
    return np.ravel_multi_index(tuple(grid[:, pos].T), tuple(cards[s] for s in subset))


def expand_terms(cpt: AdditiveCpt, cards: Mapping[str, int]) -> np.ndarray:
    """Stack of term tables lifted to the full parent set, shape (k, rows, card)."""
    return np.stack(
        [t.table.rows[restrict_rows(cpt.parents, t.given, cards)] for t in cpt.terms]
    )


def effective_cpt(network: Network, node: str) -> FullCpt:
    """Expand an additive table into the equivalent full table.

    Full tables are returned unchanged (the same object).
    """
    cpt = network.cpts[network.variable(node).name]
    if isinstance(cpt, FullCpt):
        return cpt
    lifted = expand_terms(cpt, network.cardinalities)
    rows = np.tensordot(cpt.weights, lifted, axes=1)
    return FullCpt(node, cpt.parents, rows)


def data_requirement(cardinalities: Sequence[int], cases_per_config: int = 10) -> int:
    """Cases needed to see every parent configuration ``cases_per_config`` times."""
    return int(cases_per_config) * math.prod(int(c) for c in cardinalities)


# ---------------------------------------------------------------------------
# network files


def _mark(exc) -> tuple[int | None, int | None]:
    mark = getattr(exc, "problem_mark", None) or getattr(exc, "context_mark", None)
    if mark is None:
        return None, None
    return mark.line + 1, mark.column + 1


def _require(obj, key, where, kind=None):
    if not isinstance(obj, dict) or key not in obj:
        raise NetworkSyntaxError(f"{where}: missing key {key!r}")
    value = obj[key]
    if kind is not None and not isinstance(value, kind):
        raise NetworkSyntaxError(f"{where}.{key}: expected {kind.__name__}")
    return value


def _rows(value, where):
    if not isinstance(value, list) or not all(isinstance(r, list) for r in value):
        raise NetworkSyntaxError(f"{where}: rows must be a list of lists")
    try:
        arr = np.array(value, dtype=float)
    except (TypeError, ValueError):
        raise NetworkSyntaxError(f"{where}: rows must be numeric and rectangular") from None
    if arr.ndim != 2:
        raise NetworkSyntaxError(f"{where}: rows must be rectangular")
    return arr


def _names(value, where):
    if not isinstance(value, list):
        raise NetworkSyntaxError(f"{where}: expected a list of names")
    return tuple(str(v) for v in value)


def network_from_dict(doc) -> Network:
    if not isinstance(doc, dict):
        raise NetworkSyntaxError("document must be a mapping with 'variables' and 'nodes'")
    variables = []
    for i, v in enumerate(_require(doc, "variables", "document", list)):
        where = f"variables[{i}]"
        variables.append(
            Variable(str(_require(v, "name", where)), _names(_require(v, "states", where), where))
        )
    declared = {v.name for v in variables}
    cpts = {}
    for i, node in enumerate(_require(doc, "nodes", "document", list)):
        where = f"nodes[{i}]"
        var = str(_require(node, "var", where))
        if var not in declared:
            raise DanglingReferenceError(f"{where}: undeclared variable {var!r}")
        if var in cpts:
            raise NetworkSyntaxError(f"{where}: second table for {var!r}")
        parents = _names(node.get("parents", []) or [], where + ".parents")
        for p in parents:
            if p not in declared:
                raise DanglingReferenceError(f"{where}: {var!r} has undeclared parent {p!r}")
        cpt = _require(node, "cpt", where, dict)
        kind = cpt.get("type", "full")
        if kind == "full":
            cpts[var] = FullCpt(var, parents, _rows(_require(cpt, "rows", where + ".cpt"), where))
        elif kind == "additive":
            terms = []
            for j, t in enumerate(_require(cpt, "terms", where + ".cpt", list)):
                tw = f"{where}.cpt.terms[{j}]"
                given = _names(_require(t, "given", tw), tw)
                for g in given:
                    if g not in declared:
                        raise DanglingReferenceError(f"{tw}: undeclared variable {g!r}")
                weight = _require(t, "weight", tw)
                if not isinstance(weight, (int, float)) or isinstance(weight, bool):
                    raise NetworkSyntaxError(f"{tw}.weight: expected a number")
                terms.append(Term(float(weight), FullCpt(var, given, _rows(_require(t, "rows", tw), tw))))
            cpts[var] = AdditiveCpt(var, parents, tuple(terms))
        else:
            raise NetworkSyntaxError(f"{where}.cpt.type: expected 'full' or 'additive', got {kind!r}")
    return Network(variables, cpts)


def parse_network(text: str) -> Network:
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        line, col = _mark(exc)
        problem = getattr(exc, "problem", None) or str(exc)
        raise NetworkSyntaxError(problem, line, col) from None
    return network_from_dict(doc)


def network_to_dict(network: Network) -> dict:
    nodes = []
    for name, cpt in network.cpts.items():
        entry = {"var": name, "parents": list(cpt.parents)}
        if isinstance(cpt, FullCpt):
            entry["cpt"] = {"type": "full", "rows": cpt.rows.tolist()}
        else:
            entry["cpt"] = {
                "type": "additive",
                "terms": [
                    {"weight": float(t.weight), "given": list(t.given), "rows": t.table.rows.tolist()}
                    for t in cpt.terms
                ],
            }
        nodes.append(entry)
    return {
        "variables": [{"name": v.name, "states": list(v.states)} for v in network.variables.values()],
        "nodes": nodes,
    }


def serialize_network(network: Network) -> str:
    return yaml.safe_dump(network_to_dict(network), sort_keys=False, default_flow_style=None)


def load_network(path) -> Network:
    with open(path, encoding="utf-8") as fh:
        return parse_network(fh.read())


# ---------------------------------------------------------------------------
# case files


@dataclass(frozen=True)
class CaseSet:
    columns: tuple[str, ...]
    rows: tuple[tuple[str | None, ...], ...]

    def __len__(self):
        return len(self.rows)

    @property
    def complete(self) -> int:
        return sum(all(c is not None for c in r) for r in self.rows)

    def evidence(self) -> list[Evidence]:
        """One Evidence per case, omitting missing cells."""
        return [
            Evidence({c: s for c, s in zip(self.columns, r) if s is not None}) for r in self.rows
        ]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([MISSING if s is None else s for s in r])
        return buf.getvalue()


def parse_cases(text: str, network: Network) -> CaseSet:
    reader = csv.reader(io.StringIO(text))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise NetworkSyntaxError("case file is empty") from None
    variables = [network.variable(h) for h in header]
    rows = []
    for lineno, raw in enumerate(reader, start=2):
        if not raw or all(not c.strip() for c in raw):
            continue
        if len(raw) != len(header):
            raise NetworkSyntaxError(f"expected {len(header)} cells, got {len(raw)}", lineno, 1)
        row = []
        for var, cell in zip(variables, raw):
            cell = cell.strip()
            if cell == MISSING:
                row.append(None)
            else:
                var.index(cell)
                row.append(cell)
        rows.append(tuple(row))
    return CaseSet(tuple(header), tuple(rows))


def load_cases(path, network: Network) -> CaseSet:
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_cases(fh.read(), network)
