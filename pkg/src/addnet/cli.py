"""Command-line interface.

Exit codes: 0 success, 1 user error (bad input, impossible evidence, flagged
fit), 2 internal error. ``--json`` output rounds floats to 9 significant
digits and sorts keys, so identical inputs give byte-identical output.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys

import numpy as np

from . import __version__
from .decompose import additive_skeleton, prescribe_partition
from .dissect import abnm_query, build_plan
from .errors import AddnetError
from .exact import enumerate_joint, enumeration_cap, ls_query, query_by_enumeration
from .fit import (
    TermLikelihood,
    WeightPosterior,
    bayes_update_batch,
    cross_entropy_by_node,
    cross_entropy_total,
    fit_decomposition,
)
from .graphops import compile_network, parse_icg
from .model import AdditiveCpt, Evidence, load_cases, load_network, serialize_network
from .sampling import forward_sample

log = logging.getLogger("addnet")


class UserError(Exception):
    pass


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return float(f"{x:.9g}")
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2)


def _fmt(x) -> str:
    return "inf" if math.isinf(x) else f"{x:.9g}"


def _emit(args, payload: dict, text: str) -> None:
    print(dumps(payload) if getattr(args, "json", False) else text)


def _dist_text(states, probs) -> str:
    width = max(len(s) for s in states)
    return "\n".join(f"  {s:<{width}}  {_fmt(p)}" for s, p in zip(states, probs))


# ---------------------------------------------------------------------------


def cmd_infer(args) -> int:
    net = load_network(args.network)
    evidence = Evidence.parse(args.evidence).validate(net)
    payload = {"query": args.query, "method": args.method, "evidence": dict(evidence.assignments)}
    if args.method == "enum":
        res = query_by_enumeration(net, args.query, evidence)
    elif args.method == "ls":
        res = ls_query(net, args.query, evidence)
    else:
        plan = build_plan(net)
        res = abnm_query(plan, args.query, evidence, mode=args.combination)
        payload.update(
            combination=args.combination,
            leaf_count=len(plan.leaves),
            leaf_weights=res.leaf_weights,
            leaf_likelihoods=res.leaf_likelihoods,
            modes_differ=res.modes_differ,
        )
        if res.modes_differ:
            other = "naive" if args.combination == "exact" else "exact"
            payload["alternate"] = {
                "combination": other,
                "distribution": dict(zip(res.states, getattr(res, other).tolist())),
            }
    payload["distribution"] = res.as_dict()
    payload["evidence_likelihood"] = res.evidence_likelihood
    lines = [
        f"Pr[{args.query} | {args.evidence or 'no evidence'}]  (method {args.method})",
        _dist_text(res.states, res.probabilities),
        f"evidence likelihood: {_fmt(res.evidence_likelihood)}",
    ]
    if args.method == "abnm":
        lines.append(f"leaves: {payload['leaf_count']}  weights: {[_fmt(w) for w in res.leaf_weights]}")
        if res.modes_differ:
            alt = payload["alternate"]
            lines.append(f"{alt['combination']} combination differs:")
            lines.append(_dist_text(res.states, list(alt["distribution"].values())))
    _emit(args, payload, "\n".join(lines))
    return 0


def cmd_plan(args) -> int:
    net = load_network(args.network)
    plan = build_plan(net)
    report = plan.report()
    lines = [f"largest clique table: {report['max_table_size_before']} -> {report['max_table_size_after']}"]
    if not report["steps"]:
        lines.append("no dissection reduces the largest clique")
    for s in report["steps"]:
        where = "/".join(s["path"]) or "root"
        subsets = " | ".join("{" + ", ".join(x) + "}" for x in s["subsets"])
        lines.append(f"dissect {s['node']} at {where}: {subsets}  ({s['before']} -> {s['after']})")
    for i, leaf in enumerate(report["leaves"]):
        cliques = ", ".join("{" + ",".join(c["members"]) + f"}}:{c['table_size']}" for c in leaf["cliques"])
        lines.append(f"leaf {i}  weight {_fmt(leaf['weight'])}  max {leaf['max_table_size']}  {cliques}")
    _emit(args, report, "\n".join(lines))
    return 0


def _validate_checks(net) -> list[dict]:
    checks = [
        {"check": "parse", "ok": True, "detail": f"{len(net.names)} variables"},
        {"check": "acyclic", "ok": True, "detail": " -> ".join(net.topological_order)},
    ]
    for n in net.additive_nodes:
        cpt = net.cpts[n]
        checks.append({
            "check": f"additive:{n}",
            "ok": abs(float(cpt.weights.sum()) - 1.0) <= 1e-9,
            "detail": f"{len(cpt.terms)} terms, weights {cpt.weights.tolist()}",
        })
    tree = compile_network(net)
    checks.append({
        "check": "running-intersection",
        "ok": tree.has_running_intersection(),
        "detail": f"{len(tree.cliques)} cliques, max table {tree.max_table_size}",
    })
    covered = all(
        any(set(net.family(n)) <= set(c) for c in tree.cliques) for n in net.names
    )
    checks.append({"check": "family-coverage", "ok": covered, "detail": ""})
    plan = build_plan(net)
    wsum = sum(leaf.weight for leaf in plan.leaves)
    checks.append({
        "check": "plan-weights",
        "ok": abs(wsum - 1.0) <= 1e-9,
        "detail": f"{len(plan.leaves)} leaves",
    })
    if math.prod(net.cardinalities.values()) <= enumeration_cap():
        joint = enumerate_joint(net)
        worst = 0.0
        for v in net.names:
            a = query_by_enumeration(net, v, None, joint).probabilities
            b = ls_query(net, v, None, tree).probabilities
            c = abnm_query(plan, v).probabilities
            worst = max(worst, float(np.max(np.abs(a - b))), float(np.max(np.abs(a - c))))
        checks.append({"check": "oracle-agreement", "ok": worst <= 1e-9, "detail": f"max deviation {worst:.3g}"})
    return checks


def cmd_validate(args) -> int:
    net = load_network(args.network)
    checks = _validate_checks(net)
    ok = all(c["ok"] for c in checks)
    text = "\n".join(
        f"{'PASS' if c['ok'] else 'FAIL'}  {c['check']}" + (f"  ({c['detail']})" if c["detail"] else "")
        for c in checks
    )
    _emit(args, {"ok": ok, "checks": checks}, text)
    return 0 if ok else 1


def cmd_partition(args) -> int:
    with open(args.icgraph, encoding="utf-8") as fh:
        graph = parse_icg(fh.read())
    part = prescribe_partition(graph)
    net = load_network(args.network) if args.network else None
    parents = list(graph.vertices)
    if net is not None and args.node:
        parents = list(net.parents(args.node))
        if set(parents) != set(graph.vertices):
            raise UserError(f"graph vertices {sorted(graph.vertices)} are not the parents of {args.node!r}")
    payload = {
        "vertices": list(graph.vertices),
        "clique": part.members,
        "subsets": {m: list(s) for m, s in zip(part.members, part.subsets)},
        "alternatives": [list(a) for a in part.alternatives],
        "skeleton": additive_skeleton(args.node or "Y", parents, part, net if args.node else None),
    }
    print(dumps(payload))
    return 0


def cmd_fit(args) -> int:
    net = load_network(args.network)
    with open(args.decomp, encoding="utf-8") as fh:
        try:
            decomp = json.load(fh)
        except json.JSONDecodeError as exc:
            raise UserError(f"{args.decomp}: {exc}") from None
    if not isinstance(decomp, dict) or not all(isinstance(v, list) for v in decomp.values()):
        raise UserError("decomposition file must map node names to lists of parent subsets")
    result = fit_decomposition(net, decomp)
    nodes = {}
    flagged = []
    for r in result.nodes:
        entry = r.fit.as_dict()
        entry["subsets"] = [list(s) for s in r.subsets]
        entry["fallback_rows"] = {str(k): v for k, v in r.fallback_rows.items()}
        nodes[r.node] = entry
        if r.fit.diverged or r.fit.non_identifiable:
            flagged.append(r.node)
    payload = {"nodes": nodes, "total_cross_entropy": result.total, "flagged": flagged}
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(serialize_network(result.abnm))
    lines = []
    for r in result.nodes:
        f = r.fit
        lines.append(
            f"{r.node}: weights {[_fmt(w) for w in f.weights]}  I = {_fmt(f.value)}"
            f"  residual {'-' if f.residual_norm is None else _fmt(f.residual_norm)}"
            + ("  [diverged]" if f.diverged else "")
            + ("  [non-identifiable]" if f.non_identifiable else "")
        )
    lines.append(f"total cross entropy: {_fmt(result.total)}")
    _emit(args, payload, "\n".join(lines))
    return 1 if flagged else 0


def cmd_crossent(args) -> int:
    ref = load_network(args.network)
    abnm = load_network(args.abnm)
    total = cross_entropy_total(ref, abnm)
    per_node = cross_entropy_by_node(ref, abnm)
    payload = {"total": total, "nodes": per_node}
    lines = [f"cross entropy: {_fmt(total)} nats"]
    lines += [f"  {n}: {_fmt(v)}" for n, v in per_node.items() if v != 0.0]
    _emit(args, payload, "\n".join(lines))
    return 0


def cmd_update_weights(args) -> int:
    net = load_network(args.network)
    cpt = net.cpts[net.variable(args.node).name]
    if not isinstance(cpt, AdditiveCpt):
        raise UserError(f"{args.node!r} does not have an additive table")
    cases = load_cases(args.cases, net)
    prior = WeightPosterior.uniform(len(cpt.terms), args.grid)
    post = bayes_update_batch(prior, net, args.node, cases, TermLikelihood(net, args.node))
    intervals = [post.credible_interval(j, args.level) for j in range(len(cpt.terms))]
    payload = {
        "node": args.node,
        "cases": len(cases),
        "grid_step": args.grid,
        "grid_points": len(post.grid),
        "mean": post.mean(),
        "mode": post.mode(),
        "credible_level": args.level,
        "credible_intervals": intervals,
        "subsets": [list(s) for s in cpt.subsets],
    }
    lines = [f"{args.node}: {len(cases)} cases, {len(post.grid)} grid points"]
    for j, s in enumerate(cpt.subsets):
        lo, hi = intervals[j]
        lines.append(
            f"  w{j} given {{{', '.join(s)}}}: mean {_fmt(post.mean()[j])}  mode {_fmt(post.mode()[j])}"
            f"  {int(args.level * 100)}% [{_fmt(lo)}, {_fmt(hi)}]"
        )
    _emit(args, payload, "\n".join(lines))
    return 0


def cmd_sample(args) -> int:
    net = load_network(args.network)
    text = forward_sample(net, args.n, args.seed).to_csv()
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="addnet", description="Additive belief-network toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("infer", help="posterior of one variable")
    p.add_argument("--network", required=True)
    p.add_argument("--query", required=True)
    p.add_argument("--evidence", default="", help="VAR=STATE,...")
    p.add_argument("--method", choices=("abnm", "ls", "enum"), default="abnm")
    p.add_argument("--combination", choices=("exact", "naive"), default="exact")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("plan", help="dissection plan and clique table sizes")
    p.add_argument("--network", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("validate", help="check network invariants")
    p.add_argument("--network", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("partition", help="term subsets from an intercausal graph")
    p.add_argument("--icgraph", required=True)
    p.add_argument("--node", help="node name for the skeleton")
    p.add_argument("--network", help="network supplying parent order and row shapes")
    p.set_defaults(func=cmd_partition)

    p = sub.add_parser("fit", help="fit additive weights against a full network")
    p.add_argument("--network", required=True)
    p.add_argument("--decomp", required=True, help="JSON: node -> list of parent subsets")
    p.add_argument("--output", help="write the fitted additive network here")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("crossent", help="cross entropy of an additive network")
    p.add_argument("--network", required=True)
    p.add_argument("--abnm", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_crossent)

    p = sub.add_parser("update-weights", help="Bayesian posterior over a node's weights")
    p.add_argument("--network", required=True)
    p.add_argument("--cases", required=True)
    p.add_argument("--node", required=True)
    p.add_argument("--grid", type=float, default=0.01)
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_update_weights)

    p = sub.add_parser("sample", help="forward-sample complete cases as CSV")
    p.add_argument("--network", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output")
    p.set_defaults(func=cmd_sample)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except (AddnetError, UserError) as exc:
        code = getattr(exc, "code", "error")
        print(f"error [{code}]: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error [file-not-found]: {exc.filename}: no such file", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error [io]: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001
        log.debug("internal error", exc_info=True)
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
