import time

import numpy as np
import pytest

from addnet.errors import ImpossibleEvidenceError, SizeLimitError, UnknownVariableError
from addnet.exact import (
    enumerate_joint,
    ls_calibrate,
    ls_marginal,
    ls_query,
    marginalize,
    query_by_enumeration,
)
from addnet.graphops import compile_network
from addnet.model import Evidence, FullCpt, Network, Variable
from netgen import brute_query, instantiations, joint_probability, random_evidence, random_network


def deterministic_pair():
    vs = [Variable("A", "01"), Variable("B", "01")]
    return Network(vs, {
        "A": FullCpt("A", (), [[0.5, 0.5]]),
        "B": FullCpt("B", ("A",), [[1.0, 0.0], [0.0, 1.0]]),
    })


class TestEnumeration:
    def test_riot_normalized(self, riot):
        joint = enumerate_joint(riot)
        assert joint.values.size == 16
        assert joint.values.sum() == pytest.approx(1.0, abs=1e-12)

    def test_single_node(self):
        net = Network([Variable("A", "01")], {"A": FullCpt("A", (), [[0.5, 0.5]])})
        assert enumerate_joint(net).values.tolist() == [0.5, 0.5]

    def test_entries_match_direct_product(self, rng):
        for _ in range(10):
            net = random_network(rng, max_nodes=5, max_card=3)
            joint = enumerate_joint(net)
            for a in instantiations(net):
                assert joint.probability(a) == pytest.approx(joint_probability(net, a), abs=1e-15)

    def test_cap(self, alarmx, monkeypatch):
        with pytest.raises(SizeLimitError):
            enumerate_joint(alarmx, cap=1000)
        monkeypatch.setenv("ADDNET_ENUM_CAP", "100")
        with pytest.raises(SizeLimitError):
            enumerate_joint(alarmx)

    def test_riot_alarm_marginal(self, riot):
        # P(A=t) = sum_v P(v) sum_{r,b} P(r|v) P(b|v) P(A=t|r,b)
        eff = {(1, 1): 0.92, (1, 0): 0.548, (0, 1): 0.41, (0, 0): 0.038}
        pr = {0: [0.9, 0.1], 1: [0.2, 0.8]}
        pb = {0: [0.95, 0.05], 1: [0.7, 0.3]}
        expected = sum(
            0.5 * pr[v][r] * pb[v][b] * eff[(r, b)] for v in (0, 1) for r in (0, 1) for b in (0, 1)
        )
        res = query_by_enumeration(riot, "Alarm")
        assert res.probabilities[1] == pytest.approx(expected, abs=1e-12)
        assert res.evidence_likelihood == pytest.approx(1.0, abs=1e-12)

    def test_full_evidence_is_point_mass(self, riot):
        ev = {"Verdict": "g", "Riot": "t", "Burglary": "f", "Alarm": "t"}
        res = query_by_enumeration(riot, "Riot", ev)
        assert res.probabilities.tolist() == [0.0, 1.0]

    def test_impossible_evidence(self):
        with pytest.raises(ImpossibleEvidenceError):
            query_by_enumeration(deterministic_pair(), "A", {"A": "0", "B": "1"})


class TestCliqueTree:
    def test_empty_evidence_likelihood_one(self, riot):
        assert ls_calibrate(riot).evidence_likelihood == pytest.approx(1.0, abs=1e-12)

    def test_riot_evidence_likelihood(self, riot):
        cal = ls_calibrate(riot, {"Riot": "t"})
        assert cal.evidence_likelihood == pytest.approx(0.5 * 0.8 + 0.5 * 0.1, abs=1e-12)

    def test_verdict_prior(self, riot):
        np.testing.assert_allclose(ls_marginal(ls_calibrate(riot), "Verdict"), [0.5, 0.5], atol=1e-12)

    def test_impossible(self):
        with pytest.raises(ImpossibleEvidenceError):
            ls_calibrate(deterministic_pair(), {"A": "0", "B": "1"})

    def test_unknown_variable(self, riot):
        with pytest.raises(UnknownVariableError):
            ls_marginal(ls_calibrate(riot), "Nope")

    def test_precompiled_tree_untouched(self, riot):
        tree = compile_network(riot)
        before = [p.copy() for p in tree.potentials]
        ls_calibrate(riot, {"Alarm": "t"}, tree)
        for a, b in zip(before, tree.potentials):
            assert np.array_equal(a, b)

    def test_calibration_invariants(self, rng):
        for _ in range(50):
            net = random_network(rng)
            cal = ls_calibrate(net, random_evidence(rng, net))
            tree = cal.tree
            for pot in tree.potentials:
                assert pot.sum() == pytest.approx(1.0, abs=1e-9)
            for (i, j), sep in zip(tree.edges, tree.separators):
                a = marginalize(tree.potentials[i], tree.cliques[i], sep)
                b = marginalize(tree.potentials[j], tree.cliques[j], sep)
                np.testing.assert_allclose(a, b, rtol=0, atol=1e-9)

    def test_marginal_same_from_every_clique(self, rng):
        for _ in range(30):
            net = random_network(rng)
            cal = ls_calibrate(net, random_evidence(rng, net))
            for v in net.names:
                holders = cal.tree.containing(v)
                ref = ls_marginal(cal, v, holders[0])
                for h in holders[1:]:
                    np.testing.assert_allclose(ls_marginal(cal, v, h), ref, rtol=0, atol=1e-9)

    def test_matches_brute_force_oracle(self, rng):
        for _ in range(25):
            net = random_network(rng, max_nodes=6, max_card=3)
            ev = random_evidence(rng, net)
            cal = ls_calibrate(net, ev)
            for v in net.names:
                dist, mass = brute_query(net, v, ev)
                np.testing.assert_allclose(ls_marginal(cal, v), dist, rtol=0, atol=1e-9)
            assert cal.evidence_likelihood == pytest.approx(mass, abs=1e-9)

    def test_likelihood_chain_rule(self, rng):
        for _ in range(50):
            net = random_network(rng)
            names = list(net.names)
            a, b = rng.choice(names, size=2, replace=False) if len(names) > 1 else (names[0], names[0])
            e1 = {str(a): net.variable(str(a)).states[0]}
            e2 = {str(b): net.variable(str(b)).states[-1]}
            both = ls_calibrate(net, {**e1, **e2}).evidence_likelihood
            p1 = ls_calibrate(net, e1).evidence_likelihood
            cond = ls_calibrate(net, e1).tree
            # Pr[e2 | e1] from the e1-calibrated tree
            p2_given_1 = ls_marginal(ls_calibrate(net, e1), str(b))[net.variable(str(b)).index(e2[str(b)])]
            assert both == pytest.approx(p1 * p2_given_1, abs=1e-9)
            assert cond is not None


def test_runtime_tracks_largest_table(alarmx):
    from addnet.dissect import dissect_at

    small = dissect_at(alarmx, "x3", 0)
    big_tree, small_tree = compile_network(alarmx), compile_network(small)
    assert (big_tree.max_table_size, small_tree.max_table_size) == (3125, 125)

    def best_of(net, tree, reps=15):
        times = []
        for _ in range(reps):
            t = time.perf_counter()
            ls_calibrate(net, Evidence({"x1": "Low"}), tree)
            times.append(time.perf_counter() - t)
        return min(times)

    assert best_of(small, small_tree) < best_of(alarmx, big_tree)


def test_ls_query_agrees_with_enumeration_on_alarmx(alarmx):
    for v in alarmx.names:
        a = ls_query(alarmx, v, {"x1": "Low"}).probabilities
        b = query_by_enumeration(alarmx, v, {"x1": "Low"}).probabilities
        np.testing.assert_allclose(a, b, rtol=0, atol=1e-9)
