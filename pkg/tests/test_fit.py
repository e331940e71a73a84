import math

import numpy as np
import pytest

from addnet.errors import BoundaryError, ShapeError, StructureMismatchError
from addnet.exact import ls_calibrate, query_by_enumeration
from addnet.fit import (
    WeightPosterior,
    bayes_update_batch,
    bayes_update_weights,
    cross_entropy_by_node,
    cross_entropy_total,
    family_marginal,
    fit_decomposition,
    induce_cpt,
    kkt_violation,
    marginalize_cpt,
    node_cross_entropy,
    optimize_weights,
    project_simplex,
    simplex_grid,
    stationarity_residual,
)
from addnet.model import AdditiveCpt, CaseSet, FullCpt, Term, effective_cpt
from addnet.sampling import forward_sample
from netgen import fit_problem, random_network


def riot_problem(riot):
    fam = family_marginal(riot, "Alarm")
    return fam, effective_cpt(riot, "Alarm"), riot.cpts["Alarm"]


def grid_minimum(fam, ref, terms, step):
    return min(node_cross_entropy(fam, ref, terms, w) for w in simplex_grid(len(terms.terms), step))


class TestFamilyMarginal:
    def test_methods_agree(self, rng):
        for _ in range(20):
            net = random_network(rng, max_nodes=6, max_card=3)
            for n in net.names:
                a = family_marginal(net, n, "jt").values
                b = family_marginal(net, n, "enum").values
                np.testing.assert_allclose(a, b, rtol=0, atol=1e-12)

    def test_root_prior(self, riot):
        fam = family_marginal(riot, "Verdict")
        np.testing.assert_allclose(fam.values, [[0.5, 0.5]])

    def test_bad_method(self, riot):
        with pytest.raises(ValueError):
            family_marginal(riot, "Alarm", "other")


class TestCrossEntropy:
    def test_zero_at_true_weights(self, riot):
        fam, ref, terms = riot_problem(riot)
        assert node_cross_entropy(fam, ref, terms, [0.6, 0.4]) == pytest.approx(0.0, abs=1e-15)
        assert node_cross_entropy(fam, ref, terms, [0.3, 0.7]) > 0.0

    def test_matches_direct_sum(self, riot):
        fam, ref, terms = riot_problem(riot)
        alt = terms.with_weights([0.2, 0.8])
        mix = effective_cpt(riot.replace("Alarm", alt), "Alarm").rows
        expected = float(np.sum(fam.values * np.log(ref.rows / mix)))
        assert node_cross_entropy(fam, ref, terms, [0.2, 0.8]) == pytest.approx(expected, abs=1e-14)

    def test_total_is_sum_of_nodes(self, riot):
        alt = riot.with_weights("Alarm", [0.25, 0.75])
        total = cross_entropy_total(riot, alt)
        by_node = cross_entropy_by_node(riot, alt)
        assert total == pytest.approx(sum(by_node.values()), abs=1e-12)
        assert set(k for k, v in by_node.items() if v > 0) == {"Alarm"}

    def test_total_decomposes_on_random(self, rng):
        for _ in range(20):
            ref = random_network(rng, max_nodes=6, max_card=3)
            other = ref
            for n in ref.additive_nodes:
                k = len(ref.cpts[n].terms)
                other = other.with_weights(n, rng.dirichlet(np.ones(k)).tolist())
            total = cross_entropy_total(ref, other)
            assert total >= 0
            assert total == pytest.approx(sum(cross_entropy_by_node(ref, other).values()), abs=1e-10)

    def test_identical_is_zero(self, alarmx):
        assert cross_entropy_total(alarmx, alarmx) == 0.0

    def test_support_violation_is_inf(self, riot):
        zero = riot.replace("Verdict", FullCpt("Verdict", (), [[1.0, 0.0]]))
        assert cross_entropy_total(riot, zero) == math.inf
        assert cross_entropy_by_node(riot, zero)["Verdict"] == math.inf

    def test_structure_mismatch(self, riot, alarmx):
        with pytest.raises(StructureMismatchError):
            cross_entropy_total(riot, alarmx)

    def test_convex_along_segments(self, rng):
        for _ in range(30):
            fam, ref, terms = fit_problem(rng, 3)
            a, b = rng.dirichlet(np.ones(3), size=2)
            fa = node_cross_entropy(fam, ref, terms, a)
            fb = node_cross_entropy(fam, ref, terms, b)
            for t in (0.25, 0.5, 0.75):
                mid = node_cross_entropy(fam, ref, terms, t * a + (1 - t) * b)
                assert mid <= t * fa + (1 - t) * fb + 1e-12


class TestResidual:
    def test_is_negative_gradient(self, rng):
        h = 1e-6
        for _ in range(20):
            fam, ref, terms = fit_problem(rng, int(rng.integers(2, 4)))
            k = len(terms.terms)
            w = rng.dirichlet(np.full(k, 3.0))
            res = stationarity_residual(fam, ref, terms, w)
            for j in range(k - 1):
                up, down = w.copy(), w.copy()
                up[j] += h
                up[-1] -= h
                down[j] -= h
                down[-1] += h
                fd = (node_cross_entropy(fam, ref, terms, up) - node_cross_entropy(fam, ref, terms, down)) / (2 * h)
                assert res[j] == pytest.approx(-fd, abs=1e-5)

    def test_identical_terms_give_zero(self, riot):
        fam, ref, _ = riot_problem(riot)
        same = FullCpt("Alarm", ("Riot", "Burglary"), [[0.5, 0.5], [0.4, 0.6], [0.2, 0.8], [0.1, 0.9]])
        terms = AdditiveCpt("Alarm", ("Riot", "Burglary"), (Term(0.5, same), Term(0.5, same)))
        r = stationarity_residual(fam, ref, terms, [0.3, 0.7])
        np.testing.assert_allclose(r, [0.0], atol=1e-15)

    def test_boundary(self, riot):
        fam, ref, terms = riot_problem(riot)
        with pytest.raises(BoundaryError):
            stationarity_residual(fam, ref, terms, [1.0, 0.0])

    def test_wrong_length(self, riot):
        fam, ref, terms = riot_problem(riot)
        with pytest.raises(ShapeError):
            node_cross_entropy(fam, ref, terms, [1.0])


class TestOptimize:
    def test_exact_mixture_two(self, rng):
        fam, ref, terms = fit_problem(rng, 2, mixture_weights=[0.3, 0.7])
        fit = optimize_weights(fam, ref, terms)
        np.testing.assert_allclose(fit.weights, [0.3, 0.7], atol=1e-6)
        assert fit.value <= 1e-10
        assert fit.residual_norm <= 1e-6

    def test_exact_mixture_three(self, rng):
        w = [0.2, 0.5, 0.3]
        fam, ref, terms = fit_problem(rng, 3, mixture_weights=w)
        fit = optimize_weights(fam, ref, terms)
        np.testing.assert_allclose(fit.weights, w, atol=1e-6)
        assert fit.value <= 1e-10

    def test_riot(self, riot):
        fam, ref, terms = riot_problem(riot)
        fit = optimize_weights(fam, ref, terms)
        np.testing.assert_allclose(fit.weights, [0.6, 0.4], atol=1e-6)
        assert fit.value <= grid_minimum(fam, ref, terms, 1e-4) + 1e-9

    def test_not_worse_than_grid(self, rng):
        for _ in range(10):
            k = int(rng.integers(2, 4))
            fam, ref, terms = fit_problem(rng, k)
            fit = optimize_weights(fam, ref, terms)
            assert fit.weights.sum() == pytest.approx(1.0, abs=1e-12)
            assert np.all(fit.weights >= 0)
            assert fit.value <= grid_minimum(fam, ref, terms, 1e-2) + 1e-9
            assert kkt_violation(fam, ref, terms, fit.weights) <= 1e-6

    def test_non_identifiable(self, riot):
        fam, ref, _ = riot_problem(riot)
        same = FullCpt("Alarm", ("Riot", "Burglary"), effective_cpt(riot, "Alarm").rows)
        terms = AdditiveCpt("Alarm", ("Riot", "Burglary"), (Term(0.5, same), Term(0.5, same)))
        fit = optimize_weights(fam, ref, terms)
        assert fit.non_identifiable
        np.testing.assert_allclose(fit.weights, [0.5, 0.5])
        assert stationarity_residual(fam, ref, terms, [0.3, 0.7]) == pytest.approx([0.0], abs=1e-12)

    def test_boundary_solution(self, riot):
        fam, ref, _ = riot_problem(riot)
        good = FullCpt("Alarm", ("Riot", "Burglary"), effective_cpt(riot, "Alarm").rows)
        bad = FullCpt("Alarm", ("Riot",), [[0.5, 0.5], [0.5, 0.5]])
        terms = AdditiveCpt("Alarm", ("Riot", "Burglary"), (Term(0.5, good), Term(0.5, bad)))
        fit = optimize_weights(fam, ref, terms)
        np.testing.assert_allclose(fit.weights, [1.0, 0.0], atol=1e-9)
        assert not fit.interior
        assert fit.residual_norm is None
        assert kkt_violation(fam, ref, terms, fit.weights) <= 1e-9

    def test_project_simplex(self):
        np.testing.assert_allclose(project_simplex([0.5, 0.5]), [0.5, 0.5])
        np.testing.assert_allclose(project_simplex([2.0, 0.0]), [1.0, 0.0])
        np.testing.assert_allclose(project_simplex([0.4, 0.4, 0.4]), [1 / 3] * 3)


class TestTermTables:
    def test_full_subset_is_identity(self, riot):
        table, fallback = marginalize_cpt(riot, "Alarm", ("Riot", "Burglary"))
        np.testing.assert_array_equal(table.rows, effective_cpt(riot, "Alarm").rows)
        assert fallback == []

    def test_matches_conditional(self, riot):
        table, _ = marginalize_cpt(riot, "Alarm", ("Riot",))
        for r, state in enumerate(("f", "t")):
            ref = query_by_enumeration(riot, "Alarm", {"Riot": state}).probabilities
            np.testing.assert_allclose(table.rows[r], ref, atol=1e-12)

    def test_independent_of_removed_when_constant(self, riot):
        rows = [[0.3, 0.7], [0.3, 0.7], [0.6, 0.4], [0.6, 0.4]]
        net = riot.replace("Alarm", FullCpt("Alarm", ("Riot", "Burglary"), rows))
        table, _ = marginalize_cpt(net, "Alarm", ("Riot",))
        np.testing.assert_allclose(table.rows, [[0.3, 0.7], [0.6, 0.4]], atol=1e-12)

    def test_fallback_rows(self, riot):
        net = riot.replace("Riot", FullCpt("Riot", ("Verdict",), [[1.0, 0.0], [1.0, 0.0]]))
        table, fallback = marginalize_cpt(net, "Alarm", ("Riot",))
        assert fallback == [1]
        full = effective_cpt(net, "Alarm").rows
        np.testing.assert_allclose(table.rows[1], full[2:].mean(axis=0))

    def test_induce_counts(self, riot):
        cases = CaseSet(("Alarm", "Riot"), (("f", "t"), ("f", "t"), ("f", "t"), ("t", "t"), ("t", None)))
        table, skipped = induce_cpt(cases, riot, "Alarm", ("Riot",))
        assert skipped == 1
        np.testing.assert_allclose(table.rows[1], [4 / 6, 2 / 6])
        np.testing.assert_allclose(table.rows[0], [0.5, 0.5])

    def test_induce_empty_and_unsmoothed(self, riot):
        empty = CaseSet(("Alarm", "Riot"), ())
        table, _ = induce_cpt(empty, riot, "Alarm", ("Riot",))
        np.testing.assert_allclose(table.rows, [[0.5, 0.5]] * 2)
        table, _ = induce_cpt(empty, riot, "Alarm", ("Riot",), pseudocount=0.0)
        np.testing.assert_allclose(table.rows, [[0.5, 0.5]] * 2)

    def test_fit_decomposition_riot(self, riot):
        full = riot.replace("Alarm", effective_cpt(riot, "Alarm"))
        result = fit_decomposition(full, {"Alarm": [["Riot"], ["Burglary"]]})
        assert result.total >= 0
        assert result.abnm.is_additive("Alarm")
        assert cross_entropy_total(full, result.abnm) == pytest.approx(result.total, abs=1e-10)


class TestPosterior:
    def test_grid(self):
        g = simplex_grid(3, 0.5)
        assert len(g) == 6
        np.testing.assert_allclose(g.sum(axis=1), 1.0)
        assert len(simplex_grid(2, 0.01)) == 101
        with pytest.raises(ShapeError):
            simplex_grid(2, 0.3)

    def test_no_cases_keeps_prior(self, riot):
        prior = WeightPosterior.uniform(2, 0.1)
        post = bayes_update_batch(prior, riot, "Alarm", [])
        np.testing.assert_allclose(post.masses, prior.masses)

    def test_two_point_prior(self, riot):
        grid = np.array([[1.0, 0.0], [0.0, 1.0]])
        prior = WeightPosterior(grid, np.array([0.5, 0.5]), 1.0)
        case = {"Alarm": "t", "Verdict": "g"}
        post = bayes_update_weights(prior, riot, "Alarm", case)
        l1 = ls_calibrate(riot.with_weights("Alarm", [1.0, 0.0]), case).evidence_likelihood
        l2 = ls_calibrate(riot.with_weights("Alarm", [0.0, 1.0]), case).evidence_likelihood
        np.testing.assert_allclose(post.masses, [l1 / (l1 + l2), l2 / (l1 + l2)], atol=1e-12)

    def test_likelihood_linear_in_weights(self, riot):
        prior = WeightPosterior.uniform(2, 0.25)
        case = {"Alarm": "t"}
        post = bayes_update_weights(prior, riot, "Alarm", case)
        direct = np.array([
            ls_calibrate(riot.with_weights("Alarm", w.tolist()), case).evidence_likelihood
            for w in prior.grid
        ])
        np.testing.assert_allclose(post.masses, direct / direct.sum(), atol=1e-12)

    def test_sequential_equals_batch(self, riot):
        cases = forward_sample(riot, 50, np.random.default_rng(3)).evidence()
        prior = WeightPosterior.uniform(2, 0.05)
        seq = prior
        for c in cases:
            seq = bayes_update_weights(seq, riot, "Alarm", c)
        batch = bayes_update_batch(prior, riot, "Alarm", cases)
        np.testing.assert_allclose(seq.masses, batch.masses, atol=1e-9)

    def test_credible_interval_contains_mean(self, riot):
        cases = forward_sample(riot.with_weights("Alarm", [0.7, 0.3]), 300, np.random.default_rng(5))
        post = bayes_update_batch(WeightPosterior.uniform(2, 0.01), riot, "Alarm", cases)
        lo, hi = post.credible_interval(0, 0.95)
        assert lo <= post.mean()[0] <= hi
