import math

import numpy as np
import pytest
from joblib import Parallel, delayed

from app.core.errors import FitError, GraphError
from app.services.equivalence import collider_equivalents
from app.services.gaussian_model import Parameters, phi, sample_data, sample_parameters
from app.services.graph_core import GraphClass, MixedGraph, enumerate_graphs
from app.services.ricf_fit import (
    RicfOptions,
    SampleStats,
    ScoreCache,
    cache_key,
    decomposed_loglik,
    fit,
    log_likelihood,
    penalized_score,
    ricf,
    score,
)
from app.services.search import sample_uniform_bap
from tests.conftest import make_graph
from tests.oracles import regression_dag_coefficients, regression_dag_loglik

TIGHT = RicfOptions(max_iter=5000, tol=1e-10)


def _stats_for(g, rng, n=500):
    theta = sample_parameters(g, rng)
    return SampleStats.from_data(sample_data(theta, n, rng))


def test_sample_stats_checks():
    with pytest.raises(FitError):
        SampleStats.from_covariance(np.eye(3), 3)
    with pytest.raises(FitError):
        SampleStats.from_covariance(np.array([[1.0, 2.0], [2.0, 1.0]]), 10)
    with pytest.raises(FitError):
        SampleStats.from_data(np.ones((2, 4)))


def test_sample_stats_ids(rng):
    X = rng.standard_normal((50, 3))
    a, b = SampleStats.from_data(X), SampleStats.from_data(X.copy())
    assert a.dataset_id == b.dataset_id
    assert SampleStats.from_data(X[:40]).dataset_id != a.dataset_id
    np.testing.assert_allclose(a.S_ml, a.S * 49 / 50)


def test_log_likelihood_maximized_at_s_ml(rng):
    stats = SampleStats.from_data(rng.standard_normal((80, 3)))
    best = log_likelihood(stats.S_ml, stats.S, stats.n)
    assert best > log_likelihood(stats.S, stats.S, stats.n)
    assert best > log_likelihood(np.eye(3), stats.S, stats.n)
    with pytest.raises(FitError):
        log_likelihood(np.zeros((3, 3)), stats.S, stats.n)


def test_penalized_score_counts_every_edge_once():
    g = make_graph(3, [(0, 1)], [(1, 2)])
    assert penalized_score(-100.0, g, 50) == pytest.approx((-100.0 - 5 * math.log(50)) / 50)
    assert penalized_score(-100.0, g, 50, multiplier=2.0) == pytest.approx((-100.0 - 10 * math.log(50)) / 50)


def test_dag_fit_is_the_regression_fit(rng):
    for _ in range(10):
        g = sample_uniform_bap(4, rng, graph_class=GraphClass.DAG)
        stats = _stats_for(g, rng)
        expected = regression_dag_loglik(g, stats.S, stats.n)
        for result in (fit(g, stats), ricf(g, stats)):
            assert result.converged
            assert result.loglik == pytest.approx(expected, rel=1e-10, abs=1e-6)
            np.testing.assert_allclose(result.theta_hat.B, regression_dag_coefficients(g, stats.S), atol=1e-8)


def test_empty_graph_fits_the_variances(rng):
    stats = SampleStats.from_data(rng.standard_normal((60, 3)))
    result = fit(MixedGraph.empty(3), stats)
    np.testing.assert_allclose(result.theta_hat.Omega, np.diag(np.diag(stats.S_ml)))
    assert result.iterations == 1


def test_monolithic_loglik_is_the_sum_of_district_terms(rng):
    for _ in range(10):
        g = sample_uniform_bap(5, rng)
        result = ricf(g, _stats_for(g, rng))
        total = sum(t.loglik for t in result.per_district)
        assert total == pytest.approx(result.loglik, rel=1e-10, abs=1e-8)


def test_decomposed_loglik_matches_the_monolithic_fit(rng):
    for k in range(100):
        g = sample_uniform_bap(2 + k % 5, rng)
        stats = _stats_for(g, rng)
        total, _ = decomposed_loglik(g, stats)
        assert total == pytest.approx(ricf(g, stats).loglik, rel=0, abs=1e-8)


def test_decomposed_fit_agrees_with_monolithic_fit(rng):
    for _ in range(10):
        g = sample_uniform_bap(5, rng)
        stats = _stats_for(g, rng)
        whole, parts = ricf(g, stats, TIGHT), fit(g, stats, opts=TIGHT)
        assert parts.loglik == pytest.approx(whole.loglik, rel=0, abs=1e-8)
        np.testing.assert_allclose(parts.theta_hat.B, whole.theta_hat.B, atol=1e-6)
        np.testing.assert_allclose(parts.theta_hat.Omega, whole.theta_hat.Omega, atol=1e-6)


def test_score_is_unchanged_by_relabeling_vertices(rng):
    for _ in range(10):
        g = sample_uniform_bap(5, rng)
        stats = _stats_for(g, rng)
        order = rng.permutation(5)
        # Column k of the permuted data is old vertex order[k].
        new = {int(old): k for k, old in enumerate(order)}
        relabeled = make_graph(
            5,
            [(new[s], new[t]) for s, t in g.directed],
            [(new[a], new[b]) for a, b in g.bidirected],
        )
        permuted = SampleStats.from_covariance(stats.S[np.ix_(order, order)], stats.n)
        assert score(relabeled, permuted, opts=TIGHT) == pytest.approx(score(g, stats, opts=TIGHT), rel=0, abs=1e-8)


def test_ricf_likelihood_never_decreases(rng):
    for _ in range(10):
        g = sample_uniform_bap(5, rng)
        trace = ricf(g, _stats_for(g, rng, n=200), RicfOptions(max_iter=50, tol=1e-12)).loglik_trace
        assert trace
        for before, after in zip(trace, trace[1:]):
            assert after >= before - 1e-8 * abs(before)


def test_ricf_recovers_parameters_from_an_exact_covariance(rng):
    n = 1000
    for d in (2, 3, 4):
        for _ in range(5):
            g = sample_uniform_bap(d, rng)
            B = np.zeros((d, d))
            for s, t in g.directed:
                B[t, s] = 0.1 * rng.uniform(-1, 1)
            Omega = np.eye(d)
            for a, b in g.bidirected:
                Omega[a, b] = Omega[b, a] = 0.1 * rng.uniform(-1, 1)
            truth = Parameters(g, B, Omega)
            stats = SampleStats.from_covariance(phi(truth) * n / (n - 1), n)
            estimate = ricf(g, stats, RicfOptions(max_iter=1000, tol=1e-12)).theta_hat
            np.testing.assert_allclose(estimate.B, truth.B, atol=1e-4)
            np.testing.assert_allclose(estimate.Omega, truth.Omega, atol=1e-4)


def test_collider_equivalent_graphs_tie_in_likelihood(rng):
    opts = RicfOptions(max_iter=5000, tol=1e-12)
    pairs = 0
    while pairs < 50:
        g = sample_uniform_bap(3 + pairs % 3, rng)
        others = [h for h in collider_equivalents(g) if h != g]
        if not others:
            continue
        other = others[int(rng.integers(len(others)))]
        stats = _stats_for(g, rng, n=1000)
        assert abs(fit(other, stats, opts=opts).loglik - fit(g, stats, opts=opts).loglik) <= 1e-6
        pairs += 1



def test_fit_rejects_mismatched_or_non_bap_graphs(rng, bow):
    stats = SampleStats.from_data(rng.standard_normal((30, 4)))
    with pytest.raises(GraphError):
        fit(bow, stats)
    with pytest.raises(GraphError):
        ricf(MixedGraph.empty(3), stats)


def test_fit_output_satisfies_the_pattern(rng):
    for g in enumerate_graphs(3)[::5]:
        result = fit(g, _stats_for(g, rng, n=100))
        result.theta_hat.validate()
        assert np.allclose(result.theta_hat.Omega, result.theta_hat.Omega.T)


def test_cache_reuses_shared_districts(rng, confounded_chain):
    stats = _stats_for(confounded_chain, rng)
    cache = ScoreCache()
    cold = score(confounded_chain, stats, cache)
    assert (cache.hits, cache.misses, len(cache)) == (0, 3, 3)
    warm = score(confounded_chain, stats, cache)
    assert warm == cold
    assert cache.hits == 3

    # 0 -> 2 only changes the district {2}.
    extended = confounded_chain.replace(add_directed=[(0, 2)])
    score(extended, stats, cache)
    assert (cache.hits, cache.misses) == (5, 4)


def test_cache_counts_concurrent_lookups(rng, confounded_chain):
    stats = _stats_for(confounded_chain, rng)
    cache = ScoreCache()
    cold = score(confounded_chain, stats, cache)
    warm = Parallel(n_jobs=4, prefer='threads')(delayed(score)(confounded_chain, stats, cache) for _ in range(40))
    assert set(warm) == {cold}
    assert (cache.hits, cache.misses) == (120, 3)


def test_cache_keys_depend_on_the_dataset():
    a = cache_key([1, 3], [(0, 1), (2, 3)], [(1, 3)], [0, 2], 'abc')
    assert a == cache_key([3, 1], [(2, 3), (0, 1)], [(3, 1)], [2, 0], 'abc')
    assert a != cache_key([1, 3], [(0, 1), (2, 3)], [(1, 3)], [0, 2], 'abd')


def test_decomposed_loglik_terms_cover_every_vertex(rng, confounded_chain):
    total, terms = decomposed_loglik(confounded_chain, _stats_for(confounded_chain, rng))
    assert sorted(v for t in terms for v in t.district) == [0, 1, 2, 3]
    assert total == pytest.approx(sum(t.loglik for t in terms))
    assert dict((t.district, t.parents) for t in terms) == {(0,): (), (1, 3): (0, 2), (2,): (1,)}
