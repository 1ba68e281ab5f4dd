from collections import deque

import numpy as np
import pytest

from app.core.errors import GraphError, ModelError
from app.services.equivalence import (
    Provenance,
    collider_equivalents,
    greedy_equivalence_class,
    induced_subgraph_violations,
    necessary_violations,
    subgraph_equivalence_check,
    translate_parameters,
)
from app.services.gaussian_model import phi, sample_data, sample_parameters, standardize_parameters
from app.services.graph_core import (
    GraphClass,
    MixedGraph,
    collider_triples,
    enumerate_graphs,
    is_admissible,
    neighbors,
    skeleton,
    v_structures,
)
from app.services.ricf_fit import RicfOptions, SampleStats, ScoreCache, score
from app.services.search import sample_uniform_bap
from tests.conftest import make_graph

CHAIN = make_graph(3, [(0, 1), (1, 2)])
COLLIDER = make_graph(3, [(0, 1), (2, 1)])
COMPLETE = make_graph(3, [(0, 1), (1, 2), (0, 2)])


def _data_for(g, rng, n=1000):
    return SampleStats.from_data(sample_data(sample_parameters(g, rng), n, rng))


@pytest.mark.parametrize('g, graph_class, expected', [
    (CHAIN, GraphClass.BAP, 5),
    (CHAIN, GraphClass.DAG, 3),
    (COLLIDER, GraphClass.BAP, 4),
    (COLLIDER, GraphClass.DAG, 1),
    (make_graph(2, [(0, 1)]), GraphClass.BAP, 3),
])
def test_collider_equivalent_counts(g, graph_class, expected):
    assert len(collider_equivalents(g, graph_class)) == expected


def test_collider_equivalents_share_skeleton_and_colliders(rng):
    for _ in range(20):
        g = sample_uniform_bap(5, rng)
        members = collider_equivalents(g)
        assert g in members
        for h in members:
            assert is_admissible(h, GraphClass.BAP)
            assert skeleton(h) == skeleton(g)
            assert collider_triples(h) == collider_triples(g)


def test_collider_equivalents_match_a_filtered_enumeration():
    graphs = enumerate_graphs(4)
    for g in graphs[::97]:
        expected = [h for h in graphs if skeleton(h) == skeleton(g) and collider_triples(h) == collider_triples(g)]
        assert collider_equivalents(g) == expected


def test_collider_equivalents_reject_other_classes(bow):
    with pytest.raises(GraphError):
        collider_equivalents(bow)


def test_district_split_differs_only_in_m_separation(single_district, split_districts):
    report = necessary_violations(single_district, split_districts)
    assert not report.skeleton_differs
    assert not report.v_structures_differ
    assert report.m_separation_witness == (1, 2, frozenset({0, 3}), False)
    assert report.certified_non_equivalent
    assert report.m_separation_exhaustive


def test_skeleton_difference_is_reported(single_district, single_district_extra):
    report = necessary_violations(single_district, single_district_extra, check_m_separation=False)
    assert report.skeleton_only_second == frozenset({(1, 2)})
    assert report.m_separation_checked == 0
    assert report.certified_non_equivalent


def test_hard_pair_passes_every_necessary_condition(hard_pair):
    first, second = hard_pair
    report = necessary_violations(first, second)
    assert v_structures(first) == v_structures(second) == frozenset({(0, 1, 3)})
    assert not report.certified_non_equivalent
    assert report.m_separation_checked == 6 * 4


def test_sampled_m_separation_above_the_exhaustive_limit():
    g = make_graph(7, [(0, 1), (1, 2)], [(3, 4)])
    report = necessary_violations(g, g)
    assert not report.m_separation_exhaustive
    assert report.m_separation_checked == 21 * 65
    assert not report.certified_non_equivalent


def test_induced_subgraph_violations(single_district, split_districts):
    assert induced_subgraph_violations(single_district, split_districts, 3) == []
    found = induced_subgraph_violations(single_district, split_districts, 4)
    assert [W for W, _ in found] == [(0, 1, 2, 3)]
    with pytest.raises(GraphError):
        induced_subgraph_violations(single_district, split_districts, 1)


def test_subgraph_equivalence_check(rng, single_district, split_districts):
    assert subgraph_equivalence_check(single_district, split_districts, [0, 1, 2, 3]).certified_non_equivalent
    assert not subgraph_equivalence_check(single_district, split_districts, [0, 1, 2]).certified_non_equivalent
    stats = _data_for(split_districts, rng)
    check = subgraph_equivalence_check(single_district, split_districts, [0, 2, 3], stats)
    assert check.score_gap is not None and check.score_gap >= 0.0
    with pytest.raises(GraphError):
        subgraph_equivalence_check(single_district, split_districts, [1])


def test_translated_parameters_reproduce_phi(rng):
    for _ in range(10):
        g = sample_uniform_bap(4, rng)
        theta = standardize_parameters(sample_parameters(g, rng))
        for h in collider_equivalents(g):
            moved = translate_parameters(theta, g, h)
            moved.validate()
            np.testing.assert_allclose(phi(moved), phi(theta), atol=1e-9)
            back = translate_parameters(moved, h, g)
            np.testing.assert_allclose(back.B, theta.B, atol=1e-9)
            np.testing.assert_allclose(back.Omega, theta.Omega, atol=1e-9)


def test_translation_copies_labels_pair_by_pair():
    theta = standardize_parameters(sample_parameters(CHAIN, np.random.default_rng(1)))
    target = make_graph(3, [(1, 2)], [(0, 1)])
    moved = translate_parameters(theta, CHAIN, target)
    assert moved.Omega[0, 1] == theta.B[1, 0]
    assert moved.B[2, 1] == theta.B[2, 1]


def test_translation_preconditions(rng):
    theta = sample_parameters(CHAIN, rng)
    fork = make_graph(3, [(1, 0), (1, 2)])
    with pytest.raises(ModelError):
        translate_parameters(theta, CHAIN, fork)
    standard = standardize_parameters(theta)
    translate_parameters(standard, CHAIN, fork).validate()
    with pytest.raises(ModelError):
        translate_parameters(standard, CHAIN, COLLIDER)
    with pytest.raises(ModelError):
        translate_parameters(standard, COLLIDER, CHAIN)


def test_greedy_class_contains_the_collider_seeds(rng):
    g = sample_uniform_bap(4, rng)
    stats = _data_for(g, rng)
    ec = greedy_equivalence_class(g, stats)
    seeds = collider_equivalents(g)
    assert all(ec.members[s] == Provenance.COLLIDER for s in seeds)
    assert ec.zeta == score(g, stats)
    for member, provenance in ec.members.items():
        assert skeleton(member) == skeleton(g)
        assert v_structures(member) == v_structures(g)
        if provenance == Provenance.GREEDY:
            assert abs(score(member, stats) - ec.zeta) <= ec.epsilon


def test_huge_epsilon_explores_beyond_the_seeds(rng):
    stats = _data_for(COMPLETE, rng)
    ec = greedy_equivalence_class(COMPLETE, stats, epsilon=1e9)
    assert len(ec) > len(collider_equivalents(COMPLETE))
    assert ec.members[make_graph(3, [(0, 1), (0, 2)], [(1, 2)])] == Provenance.GREEDY
    assert len(ec) <= 25


def test_greedy_class_is_the_depth_limited_closure_of_the_seeds(rng, confounded_chain):
    g = confounded_chain
    ec = greedy_equivalence_class(g, _data_for(g, rng), epsilon=1e9)

    def passes(h):
        if skeleton(h) != skeleton(g) or v_structures(h) != v_structures(g):
            return False
        return not necessary_violations(g, h).m_separation_differs

    max_depth = g.d * (g.d - 1) // 2
    depth = {seed: 0 for seed in collider_equivalents(g)}
    queue = deque(depth)
    while queue:
        current = queue.popleft()
        if depth[current] == max_depth:
            continue
        for cand in neighbors(current, GraphClass.BAP, additions=False, deletions=False, changes=True):
            if cand not in depth and passes(cand):
                depth[cand] = depth[current] + 1
                queue.append(cand)
    assert set(ec.members) == set(depth)


def test_greedy_class_argument_checks(rng):
    stats = _data_for(CHAIN, rng)
    with pytest.raises(ModelError):
        greedy_equivalence_class(CHAIN, stats, epsilon=-1.0)


def _exhaustive_class(g, stats, epsilon, cache, opts, graphs):
    zeta = score(g, stats, cache, opts)
    out = set(collider_equivalents(g))
    for h in graphs:
        if skeleton(h) != skeleton(g) or v_structures(h) != v_structures(g):
            continue
        if necessary_violations(g, h).m_separation_differs:
            continue
        if abs(score(h, stats, cache, opts) - zeta) <= epsilon:
            out.add(h)
    return out


def test_greedy_class_is_inside_the_exhaustive_class(rng):
    graphs = enumerate_graphs(4)
    opts = RicfOptions(max_iter=200, tol=1e-10)
    for _ in range(3):
        g = sample_uniform_bap(4, rng)
        stats, cache = _data_for(g, rng), ScoreCache()
        ec = greedy_equivalence_class(g, stats, 1e-6, cache, opts=opts)
        assert set(ec.members) <= _exhaustive_class(g, stats, 1e-6, cache, opts, graphs)


@pytest.mark.slow
def test_greedy_class_matches_the_exhaustive_class():
    rng = np.random.default_rng(2024)
    graphs = enumerate_graphs(4)
    opts = RicfOptions(max_iter=200, tol=1e-10)
    matches = 0
    for _ in range(20):
        g = sample_uniform_bap(4, rng)
        stats, cache = _data_for(g, rng), ScoreCache()
        ec = greedy_equivalence_class(g, stats, 1e-6, cache, opts=opts)
        matches += set(ec.members) == _exhaustive_class(g, stats, 1e-6, cache, opts, graphs)
    assert matches >= 18


def test_class_of_a_single_vertex(rng):
    stats = SampleStats.from_data(rng.standard_normal((10, 1)))
    ec = greedy_equivalence_class(MixedGraph.empty(1), stats)
    assert ec.graphs == [MixedGraph.empty(1)]
