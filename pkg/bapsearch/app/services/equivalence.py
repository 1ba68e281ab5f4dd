"""Distributional equivalence of BAPs.

Two sufficient/necessary tools and one empirical one:

- graphs with equal skeleton and equal collider triples are equivalent, and parameters
  carry over between them (``collider_equivalents``, ``translate_parameters``);
- equivalent graphs share skeleton, v-structures and m-separations, also on every
  induced subgraph (``necessary_violations`` and the subgraph checks);
- ``greedy_equivalence_class`` grows the set of graphs scoring within ``epsilon`` of a
  reference through edge-type changes.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, Iterable, Iterator, List, Optional, Tuple

import numpy as np
from scipy import linalg

from ..core.config import settings
from ..core.errors import BapError, GraphError, ModelError, OracleLimitError
from .gaussian_model import Parameters, phi
from .graph_core import (
    BI,
    BWD,
    FWD,
    Edge,
    GraphClass,
    MixedGraph,
    Triple,
    collider_triples,
    induced_subgraph,
    is_acyclic,
    is_admissible,
    m_separated,
    neighbors,
    skeleton,
    topological_order,
    v_structures,
)
from .ricf_fit import RicfOptions, SampleStats, ScoreCache, score

logger = logging.getLogger(__name__)


class Provenance(str, Enum):
    COLLIDER = 'collider-identical'
    GREEDY = 'greedy-found'


@dataclass
class EquivalenceClass:
    reference: MixedGraph
    zeta: float
    epsilon: float
    members: Dict[MixedGraph, Provenance] = field(default_factory=dict)

    @property
    def graphs(self) -> List[MixedGraph]:
        return sorted(self.members, key=MixedGraph.key)

    def __len__(self) -> int:
        return len(self.members)

    def __contains__(self, g: object) -> bool:
        return g in self.members

    def __iter__(self) -> Iterator[MixedGraph]:
        return iter(self.graphs)


# ---------------------------------------------------------------------------
# Collider-identical graphs
# ---------------------------------------------------------------------------


def _heads(state: FrozenSet[str]) -> Tuple[bool, bool]:
    """Arrowheads at the (low, high) end of a canonical pair."""
    return (BWD in state or BI in state), (FWD in state or BI in state)


def collider_equivalents(g: MixedGraph, graph_class: GraphClass = GraphClass.BAP) -> List[MixedGraph]:
    """All graphs of ``graph_class`` with the skeleton and collider triples of ``g``."""
    if not is_admissible(g, graph_class):
        raise GraphError(f'{g} is not a {graph_class.value.upper()}')
    edges = sorted(skeleton(g))
    if len(edges) > settings.collider_max_edges:
        raise OracleLimitError(f'collider enumeration is limited to {settings.collider_max_edges} skeleton edges')
    target = collider_triples(g)
    choices = [frozenset({FWD}), frozenset({BWD})]
    if graph_class != GraphClass.DAG:
        choices.append(frozenset({BI}))

    position = {e: k for k, e in enumerate(edges)}
    # Triples to check once edge k is assigned: those whose later edge is k.
    checks: List[List[Tuple[int, int, int, int, int]]] = [[] for _ in edges]
    for mid in g.vertices:
        incident = sorted(e for e in edges if mid in e)
        for e1, e2 in itertools.combinations(incident, 2):
            x = e1[0] if e1[1] == mid else e1[1]
            y = e2[0] if e2[1] == mid else e2[1]
            k1, k2 = position[e1], position[e2]
            checks[max(k1, k2)].append((k1, k2, min(x, y), mid, max(x, y)))

    out: List[MixedGraph] = []
    states: List[FrozenSet[str]] = [frozenset()] * len(edges)

    def head_at(k: int, v: int) -> bool:
        low, high = _heads(states[k])
        return low if edges[k][0] == v else high

    def assign(k: int, partial: MixedGraph) -> None:
        if k == len(edges):
            out.append(partial)
            return
        a, b = edges[k]
        for state in choices:
            states[k] = state
            if any(
                (head_at(k1, mid) and head_at(k2, mid)) != ((x, mid, y) in target)
                for k1, k2, x, mid, y in checks[k]
            ):
                continue
            candidate = partial.with_pair_state(a, b, state)
            if BI not in state and not is_acyclic(candidate):
                continue
            assign(k + 1, candidate)
        states[k] = frozenset()

    assign(0, MixedGraph.empty(g.d))
    return sorted(out, key=MixedGraph.key)


# ---------------------------------------------------------------------------
# Necessary conditions
# ---------------------------------------------------------------------------


@dataclass
class ViolationReport:
    skeleton_only_first: FrozenSet[Edge] = frozenset()
    skeleton_only_second: FrozenSet[Edge] = frozenset()
    v_structures_only_first: FrozenSet[Triple] = frozenset()
    v_structures_only_second: FrozenSet[Triple] = frozenset()
    # (a, b, C, separated in the first graph) for the first disagreeing statement found.
    m_separation_witness: Optional[Tuple[int, int, FrozenSet[int], bool]] = None
    m_separation_exhaustive: bool = True
    m_separation_checked: int = 0

    @property
    def skeleton_differs(self) -> bool:
        return bool(self.skeleton_only_first or self.skeleton_only_second)

    @property
    def v_structures_differ(self) -> bool:
        return bool(self.v_structures_only_first or self.v_structures_only_second)

    @property
    def m_separation_differs(self) -> bool:
        return self.m_separation_witness is not None

    @property
    def certified_non_equivalent(self) -> bool:
        return self.skeleton_differs or self.v_structures_differ or self.m_separation_differs


def _conditioning_sets(
    d: int,
    a: int,
    b: int,
    exhaustive: bool,
    rng: np.random.Generator,
) -> Iterator[Tuple[int, ...]]:
    rest = [v for v in range(d) if v not in (a, b)]
    if exhaustive:
        for r in range(len(rest) + 1):
            yield from itertools.combinations(rest, r)
        return
    yield ()
    for _ in range(settings.msep_samples_per_pair):
        mask = rng.random(len(rest)) < 0.5
        yield tuple(v for v, keep in zip(rest, mask) if keep)


def necessary_violations(
    g1: MixedGraph,
    g2: MixedGraph,
    *,
    rng: Optional[np.random.Generator] = None,
    check_m_separation: bool = True,
) -> ViolationReport:
    """Differences in skeleton, v-structures or m-separations; any one rules out equivalence.

    m-separations are compared over every ``(a, b, C)`` up to
    ``settings.msep_exhaustive_max_vertices`` vertices and over
    ``settings.msep_samples_per_pair`` random conditioning sets per pair above that.
    """
    if g1.d != g2.d:
        raise GraphError('graphs must share the vertex set')
    s1, s2 = skeleton(g1), skeleton(g2)
    v1, v2 = v_structures(g1), v_structures(g2)
    report = ViolationReport(
        skeleton_only_first=s1 - s2,
        skeleton_only_second=s2 - s1,
        v_structures_only_first=v1 - v2,
        v_structures_only_second=v2 - v1,
    )
    if not check_m_separation:
        return report

    exhaustive = g1.d <= settings.msep_exhaustive_max_vertices
    rng = rng if rng is not None else np.random.default_rng(0)
    report.m_separation_exhaustive = exhaustive
    for a, b in itertools.combinations(range(g1.d), 2):
        for C in _conditioning_sets(g1.d, a, b, exhaustive, rng):
            report.m_separation_checked += 1
            sep1 = m_separated(g1, a, b, C)
            if sep1 != m_separated(g2, a, b, C):
                report.m_separation_witness = (a, b, frozenset(C), sep1)
                return report
    return report


def induced_subgraph_violations(
    g1: MixedGraph,
    g2: MixedGraph,
    size: int,
) -> List[Tuple[Tuple[int, ...], ViolationReport]]:
    """Every vertex set of ``size`` whose induced subgraphs are certified non-equivalent."""
    if g1.d != g2.d:
        raise GraphError('graphs must share the vertex set')
    if size < 2:
        raise GraphError('induced subgraphs need at least two vertices')
    out = []
    for W in itertools.combinations(range(g1.d), size):
        report = necessary_violations(induced_subgraph(g1, W)[0], induced_subgraph(g2, W)[0])
        if report.certified_non_equivalent:
            out.append((W, report))
    return out


@dataclass
class SubgraphCheck:
    W: Tuple[int, ...]
    violations: ViolationReport
    score_gap: Optional[float] = None
    score_tolerance: float = 0.0

    @property
    def score_separated(self) -> bool:
        return self.score_gap is not None and self.score_gap > self.score_tolerance

    @property
    def certified_non_equivalent(self) -> bool:
        return self.violations.certified_non_equivalent or self.score_separated


def subgraph_equivalence_check(
    g1: MixedGraph,
    g2: MixedGraph,
    W: Iterable[int],
    stats: Optional[SampleStats] = None,
    *,
    score_tolerance: float = 1e-6,
    opts: Optional[RicfOptions] = None,
) -> SubgraphCheck:
    """Non-equivalence of ``g1`` and ``g2`` certified through their subgraphs induced by ``W``.

    With ``stats``, the two induced subgraphs are also scored on the data restricted to
    ``W``; a score gap above ``score_tolerance`` counts as separation.
    """
    keep = tuple(sorted(set(W)))
    if len(keep) < 2:
        raise GraphError('W must hold at least two vertices')
    if g1.d != g2.d:
        raise GraphError('graphs must share the vertex set')
    sub1, _ = induced_subgraph(g1, keep)
    sub2, _ = induced_subgraph(g2, keep)
    check = SubgraphCheck(keep, necessary_violations(sub1, sub2), score_tolerance=score_tolerance)
    if stats is not None:
        local = stats.restrict(keep)
        check.score_gap = abs(score(sub1, local, opts=opts) - score(sub2, local, opts=opts))
    return check


# ---------------------------------------------------------------------------
# Empirical equivalence class
# ---------------------------------------------------------------------------


def _passes_filter(reference: MixedGraph, candidate: MixedGraph, reference_vs: FrozenSet[Triple]) -> bool:
    if skeleton(candidate) != skeleton(reference) or v_structures(candidate) != reference_vs:
        return False
    if reference.d <= settings.msep_exhaustive_max_vertices:
        return not necessary_violations(reference, candidate).m_separation_differs
    return True


def _accepts(
    reference: MixedGraph,
    candidate: MixedGraph,
    reference_vs: FrozenSet[Triple],
    stats: SampleStats,
    zeta: float,
    epsilon: float,
    cache: ScoreCache,
    opts: Optional[RicfOptions],
) -> bool:
    if not _passes_filter(reference, candidate, reference_vs):
        return False
    try:
        s = score(candidate, stats, cache, opts)
    except BapError as e:
        logger.debug('class candidate %s not scored: %s', candidate, e)
        return False
    return abs(s - zeta) <= epsilon


def greedy_equivalence_class(
    g: MixedGraph,
    stats: SampleStats,
    epsilon: Optional[float] = None,
    cache: Optional[ScoreCache] = None,
    *,
    graph_class: GraphClass = GraphClass.BAP,
    opts: Optional[RicfOptions] = None,
) -> EquivalenceClass:
    """Collider-identical seeds plus every edge-change neighbor chain scoring within ``epsilon``.

    Every candidate is compared with the reference score, never with its predecessor.
    Exploration stops at depth ``d(d-1)/2``; a graph is expanded again only when reached
    at a shallower depth.
    """
    epsilon = settings.epsilon if epsilon is None else epsilon
    if epsilon < 0:
        raise ModelError('epsilon must be non-negative')
    cache = cache if cache is not None else ScoreCache()
    zeta = score(g, stats, cache, opts)
    ec = EquivalenceClass(reference=g, zeta=zeta, epsilon=epsilon)
    seeds = collider_equivalents(g, graph_class)
    for seed in seeds:
        ec.members[seed] = Provenance.COLLIDER

    max_depth = g.d * (g.d - 1) // 2
    reference_vs = v_structures(g)
    # Shallowest depth each graph was reached at; a shallower arrival expands it again.
    best_depth: Dict[MixedGraph, int] = {seed: 0 for seed in seeds}
    accepted: Dict[MixedGraph, bool] = {}
    for seed in seeds:
        stack: List[Tuple[MixedGraph, int]] = [(seed, 0)]
        while stack:
            current, depth = stack.pop()
            if depth > best_depth[current] or depth >= max_depth:
                continue
            found = []
            for cand in neighbors(current, graph_class, additions=False, deletions=False, changes=True):
                if best_depth.get(cand, max_depth + 1) <= depth + 1:
                    continue
                best_depth[cand] = depth + 1
                if cand not in accepted:
                    accepted[cand] = _accepts(g, cand, reference_vs, stats, zeta, epsilon, cache, opts)
                if accepted[cand]:
                    ec.members.setdefault(cand, Provenance.GREEDY)
                    found.append(cand)
            # Reversed so the lexicographically first accepted neighbor is expanded first.
            stack.extend((cand, depth + 1) for cand in reversed(found))

    logger.debug('equivalence class of %s: %d members', g, len(ec))
    return ec


# ---------------------------------------------------------------------------
# Parameter translation
# ---------------------------------------------------------------------------


def _edge_label(theta: Parameters, a: int, b: int) -> float:
    g = theta.graph
    if (a, b) in g.directed:
        return float(theta.B[b, a])
    if (b, a) in g.directed:
        return float(theta.B[a, b])
    return float(theta.Omega[a, b])


def translate_parameters(theta1: Parameters, g1: MixedGraph, g2: MixedGraph) -> Parameters:
    """Carry standardized parameters of ``g1`` over to a collider-identical ``g2``.

    Edge labels are copied pair by pair regardless of edge type. The error variances of
    ``g2`` then solve a unit lower triangular system (in a topological order of ``g2``)
    that restores the unit diagonal, after which ``phi`` agrees on both graphs.
    """
    if theta1.graph != g1:
        raise ModelError('theta1 does not belong to g1')
    if g1.d != g2.d or skeleton(g1) != skeleton(g2) or collider_triples(g1) != collider_triples(g2):
        raise ModelError('translation needs equal skeletons and equal collider triples')
    if not is_acyclic(g2):
        raise GraphError('g2 has no topological order')
    if not np.allclose(np.diag(phi(theta1)), 1.0, atol=1e-8):
        raise ModelError('theta1 must be standardized (phi with unit diagonal)')

    d = g2.d
    B2 = np.zeros((d, d))
    Omega_off = np.zeros((d, d))
    for a, b in sorted(skeleton(g1)):
        label = _edge_label(theta1, a, b)
        if (a, b) in g2.directed:
            B2[b, a] = label
        elif (b, a) in g2.directed:
            B2[a, b] = label
        else:
            Omega_off[a, b] = Omega_off[b, a] = label

    A = linalg.solve(np.eye(d) - B2, np.eye(d))
    M = A * A
    rhs = 1.0 - np.diag(A @ Omega_off @ A.T)
    order = topological_order(g2)
    diag = np.empty(d)
    diag[order] = linalg.solve_triangular(M[np.ix_(order, order)], rhs[order], lower=True, unit_diagonal=True)

    theta2 = Parameters(g2, B2, Omega_off + np.diag(diag))
    if np.min(np.linalg.eigvalsh(theta2.Omega), initial=0.0) < -1e-9:
        logger.warning('translated Omega is not positive semidefinite; inputs may violate the preconditions')
    return theta2
