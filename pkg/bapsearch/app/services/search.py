"""Greedy hill climbing over BAPs (or DAGs) and the uniform BAP sampler used for restarts."""
from __future__ import annotations

import itertools
import logging
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from joblib import Parallel, delayed

from ..core.config import settings
from ..core.errors import BapError, ConfigError, FitError, GraphError
from ..core.rng import SeedLike, generator, spawn
from .graph_core import BI, FWD, GraphClass, MixedGraph, is_acyclic, is_admissible, neighbors
from .ricf_fit import FitResult, RicfOptions, SampleStats, ScoreCache, fit, score

logger = logging.getLogger(__name__)

_SEARCH_CLASSES = (GraphClass.DAG, GraphClass.BAP)


@dataclass
class SearchConfig:
    restarts: int = 1
    max_in_degree: Optional[int] = None
    graph_class: GraphClass = GraphClass.BAP
    neighbor_subset: Optional[int] = None
    seed: SeedLike = None
    forward_only: bool = False
    # One extra additions-only run from the empty graph on top of the random restarts.
    forward_restart: bool = False
    threads: int = 1
    improvement_threshold: float = field(default_factory=lambda: settings.improvement_threshold)

    def __post_init__(self) -> None:
        self.graph_class = GraphClass(self.graph_class)
        if self.restarts < 1:
            raise ConfigError(f'restarts must be >= 1, got {self.restarts}')
        if self.max_in_degree is not None and self.max_in_degree < 0:
            raise ConfigError(f'max_in_degree must be >= 0, got {self.max_in_degree}')
        if self.neighbor_subset is not None and self.neighbor_subset < 1:
            raise ConfigError(f'neighbor_subset must be >= 1, got {self.neighbor_subset}')
        if self.graph_class not in _SEARCH_CLASSES:
            raise ConfigError(f'search runs over DAGs or BAPs, not {self.graph_class.value}')
        if self.threads < 1:
            raise ConfigError('threads must be >= 1')


@dataclass(frozen=True)
class TraceStep:
    step: int
    elapsed: float
    score: float
    graph: MixedGraph


@dataclass
class RestartTrace:
    index: int
    start: str  # 'random', 'empty', 'forward' or 'seeded'
    steps: List[TraceStep] = field(default_factory=list)
    error: Optional[str] = None

    @property
    def skipped(self) -> bool:
        return self.error is not None

    @property
    def final(self) -> Optional[TraceStep]:
        return self.steps[-1] if self.steps else None


@dataclass
class SearchTrace:
    restarts: List[RestartTrace] = field(default_factory=list)

    @property
    def skipped(self) -> int:
        return sum(1 for r in self.restarts if r.skipped)


class SearchResult(NamedTuple):
    graph: MixedGraph
    fit: FitResult
    trace: SearchTrace


# ---------------------------------------------------------------------------
# MCMC over BAPs
# ---------------------------------------------------------------------------


def _decode_position(index: int, d: int) -> Tuple[int, int]:
    i, r = divmod(index, d - 1)
    return i, (r if r < i else r + 1)


def _apply_move(
    g: MixedGraph,
    i: int,
    j: int,
    sigma: int,
    max_in_degree: Optional[int],
    graph_class: GraphClass,
) -> MixedGraph:
    """One transition of the chain at ordered position ``(i, j)`` with coin ``sigma``.

    A directed edge is only removed from its own position ``(tail, head)``; a bidirected
    edge from either position. With those rules the chain is symmetric.
    """
    if (i, j) in g.directed:
        return g.replace(remove_directed=[(i, j)]) if sigma == 0 else g
    # A directed edge is only removable from (tail, head): keeps removal and addition equally likely.
    if (j, i) in g.directed:
        return g
    if g.pair_state(i, j) == frozenset({BI}):
        return g.replace(remove_bidirected=[(i, j)]) if sigma == 0 else g

    cap = max_in_degree
    if sigma == 0:
        if cap is not None and g.in_degree(j) + 1 > cap:
            return g
        candidate = g.replace(add_directed=[(i, j)])
        return candidate if is_acyclic(candidate) else g
    if graph_class == GraphClass.DAG:
        return g
    if cap is not None and (g.in_degree(i) + 1 > cap or g.in_degree(j) + 1 > cap):
        return g
    return g.replace(add_bidirected=[(i, j)])


def mcmc_step(
    g: MixedGraph,
    rng: np.random.Generator,
    max_in_degree: Optional[int] = None,
    graph_class: GraphClass = GraphClass.BAP,
) -> MixedGraph:
    if g.d < 2:
        return g
    i, j = _decode_position(int(rng.integers(g.d * (g.d - 1))), g.d)
    return _apply_move(g, i, j, int(rng.integers(2)), max_in_degree, graph_class)


class _Chain:
    """Mutable adjacency state for long MCMC runs; same move rules as ``_apply_move``."""

    def __init__(self, d: int, max_in_degree: Optional[int], graph_class: GraphClass) -> None:
        self.d = d
        self.cap = max_in_degree
        self.allow_bidirected = graph_class != GraphClass.DAG
        self.children: List[set] = [set() for _ in range(d)]
        self.bidirected: set = set()
        self.heads = [0] * d

    @classmethod
    def from_graph(cls, g: MixedGraph, max_in_degree: Optional[int] = None,
                   graph_class: GraphClass = GraphClass.BAP) -> '_Chain':
        chain = cls(g.d, max_in_degree, graph_class)
        for s, t in g.directed:
            chain.children[s].add(t)
            chain.heads[t] += 1
        for a, b in g.bidirected:
            chain.bidirected.add((a, b))
            chain.heads[a] += 1
            chain.heads[b] += 1
        return chain

    def _reaches(self, src: int, dst: int) -> bool:
        stack, seen = [src], {src}
        while stack:
            v = stack.pop()
            if v == dst:
                return True
            for w in self.children[v]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return False

    def step(self, i: int, j: int, sigma: int) -> None:
        pair = (i, j) if i < j else (j, i)
        if j in self.children[i]:
            if sigma == 0:
                self.children[i].discard(j)
                self.heads[j] -= 1
            return
        # Reversed position: a directed edge is only removable from its own.
        if i in self.children[j]:
            return
        if pair in self.bidirected:
            if sigma == 0:
                self.bidirected.discard(pair)
                self.heads[i] -= 1
                self.heads[j] -= 1
            return
        cap = self.cap
        if sigma == 0:
            if cap is not None and self.heads[j] + 1 > cap:
                return
            if self._reaches(j, i):
                return
            self.children[i].add(j)
            self.heads[j] += 1
            return
        if not self.allow_bidirected:
            return
        if cap is not None and (self.heads[i] + 1 > cap or self.heads[j] + 1 > cap):
            return
        self.bidirected.add(pair)
        self.heads[i] += 1
        self.heads[j] += 1

    def to_graph(self) -> MixedGraph:
        directed = frozenset((s, t) for s in range(self.d) for t in self.children[s])
        return MixedGraph(self.d, directed, frozenset(self.bidirected))


def sample_uniform_bap(
    d: int,
    rng: np.random.Generator,
    max_in_degree: Optional[int] = None,
    burn_in: Optional[int] = None,
    graph_class: GraphClass = GraphClass.BAP,
) -> MixedGraph:
    """Run the chain from the empty graph for ``burn_in`` steps (default ``c * d**4``)."""
    if d < 1:
        raise GraphError('need at least one vertex')
    if d == 1:
        return MixedGraph.empty(1)
    steps = settings.burn_in_steps(d) if burn_in is None else int(burn_in)
    positions = rng.integers(d * (d - 1), size=steps)
    coins = rng.integers(2, size=steps)
    chain = _Chain(d, max_in_degree, graph_class)
    for index, sigma in zip(positions.tolist(), coins.tolist()):
        i, j = _decode_position(index, d)
        chain.step(i, j, sigma)
    return chain.to_graph()


def naive_sample_bap(d: int, rng: np.random.Generator, graph_class: GraphClass = GraphClass.BAP) -> MixedGraph:
    """Uniform upper-triangular pattern followed by a uniform relabeling.

    Not uniform over graphs: patterns with many automorphisms are over-weighted.
    """
    states = [frozenset(), frozenset({FWD})]
    if graph_class != GraphClass.DAG:
        states.append(frozenset({BI}))
    g = MixedGraph.empty(d)
    for a, b in itertools.combinations(range(d), 2):
        g = g.with_pair_state(a, b, states[int(rng.integers(len(states)))])
    perm = rng.permutation(d)
    return MixedGraph(
        d,
        frozenset((int(perm[s]), int(perm[t])) for s, t in g.directed),
        frozenset((int(perm[a]), int(perm[b])) for a, b in g.bidirected),
    )


def transition_probability(
    g: MixedGraph,
    g2: MixedGraph,
    max_in_degree: Optional[int] = None,
    graph_class: GraphClass = GraphClass.BAP,
) -> Fraction:
    """Exact one-step probability by enumerating every (position, coin) outcome."""
    if g.d != g2.d:
        raise GraphError('graphs must share the vertex set')
    d = g.d
    if d < 2:
        return Fraction(int(g == g2))
    weight = Fraction(1, 2 * d * (d - 1))
    hits = 0
    for i, j in itertools.permutations(range(d), 2):
        for sigma in (0, 1):
            if _apply_move(g, i, j, sigma, max_in_degree, graph_class) == g2:
                hits += 1
    return hits * weight


def transition_matrix(
    graphs: Sequence[MixedGraph],
    max_in_degree: Optional[int] = None,
    graph_class: GraphClass = GraphClass.BAP,
) -> List[List[Fraction]]:
    return [[transition_probability(a, b, max_in_degree, graph_class) for b in graphs] for a in graphs]


# ---------------------------------------------------------------------------
# Greedy search
# ---------------------------------------------------------------------------


def _candidates(
    g: MixedGraph,
    cfg: SearchConfig,
    additions_only: bool,
    rng: np.random.Generator,
) -> List[MixedGraph]:
    cands = neighbors(
        g,
        cfg.graph_class,
        max_in_degree=cfg.max_in_degree,
        additions=True,
        deletions=not additions_only,
        changes=not additions_only,
    )
    if cfg.neighbor_subset is not None and len(cands) > cfg.neighbor_subset:
        keep = np.sort(rng.choice(len(cands), size=cfg.neighbor_subset, replace=False))
        cands = [cands[k] for k in keep.tolist()]
    return cands


def _climb(
    index: int,
    start_kind: str,
    start: Optional[MixedGraph],
    seed: np.random.SeedSequence,
    stats: SampleStats,
    cfg: SearchConfig,
    cache: Optional[ScoreCache],
    opts: RicfOptions,
) -> RestartTrace:
    rng = generator(seed)
    trace = RestartTrace(index=index, start=start_kind)
    additions_only = start_kind in ('empty', 'forward')
    t0 = time.monotonic()
    try:
        if start is None:
            if start_kind == 'random':
                start = sample_uniform_bap(stats.d, rng, cfg.max_in_degree, graph_class=cfg.graph_class)
            else:
                start = MixedGraph.empty(stats.d)
        current, current_score = start, score(start, stats, cache, opts)
    except BapError as e:
        logger.warning('restart %d skipped: start graph could not be scored (%s)', index, e)
        trace.error = str(e)
        return trace

    trace.steps.append(TraceStep(0, time.monotonic() - t0, current_score, current))
    step = 0
    while True:
        best, best_score = None, current_score
        for cand in _candidates(current, cfg, additions_only, rng):
            try:
                s = score(cand, stats, cache, opts)
            except BapError as e:
                logger.debug('neighbor %s not scored: %s', cand, e)
                continue
            if s > best_score:
                best, best_score = cand, s
        if best is None or best_score - current_score <= cfg.improvement_threshold:
            break
        step += 1
        current, current_score = best, best_score
        trace.steps.append(TraceStep(step, time.monotonic() - t0, current_score, current))
        logger.debug('restart %d step %d: score %.10g', index, step, current_score)

    logger.info('restart %d (%s): %d moves, final score %.10g', index, start_kind, step, current_score)
    return trace


def greedy_search(
    data: Union[SampleStats, np.ndarray],
    cfg: SearchConfig,
    cache: Optional[ScoreCache] = None,
    start_graphs: Sequence[MixedGraph] = (),
    opts: Optional[RicfOptions] = None,
) -> SearchResult:
    """Best graph over all restarts, its fit and the full trace.

    Runs ``cfg.restarts`` climbs from uniform random graphs (from the empty graph with
    additions only when ``forward_only``), then the optional forward run, then one climb
    per graph in ``start_graphs``.
    """
    stats = data if isinstance(data, SampleStats) else SampleStats.from_data(data)
    opts = opts or RicfOptions.from_settings()
    cache = cache if cache is not None else ScoreCache()
    for g in start_graphs:
        if g.d != stats.d or not is_admissible(g, cfg.graph_class, cfg.max_in_degree):
            raise GraphError(f'start graph {g} is not admissible for this search')

    jobs: List[Tuple[str, Optional[MixedGraph]]] = [
        ('empty' if cfg.forward_only else 'random', None) for _ in range(cfg.restarts)
    ]
    if cfg.forward_restart:
        jobs.append(('forward', None))
    jobs += [('seeded', g) for g in start_graphs]
    seeds = spawn(cfg.seed, len(jobs))

    traces = Parallel(n_jobs=cfg.threads, prefer='threads')(
        delayed(_climb)(k, kind, start, seeds[k], stats, cfg, cache, opts)
        for k, (kind, start) in enumerate(jobs)
    )
    trace = SearchTrace(restarts=list(traces))
    if trace.skipped:
        logger.warning('%d of %d restarts skipped', trace.skipped, len(jobs))

    finished = [r for r in trace.restarts if r.final is not None]
    if not finished:
        raise FitError('every restart failed to fit its start graph')
    # Ties go to the lower restart index.
    best = max(finished, key=lambda r: (r.final.score, -r.index)).final
    return SearchResult(best.graph, fit(best.graph, stats, cache, opts), trace)
