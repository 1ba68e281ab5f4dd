"""Mixed graphs (path diagrams) and the combinatorics the search and the theory rest on.

Vertices are dense integer indices ``0..d-1``. ``directed`` holds ordered pairs ``(i, j)``
for ``i -> j``; ``bidirected`` holds canonical pairs ``(i, j)`` with ``i < j`` for
``i <-> j``. Every operation here is a pure function of an immutable graph.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, Iterable, Iterator, List, Optional, Set, Tuple

import networkx as nx
import numpy as np

from ..core.config import settings
from ..core.errors import GraphError, OracleLimitError

Edge = Tuple[int, int]
Triple = Tuple[int, int, int]

# Edge types on an unordered pair (i, j) with i < j.
FWD = 'fwd'   # i -> j
BWD = 'bwd'   # j -> i
BI = 'bi'     # i <-> j


class GraphClass(str, Enum):
    DAG = 'dag'
    BAP = 'bap'
    APD = 'apd'


_PAIR_STATES: Dict[GraphClass, Tuple[FrozenSet[str], ...]] = {
    GraphClass.DAG: (frozenset(), frozenset({FWD}), frozenset({BWD})),
    GraphClass.BAP: (frozenset(), frozenset({FWD}), frozenset({BWD}), frozenset({BI})),
    GraphClass.APD: (
        frozenset(),
        frozenset({FWD}),
        frozenset({BWD}),
        frozenset({BI}),
        frozenset({FWD, BI}),
        frozenset({BWD, BI}),
    ),
}


def _canon(i: int, j: int) -> Edge:
    return (i, j) if i < j else (j, i)


@dataclass(frozen=True)
class MixedGraph:
    d: int
    directed: FrozenSet[Edge] = field(default_factory=frozenset)
    bidirected: FrozenSet[Edge] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        if self.d < 0:
            raise GraphError(f'vertex count must be non-negative, got {self.d}')
        directed = frozenset((int(i), int(j)) for i, j in self.directed)
        bidirected = frozenset(_canon(int(i), int(j)) for i, j in self.bidirected)
        for i, j in itertools.chain(directed, bidirected):
            if i == j:
                raise GraphError(f'self-loop at vertex {i}')
            if not (0 <= i < self.d and 0 <= j < self.d):
                raise GraphError(f'edge ({i}, {j}) out of range for d={self.d}')
        object.__setattr__(self, 'directed', directed)
        object.__setattr__(self, 'bidirected', bidirected)

    # -- construction -------------------------------------------------------

    @classmethod
    def empty(cls, d: int) -> 'MixedGraph':
        return cls(d)

    def replace(
        self,
        *,
        add_directed: Iterable[Edge] = (),
        remove_directed: Iterable[Edge] = (),
        add_bidirected: Iterable[Edge] = (),
        remove_bidirected: Iterable[Edge] = (),
    ) -> 'MixedGraph':
        directed = (set(self.directed) - set(remove_directed)) | set(add_directed)
        bidirected = (set(self.bidirected) - {_canon(*e) for e in remove_bidirected}) | {
            _canon(*e) for e in add_bidirected
        }
        return MixedGraph(self.d, frozenset(directed), frozenset(bidirected))

    def pair_state(self, i: int, j: int) -> FrozenSet[str]:
        a, b = _canon(i, j)
        state = set()
        if (a, b) in self.directed:
            state.add(FWD)
        if (b, a) in self.directed:
            state.add(BWD)
        if (a, b) in self.bidirected:
            state.add(BI)
        return frozenset(state)

    def with_pair_state(self, i: int, j: int, state: FrozenSet[str]) -> 'MixedGraph':
        a, b = _canon(i, j)
        directed = set(self.directed) - {(a, b), (b, a)}
        bidirected = set(self.bidirected) - {(a, b)}
        if FWD in state:
            directed.add((a, b))
        if BWD in state:
            directed.add((b, a))
        if BI in state:
            bidirected.add((a, b))
        return MixedGraph(self.d, frozenset(directed), frozenset(bidirected))

    # -- local structure ----------------------------------------------------

    @property
    def vertices(self) -> range:
        return range(self.d)

    @property
    def edge_count(self) -> int:
        return len(self.directed) + len(self.bidirected)

    def parents(self, i: int) -> List[int]:
        return sorted(s for s, t in self.directed if t == i)

    def children(self, i: int) -> List[int]:
        return sorted(t for s, t in self.directed if s == i)

    def spouses(self, i: int) -> List[int]:
        return sorted(b if a == i else a for a, b in self.bidirected if i in (a, b))

    def adjacent(self, i: int, j: int) -> bool:
        return bool(self.pair_state(i, j))

    def in_degree(self, i: int) -> int:
        """Number of arrowheads at ``i``; both edge types count."""
        return len(self.parents(i)) + len(self.spouses(i))

    def key(self) -> Tuple[int, Tuple[Edge, ...], Tuple[Edge, ...]]:
        return (self.d, tuple(sorted(self.directed)), tuple(sorted(self.bidirected)))

    def __lt__(self, other: 'MixedGraph') -> bool:
        return self.key() < other.key()

    def b_mask(self) -> np.ndarray:
        """Boolean pattern of B: ``mask[i, j]`` iff ``j -> i``."""
        mask = np.zeros((self.d, self.d), dtype=bool)
        for s, t in self.directed:
            mask[t, s] = True
        return mask

    def omega_mask(self) -> np.ndarray:
        """Boolean pattern of Omega including the diagonal."""
        mask = np.eye(self.d, dtype=bool)
        for a, b in self.bidirected:
            mask[a, b] = mask[b, a] = True
        return mask

    def __str__(self) -> str:
        parts = [f'{s}->{t}' for s, t in sorted(self.directed)]
        parts += [f'{a}<->{b}' for a, b in sorted(self.bidirected)]
        return f"MixedGraph(d={self.d}; {', '.join(parts) if parts else 'empty'})"


@dataclass(frozen=True)
class Trek:
    """A collider-free path from ``left[0]`` to ``right[-1]``.

    ``left`` runs from the left endpoint back to the left top vertex (its edges point
    towards the left endpoint); ``right`` runs from the right top vertex to the right
    endpoint. Without a bidirected edge both sides share ``head``.
    """

    left: Tuple[int, ...]
    right: Tuple[int, ...]
    has_bidirected: bool
    head: Optional[int]

    @property
    def lambda_left(self) -> int:
        return len(self.left) - 1

    @property
    def lambda_right(self) -> int:
        return len(self.right) - 1

    def directed_edges(self) -> List[Edge]:
        edges = [(self.left[k + 1], self.left[k]) for k in range(len(self.left) - 1)]
        edges += [(self.right[k], self.right[k + 1]) for k in range(len(self.right) - 1)]
        return edges

    def bidirected_edge(self) -> Optional[Edge]:
        if not self.has_bidirected:
            return None
        return (self.left[-1], self.right[0])

    def is_simple(self) -> bool:
        shared = set(self.left) & set(self.right)
        if self.has_bidirected:
            return not shared
        return shared == {self.head}

    def __str__(self) -> str:
        left = ' <- '.join(str(v) for v in self.left)
        right = ' -> '.join(str(v) for v in self.right)
        if self.has_bidirected:
            return f'{left} <-> {right}'
        if len(self.right) == 1:
            return left
        if len(self.left) == 1:
            return right
        return f"{left} -> {' -> '.join(str(v) for v in self.right[1:])}"


# ---------------------------------------------------------------------------
# Validation helpers
# ---------------------------------------------------------------------------


def _check_vertex(g: MixedGraph, v: int) -> None:
    if not 0 <= v < g.d:
        raise GraphError(f'vertex {v} out of range for d={g.d}')


def _digraph(g: MixedGraph) -> nx.DiGraph:
    dg = nx.DiGraph()
    dg.add_nodes_from(g.vertices)
    dg.add_edges_from(g.directed)
    return dg


def _reaches(g: MixedGraph, src: int, dst: int) -> bool:
    """True iff a directed path ``src ~> dst`` exists (length 0 counts)."""
    if src == dst:
        return True
    children: Dict[int, List[int]] = {}
    for s, t in g.directed:
        children.setdefault(s, []).append(t)
    stack, seen = [src], {src}
    while stack:
        v = stack.pop()
        for w in children.get(v, ()):
            if w == dst:
                return True
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return False


# ---------------------------------------------------------------------------
# Graph classes
# ---------------------------------------------------------------------------


def is_acyclic(g: MixedGraph) -> bool:
    return nx.is_directed_acyclic_graph(_digraph(g))


def is_bap(g: MixedGraph) -> bool:
    if not is_acyclic(g):
        return False
    for s, t in g.directed:
        if (t, s) in g.directed or _canon(s, t) in g.bidirected:
            return False
    return True


def is_dag(g: MixedGraph) -> bool:
    return not g.bidirected and is_acyclic(g)


def is_admissible(g: MixedGraph, graph_class: GraphClass, max_in_degree: Optional[int] = None) -> bool:
    if graph_class == GraphClass.DAG:
        ok = is_dag(g)
    elif graph_class == GraphClass.BAP:
        ok = is_bap(g)
    else:
        ok = is_acyclic(g) and all((t, s) not in g.directed for s, t in g.directed)
    if ok and max_in_degree is not None:
        ok = all(g.in_degree(v) <= max_in_degree for v in g.vertices)
    return ok


def topological_order(g: MixedGraph) -> List[int]:
    try:
        return list(nx.lexicographical_topological_sort(_digraph(g)))
    except nx.NetworkXUnfeasible as e:
        raise GraphError('graph has a directed cycle') from e


def ancestors(g: MixedGraph, vertices: Iterable[int]) -> Set[int]:
    """an(C): C together with every vertex that has a directed path into C."""
    dg = _digraph(g)
    out: Set[int] = set()
    for v in vertices:
        _check_vertex(g, v)
        out.add(v)
        out |= nx.ancestors(dg, v)
    return out


def districts(g: MixedGraph) -> List[List[int]]:
    """Bidirected connected components, each sorted, listed by smallest member."""
    ug = nx.Graph()
    ug.add_nodes_from(g.vertices)
    ug.add_edges_from(g.bidirected)
    return sorted((sorted(c) for c in nx.connected_components(ug)), key=lambda c: c[0])


# ---------------------------------------------------------------------------
# Separation
# ---------------------------------------------------------------------------


def m_separated(g: MixedGraph, a: int, b: int, C: Iterable[int]) -> bool:
    """Decide ``a _||_m b | C`` through the augmented ancestral graph.

    On the ancestral set of ``{a, b} | C`` two vertices are joined when adjacent or when
    both lie in ``D | pa(D)`` for a district ``D`` of that set (collider connection);
    ``a`` and ``b`` are m-separated iff ``C`` separates them in the undirected result.
    """
    cond = set(C)
    for v in (a, b, *cond):
        _check_vertex(g, v)
    if a == b:
        raise GraphError('m-separation needs two distinct vertices')
    if a in cond or b in cond:
        raise GraphError('conditioning set must not contain the queried vertices')

    anc = ancestors(g, {a, b} | cond)
    sub, mapping = induced_subgraph(g, anc)
    back = {orig: k for k, orig in enumerate(mapping)}

    moral = nx.Graph()
    moral.add_nodes_from(sub.vertices)
    moral.add_edges_from(skeleton(sub))
    for district in districts(sub):
        members = set(district)
        for v in district:
            members.update(sub.parents(v))
        moral.add_edges_from(itertools.combinations(sorted(members), 2))

    moral.remove_nodes_from(back[c] for c in cond)
    return not nx.has_path(moral, back[a], back[b])


def m_separations(g: MixedGraph, max_exhaustive: Optional[int] = None) -> Iterator[Tuple[int, int, FrozenSet[int]]]:
    """Yield every separation statement ``(a, b, C)`` with ``a < b`` (exhaustive)."""
    limit = settings.msep_exhaustive_max_vertices if max_exhaustive is None else max_exhaustive
    if g.d > limit:
        raise OracleLimitError(f'exhaustive m-separation listing is limited to d <= {limit}')
    for a, b in itertools.combinations(g.vertices, 2):
        rest = [v for v in g.vertices if v not in (a, b)]
        for r in range(len(rest) + 1):
            for C in itertools.combinations(rest, r):
                if m_separated(g, a, b, C):
                    yield (a, b, frozenset(C))


# ---------------------------------------------------------------------------
# Skeleton and colliders
# ---------------------------------------------------------------------------


def skeleton(g: MixedGraph) -> FrozenSet[Edge]:
    return frozenset(_canon(s, t) for s, t in g.directed) | g.bidirected


def _arrowhead_at(g: MixedGraph, other: int, mid: int) -> bool:
    return (other, mid) in g.directed or _canon(other, mid) in g.bidirected


def collider_triples(g: MixedGraph) -> FrozenSet[Triple]:
    out = set()
    for mid in g.vertices:
        heads = [v for v in g.vertices if v != mid and _arrowhead_at(g, v, mid)]
        for i, k in itertools.combinations(sorted(heads), 2):
            out.add((i, mid, k))
    return frozenset(out)


def v_structures(g: MixedGraph) -> FrozenSet[Triple]:
    return frozenset(t for t in collider_triples(g) if not g.adjacent(t[0], t[2]))


# ---------------------------------------------------------------------------
# Treks
# ---------------------------------------------------------------------------


def _paths_into(g: MixedGraph, target: int) -> List[Tuple[int, ...]]:
    """Every directed path ending at ``target``, listed backwards from ``target``."""
    parents = {v: g.parents(v) for v in g.vertices}
    out: List[Tuple[int, ...]] = []
    stack: List[Tuple[int, ...]] = [(target,)]
    while stack:
        path = stack.pop()
        out.append(path)
        for p in parents[path[-1]]:
            if p not in path:
                stack.append(path + (p,))
    return out


def _treks(g: MixedGraph, i: int, j: int, simple_only: bool) -> List[Trek]:
    if not is_acyclic(g):
        raise GraphError('trek enumeration needs an acyclic graph')
    _check_vertex(g, i)
    _check_vertex(g, j)
    lefts = _paths_into(g, i)
    rights = [tuple(reversed(p)) for p in _paths_into(g, j)]
    out: List[Trek] = []
    for left in lefts:
        top = left[-1]
        for right in rights:
            start = right[0]
            if start == top:
                trek = Trek(left, right, False, top)
                if i == j and len(left) == 1 and len(right) == 1:
                    continue
            elif _canon(top, start) in g.bidirected:
                trek = Trek(left, right, True, None)
            else:
                continue
            if simple_only and not trek.is_simple():
                continue
            out.append(trek)
    out.sort(key=lambda t: (t.left, t.right, t.has_bidirected))
    return out


def simple_treks(g: MixedGraph, i: int, j: int) -> List[Trek]:
    return _treks(g, i, j, simple_only=True)


def all_treks(g: MixedGraph, i: int, j: int) -> List[Trek]:
    """Every trek between ``i`` and ``j``; for ``i == j`` the trivial trek is left out."""
    return _treks(g, i, j, simple_only=False)


# ---------------------------------------------------------------------------
# Subgraphs, neighborhoods, enumeration
# ---------------------------------------------------------------------------


def induced_subgraph(g: MixedGraph, W: Iterable[int]) -> Tuple[MixedGraph, Tuple[int, ...]]:
    """Restrict ``g`` to ``W``; returns the relabeled graph and ``mapping[new] = old``."""
    keep = sorted(set(W))
    for v in keep:
        if not 0 <= v < g.d:
            raise GraphError(f'vertex {v} is not in the graph (d={g.d})')
    index = {v: k for k, v in enumerate(keep)}
    directed = frozenset((index[s], index[t]) for s, t in g.directed if s in index and t in index)
    bidirected = frozenset((index[a], index[b]) for a, b in g.bidirected if a in index and b in index)
    return MixedGraph(len(keep), directed, bidirected), tuple(keep)


def _move_allowed(
    g: MixedGraph,
    candidate: MixedGraph,
    i: int,
    j: int,
    new_state: FrozenSet[str],
    graph_class: GraphClass,
    max_in_degree: Optional[int],
) -> bool:
    if new_state not in _PAIR_STATES[graph_class]:
        return False
    # Only a newly added directed edge can close a cycle.
    old_state = g.pair_state(i, j)
    a, b = _canon(i, j)
    added = new_state - old_state
    if FWD in added or BWD in added:
        base = g.with_pair_state(a, b, frozenset())
        if FWD in added and _reaches(base, b, a):
            return False
        if BWD in added and _reaches(base, a, b):
            return False
    if max_in_degree is not None:
        if candidate.in_degree(a) > max_in_degree or candidate.in_degree(b) > max_in_degree:
            return False
    return True


def neighbors(
    g: MixedGraph,
    graph_class: GraphClass = GraphClass.BAP,
    *,
    max_in_degree: Optional[int] = None,
    additions: bool = True,
    deletions: bool = True,
    changes: bool = True,
) -> List[MixedGraph]:
    """Graphs one edge addition, deletion or same-pair type change away from ``g``."""
    types = (FWD, BWD) if graph_class == GraphClass.DAG else (FWD, BWD, BI)
    out: Set[MixedGraph] = set()
    for a, b in itertools.combinations(g.vertices, 2):
        state = g.pair_state(a, b)
        targets: List[FrozenSet[str]] = []
        if additions:
            targets += [state | {t} for t in types if t not in state]
        if deletions:
            targets += [state - {t} for t in state]
        if changes:
            targets += [(state - {t}) | {u} for t in state for u in types if u not in state]
        for new_state in targets:
            if new_state == state:
                continue
            candidate = g.with_pair_state(a, b, new_state)
            if _move_allowed(g, candidate, a, b, new_state, graph_class, max_in_degree):
                out.add(candidate)
    return sorted(out, key=MixedGraph.key)


def enumerate_graphs(d: int, graph_class: GraphClass = GraphClass.BAP) -> List[MixedGraph]:
    if d > settings.enumerate_max_vertices:
        raise OracleLimitError(f'enumeration is limited to d <= {settings.enumerate_max_vertices}')
    pairs = list(itertools.combinations(range(d), 2))
    out = []
    for states in itertools.product(_PAIR_STATES[graph_class], repeat=len(pairs)):
        directed, bidirected = set(), set()
        for (a, b), state in zip(pairs, states):
            if FWD in state:
                directed.add((a, b))
            if BWD in state:
                directed.add((b, a))
            if BI in state:
                bidirected.add((a, b))
        g = MixedGraph(d, frozenset(directed), frozenset(bidirected))
        if is_acyclic(g):
            out.append(g)
    return sorted(out, key=MixedGraph.key)

