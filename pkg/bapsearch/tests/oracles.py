"""Brute-force reference implementations used only by the tests."""
from __future__ import annotations

import itertools
import math
from typing import Dict, List, Set, Tuple

import numpy as np

from app.services.graph_core import MixedGraph


def _has_cycle(d: int, directed) -> bool:
    children: Dict[int, List[int]] = {v: [] for v in range(d)}
    for s, t in directed:
        children[s].append(t)
    state = [0] * d

    def visit(v: int) -> bool:
        state[v] = 1
        for w in children[v]:
            if state[w] == 1 or (state[w] == 0 and visit(w)):
                return True
        state[v] = 2
        return False

    return any(state[v] == 0 and visit(v) for v in range(d))


def brute_force_baps(d: int, with_bidirected: bool = True) -> Set[MixedGraph]:
    """Every BAP (or DAG) on ``d`` vertices: per pair none, i->j, j->i (and i<->j)."""
    pairs = list(itertools.combinations(range(d), 2))
    options = 4 if with_bidirected else 3
    out = set()
    for states in itertools.product(range(options), repeat=len(pairs)):
        directed, bidirected = [], []
        for (i, j), s in zip(pairs, states):
            if s == 1:
                directed.append((i, j))
            elif s == 2:
                directed.append((j, i))
            elif s == 3:
                bidirected.append((i, j))
        if not _has_cycle(d, directed):
            out.add(MixedGraph(d, frozenset(directed), frozenset(bidirected)))
    return out


def _ancestors_of(g: MixedGraph, C) -> Set[int]:
    out = set(C)
    frontier = list(C)
    while frontier:
        v = frontier.pop()
        for s, t in g.directed:
            if t == v and s not in out:
                out.add(s)
                frontier.append(s)
    return out


def path_m_separated(g: MixedGraph, a: int, b: int, C) -> bool:
    """m-separation by listing every non-overlapping path from ``a`` to ``b``."""
    C = set(C)
    an = _ancestors_of(g, C)
    # adjacency entries: (neighbor, arrowhead at neighbor, arrowhead at self)
    adj: Dict[int, List[Tuple[int, bool, bool]]] = {v: [] for v in range(g.d)}
    for s, t in g.directed:
        adj[s].append((t, True, False))
        adj[t].append((s, False, True))
    for x, y in g.bidirected:
        adj[x].append((y, True, True))
        adj[y].append((x, True, True))

    def connecting(path_nodes, marks) -> bool:
        # marks[k] = (head at path_nodes[k], head at path_nodes[k + 1]) for edge k
        for k in range(1, len(path_nodes) - 1):
            v = path_nodes[k]
            collider = marks[k - 1][1] and marks[k][0]
            if collider and v not in an:
                return False
            if not collider and v in C:
                return False
        return True

    stack = [([a], [])]
    while stack:
        nodes, marks = stack.pop()
        last = nodes[-1]
        for w, head_w, head_self in adj[last]:
            if w in nodes:
                continue
            new_nodes, new_marks = nodes + [w], marks + [(head_self, head_w)]
            if w == b:
                if connecting(new_nodes, new_marks):
                    return False
                continue
            stack.append((new_nodes, new_marks))
    return True


def moral_d_separated(g: MixedGraph, a: int, b: int, C) -> bool:
    """d-separation in a DAG via the moralized ancestral graph."""
    assert not g.bidirected
    keep = _ancestors_of(g, {a, b} | set(C))
    edges = set()
    for s, t in g.directed:
        if s in keep and t in keep:
            edges.add(frozenset((s, t)))
    for v in keep:
        parents = [s for s, t in g.directed if t == v]
        for p, q in itertools.combinations(parents, 2):
            edges.add(frozenset((p, q)))
    blocked = set(C)
    seen, frontier = {a}, [a]
    while frontier:
        v = frontier.pop()
        for e in edges:
            if v in e:
                (w,) = tuple(e - {v})
                if w not in seen and w not in blocked:
                    if w == b:
                        return False
                    seen.add(w)
                    frontier.append(w)
    return True


def regression_dag_loglik(g: MixedGraph, S: np.ndarray, n: int) -> float:
    """Closed-form Gaussian DAG log-likelihood: one least-squares regression per vertex."""
    assert not g.bidirected
    S_ml = S * (n - 1) / n
    d = S.shape[0]
    total = 0.0
    for i in range(d):
        pa = sorted(s for s, t in g.directed if t == i)
        rss = S_ml[i, i]
        if pa:
            coef = np.linalg.solve(S_ml[np.ix_(pa, pa)], S_ml[pa, i])
            rss -= S_ml[i, pa] @ coef
        total += math.log(rss)
    return -(n / 2.0) * (d * math.log(2 * math.pi) + total + d)


def regression_dag_coefficients(g: MixedGraph, S: np.ndarray) -> np.ndarray:
    d = S.shape[0]
    B = np.zeros((d, d))
    for i in range(d):
        pa = sorted(s for s, t in g.directed if t == i)
        if pa:
            B[i, pa] = np.linalg.solve(S[np.ix_(pa, pa)], S[pa, i])
    return B
