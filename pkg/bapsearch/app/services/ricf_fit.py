"""Maximum likelihood fitting of BAPs by residual iterative conditional fitting (RICF).

Everything here depends on the data only through the sample covariance ``S`` (divisor
``n - 1``) and ``n``. The fitted quantities maximize

    l(Sigma; S) = -(n/2) * (log|2 pi Sigma| + ((n-1)/n) tr(Sigma^-1 S)),

whose unconstrained maximizer is ``S_ml = ((n-1)/n) S``.
"""
from __future__ import annotations

import hashlib
import json
import logging
import math
import threading
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from ..core.config import settings
from ..core.errors import FitError, GraphError
from .gaussian_model import Parameters
from .graph_core import GraphClass, MixedGraph, districts, is_admissible

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RicfOptions:
    max_iter: int = 10
    tol: float = 1e-8
    penalty_multiplier: float = 1.0

    @classmethod
    def from_settings(cls) -> 'RicfOptions':
        return cls(
            max_iter=settings.ricf_max_iter,
            tol=settings.ricf_tol,
            penalty_multiplier=settings.penalty_multiplier,
        )


@dataclass(frozen=True)
class SampleStats:
    """Sufficient statistics of a dataset: ``S`` with divisor ``n - 1``, ``n`` and an id."""

    S: np.ndarray
    n: int
    dataset_id: str

    @property
    def d(self) -> int:
        return self.S.shape[0]

    @property
    def S_ml(self) -> np.ndarray:
        return self.S * ((self.n - 1) / self.n)

    @classmethod
    def from_covariance(cls, S: np.ndarray, n: int, *, dataset_id: Optional[str] = None) -> 'SampleStats':
        S = np.asarray(S, dtype=float)
        if S.ndim != 2 or S.shape[0] != S.shape[1]:
            raise FitError('sample covariance must be a square matrix')
        d = S.shape[0]
        if n < d + 1 or n < 2:
            raise FitError(f'need at least d + 1 = {d + 1} samples, got n = {n}')
        S = (S + S.T) / 2.0
        if d and not _is_pd(S):
            raise FitError('sample covariance is not positive definite')
        if dataset_id is None:
            digest = hashlib.sha256()
            digest.update(np.ascontiguousarray(S).tobytes())
            digest.update(str(n).encode())
            dataset_id = digest.hexdigest()[:16]
        return cls(S, int(n), dataset_id)

    @classmethod
    def from_data(cls, X: np.ndarray, *, dataset_id: Optional[str] = None) -> 'SampleStats':
        X = np.asarray(X, dtype=float)
        if X.ndim != 2:
            raise FitError('data must be an n x d matrix')
        n, d = X.shape
        if n < d + 1 or n < 2:
            raise FitError(f'need at least d + 1 = {d + 1} samples, got n = {n}')
        S = np.cov(X, rowvar=False, ddof=1).reshape(d, d)
        return cls.from_covariance(S, n, dataset_id=dataset_id)

    def restrict(self, W: Sequence[int]) -> 'SampleStats':
        idx = list(W)
        return SampleStats.from_covariance(self.S[np.ix_(idx, idx)], self.n)


@dataclass(frozen=True)
class DistrictTerm:
    district: Tuple[int, ...]
    parents: Tuple[int, ...]
    loglik: float
    score: float
    converged: bool
    iterations: int
    # Rows of B for the district (columns over district + parents) and the Omega block.
    B_rows: np.ndarray = field(repr=False, compare=False)
    Omega_block: np.ndarray = field(repr=False, compare=False)


@dataclass
class FitResult:
    graph: MixedGraph
    theta_hat: Parameters
    loglik: float
    score: float
    converged: bool
    iterations: int
    n: int
    per_district: List[DistrictTerm] = field(default_factory=list)
    loglik_trace: List[float] = field(default_factory=list)


class ScoreCache:
    """District-submodel fits keyed by ``cache_key``.

    Values for equal keys are equal, so concurrent inserts may race harmlessly.
    """

    def __init__(self) -> None:
        self._data: Dict[str, DistrictTerm] = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def get(self, key: str) -> Optional[DistrictTerm]:
        with self._lock:
            value = self._data.get(key)
            if value is None:
                self.misses += 1
            else:
                self.hits += 1
        return value

    def put(self, key: str, value: DistrictTerm) -> None:
        with self._lock:
            self._data[key] = value

    def merge(self, other: 'ScoreCache') -> None:
        with self._lock:
            self._data.update(other._data)

    def __len__(self) -> int:
        return len(self._data)

    def __contains__(self, key: str) -> bool:
        return key in self._data


# ---------------------------------------------------------------------------
# Likelihood
# ---------------------------------------------------------------------------


def _is_pd(M: np.ndarray) -> bool:
    try:
        np.linalg.cholesky(M)
        return True
    except np.linalg.LinAlgError:
        return False


def log_likelihood(sigma: np.ndarray, S: np.ndarray, n: int) -> float:
    sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
    S = np.atleast_2d(np.asarray(S, dtype=float))
    if n < 2:
        raise FitError('log-likelihood needs n >= 2')
    d = sigma.shape[0]
    if d == 0:
        return 0.0
    try:
        factor = linalg.cho_factor(sigma)
    except linalg.LinAlgError as e:
        raise FitError('model covariance is singular or not positive definite') from e
    logdet = 2.0 * np.sum(np.log(np.diag(factor[0])))
    trace = float(np.trace(linalg.cho_solve(factor, S)))
    return -(n / 2.0) * (d * math.log(2.0 * math.pi) + logdet + ((n - 1) / n) * trace)


def _penalty(edges: int, vertices: int, n: int, multiplier: float) -> float:
    return multiplier * (vertices + edges) * math.log(n)


def penalized_score(loglik: float, g: MixedGraph, n: int, multiplier: float = 1.0) -> float:
    """``(loglik - (#nodes + #edges) log n) / n``; a bidirected edge counts once."""
    return (loglik - _penalty(g.edge_count, g.d, n, multiplier)) / n


# ---------------------------------------------------------------------------
# RICF
# ---------------------------------------------------------------------------


def _implied_sigma(B: np.ndarray, Omega: np.ndarray) -> np.ndarray:
    d = B.shape[0]
    A = linalg.solve(np.eye(d) - B, np.eye(d))
    sigma = A @ Omega @ A.T
    return (sigma + sigma.T) / 2.0


def _ricf_core(
    g: MixedGraph,
    S_ml: np.ndarray,
    S: np.ndarray,
    n: int,
    max_iter: int,
    tol: float,
) -> Tuple[np.ndarray, np.ndarray, bool, int, List[float]]:
    d = g.d
    B = np.zeros((d, d))
    Omega = np.diag(np.diag(S_ml)).astype(float)
    parents = [g.parents(i) for i in range(d)]
    spouses = [g.spouses(i) for i in range(d)]
    trace: List[float] = []
    converged = False
    iterations = 0

    for sweep in range(1, max_iter + 1):
        iterations = sweep
        B_old, Omega_old = B.copy(), Omega.copy()
        for i in range(d):
            pa, sp = parents[i], spouses[i]
            if not pa and not sp:
                Omega[i, i] = S_ml[i, i]
                continue
            design = []
            if pa:
                design.append(np.eye(d)[pa, :])
            if sp:
                others = [v for v in range(d) if v != i]
                pos = [others.index(s) for s in sp]
                om_inv = linalg.inv(Omega[np.ix_(others, others)])
                residual_map = (np.eye(d) - B)[others, :]
                # Pseudo-variables: spouse rows of Omega_{-i,-i}^{-1} eps_{-i}.
                design.append((om_inv @ residual_map)[pos, :])
            D = np.vstack(design)
            gram = D @ S_ml @ D.T
            cross = D @ S_ml[:, i]
            try:
                coef = linalg.solve(gram, cross, assume_a='pos')
            except linalg.LinAlgError as e:
                raise FitError(f'singular regression at vertex {i}') from e
            resid = float(S_ml[i, i] - coef @ cross)
            B[i, :] = 0.0
            B[i, pa] = coef[: len(pa)]
            if sp:
                omega_sp = coef[len(pa):]
                Omega[i, :] = 0.0
                Omega[:, i] = 0.0
                Omega[i, sp] = omega_sp
                Omega[sp, i] = omega_sp
                w = np.zeros(len(others))
                w[pos] = omega_sp
                Omega[i, i] = resid + float(w @ om_inv @ w)
            else:
                Omega[i, i] = resid

        trace.append(log_likelihood(_implied_sigma(B, Omega), S, n))
        if len(trace) > 1 and trace[-1] < trace[-2] - 1e-8 * max(1.0, abs(trace[-2])):
            logger.debug('RICF likelihood decreased at sweep %d: %.12g -> %.12g', sweep, trace[-2], trace[-1])
        delta = max(
            float(np.max(np.abs(B - B_old), initial=0.0)),
            float(np.max(np.abs(Omega - Omega_old), initial=0.0)),
        )
        if delta < tol:
            converged = True
            break

    if not converged:
        logger.debug('RICF stopped after %d sweeps without reaching tol=%g', iterations, tol)
    return B, Omega, converged, iterations, trace


def _check_graph(g: MixedGraph, stats: SampleStats) -> None:
    if g.d != stats.d:
        raise GraphError(f'graph has {g.d} vertices but the data has {stats.d} columns')
    if not is_admissible(g, GraphClass.BAP):
        raise GraphError('RICF is only run on BAPs')


def ricf(g: MixedGraph, stats: SampleStats, opts: Optional[RicfOptions] = None) -> FitResult:
    """Fit the full graph in one RICF run."""
    opts = opts or RicfOptions.from_settings()
    _check_graph(g, stats)
    B, Omega, converged, iterations, trace = _ricf_core(g, stats.S_ml, stats.S, stats.n, opts.max_iter, opts.tol)
    theta = Parameters(g, B, Omega)
    loglik = trace[-1] if trace else log_likelihood(_implied_sigma(B, Omega), stats.S, stats.n)
    per_district = [
        _district_term(g, district, B, Omega, stats, opts, converged, iterations) for district in districts(g)
    ]
    return FitResult(
        graph=g,
        theta_hat=theta,
        loglik=loglik,
        score=penalized_score(loglik, g, stats.n, opts.penalty_multiplier),
        converged=converged,
        iterations=iterations,
        n=stats.n,
        per_district=per_district,
        loglik_trace=trace,
    )


# ---------------------------------------------------------------------------
# District decomposition
# ---------------------------------------------------------------------------


def _district_parents(g: MixedGraph, district: Iterable[int]) -> List[int]:
    members = set(district)
    return sorted({p for v in members for p in g.parents(v)} - members)


def _district_edges(g: MixedGraph, district: Sequence[int]) -> Tuple[List[Tuple[int, int]], List[Tuple[int, int]]]:
    members = set(district)
    directed = sorted((s, t) for s, t in g.directed if t in members)
    bidirected = sorted((a, b) for a, b in g.bidirected if a in members)
    return directed, bidirected


def _submodel(g: MixedGraph, district: Sequence[int]) -> Tuple[List[int], MixedGraph]:
    """``G_k`` on ``C_k | pa(C_k)`` without edges among the parents."""
    vertices = sorted(set(district) | set(_district_parents(g, district)))
    index = {v: k for k, v in enumerate(vertices)}
    directed, bidirected = _district_edges(g, district)
    sub = MixedGraph(
        len(vertices),
        frozenset((index[s], index[t]) for s, t in directed),
        frozenset((index[a], index[b]) for a, b in bidirected),
    )
    return vertices, sub


def _term_from_blocks(
    district: Sequence[int],
    vertices: Sequence[int],
    B_rows: np.ndarray,
    Omega_block: np.ndarray,
    stats: SampleStats,
) -> float:
    """District joint log-likelihood minus the parents' marginal log-likelihoods."""
    index = {v: k for k, v in enumerate(vertices)}
    local = [index[v] for v in district]
    par = [index[v] for v in vertices if v not in set(district)]
    m = len(vertices)
    B = np.zeros((m, m))
    B[local, :] = B_rows
    Omega = np.zeros((m, m))
    Omega[np.ix_(local, local)] = Omega_block
    S_local = stats.S[np.ix_(vertices, vertices)]
    S_ml_local = stats.S_ml[np.ix_(vertices, vertices)]
    for k in par:
        Omega[k, k] = S_ml_local[k, k]
    sigma = _implied_sigma(B, Omega)
    joint = log_likelihood(sigma, S_local, stats.n)
    marginals = sum(log_likelihood(sigma[k, k], S_local[k, k], stats.n) for k in par)
    return joint - marginals


def _district_score(g: MixedGraph, district: Sequence[int], loglik: float, n: int, multiplier: float) -> float:
    directed, bidirected = _district_edges(g, district)
    return (loglik - _penalty(len(directed) + len(bidirected), len(district), n, multiplier)) / n


def _district_term(
    g: MixedGraph,
    district: Sequence[int],
    B: np.ndarray,
    Omega: np.ndarray,
    stats: SampleStats,
    opts: RicfOptions,
    converged: bool,
    iterations: int,
) -> DistrictTerm:
    vertices = sorted(set(district) | set(_district_parents(g, district)))
    B_rows = B[np.ix_(list(district), vertices)]
    Omega_block = Omega[np.ix_(list(district), list(district))]
    loglik = _term_from_blocks(district, vertices, B_rows, Omega_block, stats)
    return DistrictTerm(
        district=tuple(district),
        parents=tuple(_district_parents(g, district)),
        loglik=loglik,
        score=_district_score(g, district, loglik, stats.n, opts.penalty_multiplier),
        converged=converged,
        iterations=iterations,
        B_rows=B_rows,
        Omega_block=Omega_block,
    )


def cache_key(
    district: Iterable[int],
    directed: Iterable[Tuple[int, int]],
    bidirected: Iterable[Tuple[int, int]],
    parents: Iterable[int],
    dataset_id: str,
) -> str:
    payload = json.dumps(
        {
            'district': sorted(district),
            'directed': sorted(list(e) for e in directed),
            'bidirected': sorted(sorted(e) for e in bidirected),
            'parents': sorted(parents),
            'dataset': dataset_id,
        },
        sort_keys=True,
        separators=(',', ':'),
    )
    return hashlib.sha256(payload.encode('utf-8')).hexdigest()


def _fit_district(
    g: MixedGraph,
    district: Sequence[int],
    stats: SampleStats,
    opts: RicfOptions,
    cache: Optional[ScoreCache],
) -> DistrictTerm:
    parents = _district_parents(g, district)
    directed, bidirected = _district_edges(g, district)
    key = cache_key(district, directed, bidirected, parents, stats.dataset_id)
    if cache is not None:
        hit = cache.get(key)
        if hit is not None:
            return hit

    vertices, sub = _submodel(g, district)
    S_local = stats.S[np.ix_(vertices, vertices)]
    B, Omega, converged, iterations, _ = _ricf_core(
        sub, S_local * ((stats.n - 1) / stats.n), S_local, stats.n, opts.max_iter, opts.tol
    )
    index = {v: k for k, v in enumerate(vertices)}
    local = [index[v] for v in district]
    B_rows = B[local, :]
    Omega_block = Omega[np.ix_(local, local)]
    loglik = _term_from_blocks(district, vertices, B_rows, Omega_block, stats)
    term = DistrictTerm(
        district=tuple(district),
        parents=tuple(parents),
        loglik=loglik,
        score=_district_score(g, district, loglik, stats.n, opts.penalty_multiplier),
        converged=converged,
        iterations=iterations,
        B_rows=B_rows,
        Omega_block=Omega_block,
    )
    if cache is not None:
        cache.put(key, term)
    return term


def decomposed_loglik(
    g: MixedGraph,
    stats: SampleStats,
    cache: Optional[ScoreCache] = None,
    opts: Optional[RicfOptions] = None,
) -> Tuple[float, List[DistrictTerm]]:
    opts = opts or RicfOptions.from_settings()
    _check_graph(g, stats)
    terms = [_fit_district(g, district, stats, opts, cache) for district in districts(g)]
    return sum(t.loglik for t in terms), terms


def fit(
    g: MixedGraph,
    stats: SampleStats,
    cache: Optional[ScoreCache] = None,
    opts: Optional[RicfOptions] = None,
) -> FitResult:
    """Fit through the district decomposition and assemble the full-graph result."""
    opts = opts or RicfOptions.from_settings()
    total, terms = decomposed_loglik(g, stats, cache, opts)
    d = g.d
    B = np.zeros((d, d))
    Omega = np.zeros((d, d))
    for term in terms:
        members = list(term.district)
        vertices = sorted(set(members) | set(term.parents))
        B[np.ix_(members, vertices)] = term.B_rows
        Omega[np.ix_(members, members)] = term.Omega_block
    return FitResult(
        graph=g,
        theta_hat=Parameters(g, B, Omega),
        loglik=total,
        score=penalized_score(total, g, stats.n, opts.penalty_multiplier),
        converged=all(t.converged for t in terms),
        iterations=max((t.iterations for t in terms), default=0),
        n=stats.n,
        per_district=terms,
    )


def score(
    g: MixedGraph,
    stats: SampleStats,
    cache: Optional[ScoreCache] = None,
    opts: Optional[RicfOptions] = None,
) -> float:
    opts = opts or RicfOptions.from_settings()
    total, _ = decomposed_loglik(g, stats, cache, opts)
    return penalized_score(total, g, stats.n, opts.penalty_multiplier)
