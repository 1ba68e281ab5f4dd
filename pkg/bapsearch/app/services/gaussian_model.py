"""Linear Gaussian SEM parametrization of a path diagram.

Index convention: ``B[i, j]`` is the weight of the edge ``j -> i``, so
``causal_effects(theta)[i, j]`` is the total effect of ``X_j`` on ``X_i``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import linalg

from ..core.config import settings
from ..core.errors import ModelError, OracleLimitError
from .graph_core import MixedGraph, Trek, all_treks, is_acyclic, is_bap, simple_treks

logger = logging.getLogger(__name__)

_PATTERN_TOL = 0.0
_STANDARD_TOL = 1e-8
MIN_EIGENVALUE = 1e-6


@dataclass(frozen=True)
class Parameters:
    graph: MixedGraph
    B: np.ndarray
    Omega: np.ndarray

    def __post_init__(self) -> None:
        d = self.graph.d
        B = np.asarray(self.B, dtype=float)
        Omega = np.asarray(self.Omega, dtype=float)
        if B.shape != (d, d) or Omega.shape != (d, d):
            raise ModelError(f'parameter matrices must be {d}x{d}')
        object.__setattr__(self, 'B', B)
        object.__setattr__(self, 'Omega', Omega)

    def validate(self) -> None:
        """Check membership of (B, Omega) in the graph's parameter space pattern."""
        if np.any(np.abs(self.B[~self.graph.b_mask()]) > _PATTERN_TOL):
            raise ModelError('B has a nonzero entry without a matching directed edge')
        if np.any(np.abs(self.Omega[~self.graph.omega_mask()]) > _PATTERN_TOL):
            raise ModelError('Omega has a nonzero entry without a matching bidirected edge')
        if not np.allclose(self.Omega, self.Omega.T, atol=1e-12):
            raise ModelError('Omega is not symmetric')

    @property
    def d(self) -> int:
        return self.graph.d


def _inverse_i_minus_b(theta: Parameters) -> np.ndarray:
    if not is_acyclic(theta.graph):
        raise ModelError('I - B is only guaranteed invertible for acyclic graphs')
    d = theta.d
    return linalg.solve(np.eye(d) - theta.B, np.eye(d))


def phi(theta: Parameters) -> np.ndarray:
    """Implied covariance ``(I-B)^-1 Omega (I-B)^-T``."""
    theta.validate()
    A = _inverse_i_minus_b(theta)
    sigma = A @ theta.Omega @ A.T
    return (sigma + sigma.T) / 2.0


def causal_effects(theta: Parameters) -> np.ndarray:
    theta.validate()
    return _inverse_i_minus_b(theta)


def standardize_parameters(theta: Parameters) -> Parameters:
    """Rescale so that ``phi`` has unit diagonal (the normalized parameter space)."""
    sigma = phi(theta)
    scale = 1.0 / np.sqrt(np.diag(sigma))
    D = np.diag(scale)
    Dinv = np.diag(1.0 / scale)
    return Parameters(theta.graph, D @ theta.B @ Dinv, D @ theta.Omega @ D)


# ---------------------------------------------------------------------------
# Trek-sum oracle
# ---------------------------------------------------------------------------


def _edge_product(trek: Trek, theta: Parameters) -> float:
    value = 1.0
    for s, t in trek.directed_edges():
        value *= theta.B[t, s]
    edge = trek.bidirected_edge()
    if edge is not None:
        value *= theta.Omega[edge[0], edge[1]]
    return value


def _guard(theta: Parameters) -> None:
    if theta.d > settings.wright_max_vertices:
        raise OracleLimitError(f'trek enumeration is limited to d <= {settings.wright_max_vertices}')
    theta.validate()
    if not is_acyclic(theta.graph):
        raise ModelError('trek sums are only finite for acyclic graphs here')


def wright_covariance_unstandardized(theta: Parameters) -> np.ndarray:
    _guard(theta)
    g = theta.graph
    d = g.d
    out = np.zeros((d, d))

    for i in range(d):
        total = theta.Omega[i, i]
        for trek in all_treks(g, i, i):
            c = _edge_product(trek, theta)
            total += c if trek.has_bidirected else c * theta.Omega[trek.head, trek.head]
        out[i, i] = total

    for i in range(d):
        for j in range(i + 1, d):
            total = 0.0
            for trek in simple_treks(g, i, j):
                c = _edge_product(trek, theta)
                total += c if trek.has_bidirected else c * out[trek.head, trek.head]
            out[i, j] = out[j, i] = total
    return out


def wright_covariance_standardized(theta: Parameters) -> np.ndarray:
    _guard(theta)
    diag = np.diag(phi(theta))
    if np.any(np.abs(diag - 1.0) > _STANDARD_TOL):
        raise ModelError('parameters are not standardized: phi(theta) has a non-unit diagonal')
    g = theta.graph
    out = np.eye(g.d)
    for i in range(g.d):
        for j in range(i + 1, g.d):
            out[i, j] = out[j, i] = sum(_edge_product(t, theta) for t in simple_treks(g, i, j))
    return out


# ---------------------------------------------------------------------------
# Simulation
# ---------------------------------------------------------------------------


def sample_parameters(g: MixedGraph, rng: np.random.Generator, *, max_tries: int = 1000) -> Parameters:
    """Draw edge labels from N(0, 1); error variances are absolute row sums plus chi2(1)."""
    if not is_bap(g):
        raise ModelError('parameters are only sampled for BAPs')
    d = g.d
    B = np.zeros((d, d))
    for s, t in sorted(g.directed):
        B[t, s] = rng.standard_normal()

    for attempt in range(max_tries):
        Omega = np.zeros((d, d))
        for a, b in sorted(g.bidirected):
            Omega[a, b] = Omega[b, a] = rng.standard_normal()
        row_sums = np.abs(Omega).sum(axis=1)
        Omega[np.diag_indices(d)] = row_sums + rng.chisquare(1, size=d)
        if d == 0 or np.linalg.eigvalsh(Omega).min() >= MIN_EIGENVALUE:
            return Parameters(g, B, Omega)
        logger.debug('resampling Omega (attempt %d): minimum eigenvalue below %g', attempt + 1, MIN_EIGENVALUE)
    raise ModelError(f'could not draw a well-conditioned Omega in {max_tries} attempts')


def sample_data(theta: Parameters, n: int, rng: np.random.Generator, sigma: Optional[np.ndarray] = None) -> np.ndarray:
    """Draw ``n`` rows from N(0, phi(theta)) through a Cholesky factor."""
    if n < 1:
        raise ModelError('need at least one sample')
    cov = phi(theta) if sigma is None else sigma
    try:
        L = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as e:
        raise ModelError('covariance is not positive definite') from e
    return rng.standard_normal((n, theta.d)) @ L.T
