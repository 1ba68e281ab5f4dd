"""Total-effect bounds over an equivalence class and ROC evaluation against a truth."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy import integrate

from ..core.errors import BapError, FitError, ModelError
from .equivalence import EquivalenceClass
from .gaussian_model import Parameters, causal_effects
from .graph_core import MixedGraph
from .ricf_fit import RicfOptions, SampleStats, ScoreCache, fit

logger = logging.getLogger(__name__)

FPR_GRID = np.linspace(0.0, 1.0, 101)


@dataclass
class EffectBounds:
    """Entrywise minimum of ``|E|`` over the class; ``matrix[i, j]`` bounds the effect of ``j`` on ``i``."""

    matrix: np.ndarray
    members_used: int = 0
    failed: int = 0

    def __post_init__(self) -> None:
        self.matrix = np.asarray(self.matrix, dtype=float)
        if self.matrix.ndim != 2 or self.matrix.shape[0] != self.matrix.shape[1]:
            raise ModelError('effect bounds must be a square matrix')
        if np.any(self.matrix < 0):
            raise ModelError('effect bounds must be non-negative')

    @property
    def d(self) -> int:
        return self.matrix.shape[0]


@dataclass
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray
    auc: Optional[float]
    positives: int
    negatives: int


def min_abs_effects(
    ec: EquivalenceClass,
    stats: SampleStats,
    cache: Optional[ScoreCache] = None,
    *,
    parameters: Optional[Dict[MixedGraph, Parameters]] = None,
    opts: Optional[RicfOptions] = None,
) -> EffectBounds:
    """Fit every member (unless ``parameters`` supplies it) and take the entrywise minimum of ``|E|``.

    Members that fail to fit are logged and left out; the count is kept on the result.
    """
    parameters = parameters or {}
    bound: Optional[np.ndarray] = None
    used = failed = 0
    for member in ec.graphs:
        try:
            theta = parameters.get(member)
            if theta is None:
                theta = fit(member, stats, cache, opts).theta_hat
            effects = np.abs(causal_effects(theta))
        except BapError as e:
            failed += 1
            logger.warning('class member %s left out of the effect bounds: %s', member, e)
            continue
        bound = effects if bound is None else np.minimum(bound, effects)
        used += 1
    if bound is None:
        raise FitError('no member of the equivalence class could be fitted')
    return EffectBounds(bound, members_used=used, failed=failed)


def roc_auc(truth: EffectBounds, estimate: EffectBounds) -> RocCurve:
    """ROC of the estimated bounds as scores for the pairs with a nonzero true bound.

    A pair whose mirror ``(j, i)`` is a true effect cannot be one itself, so it is left
    out of the negatives. Tied scores form a single step, which makes the trapezoid AUC the
    tie-averaged one.
    """
    if truth.d != estimate.d:
        raise ModelError('truth and estimate bounds differ in size')
    d = truth.d
    off = ~np.eye(d, dtype=bool)
    positive = (truth.matrix > 0) & off
    negative = off & ~positive & ~positive.T
    n_pos, n_neg = int(positive.sum()), int(negative.sum())
    if n_pos == 0 or n_neg == 0:
        logger.debug('AUC undefined: %d positives, %d negatives', n_pos, n_neg)
        return RocCurve(np.zeros(0), np.zeros(0), np.zeros(0), None, n_pos, n_neg)

    scores = np.concatenate([estimate.matrix[positive], estimate.matrix[negative]])
    labels = np.concatenate([np.ones(n_pos, dtype=bool), np.zeros(n_neg, dtype=bool)])
    thresholds = np.unique(scores)[::-1]
    tp = np.array([np.sum(labels & (scores >= t)) for t in thresholds])
    fp = np.array([np.sum(~labels & (scores >= t)) for t in thresholds])
    tpr = np.concatenate([[0.0], tp / n_pos])
    fpr = np.concatenate([[0.0], fp / n_neg])
    auc = float(integrate.trapezoid(tpr, fpr))
    return RocCurve(fpr, tpr, np.concatenate([[np.inf], thresholds]), auc, n_pos, n_neg)


def average_roc(curves: Sequence[RocCurve], grid: np.ndarray = FPR_GRID) -> Optional[np.ndarray]:
    """Pointwise mean true-positive rate on ``grid``; curves without an AUC are skipped."""
    rows: List[np.ndarray] = []
    for curve in curves:
        if curve.auc is None:
            continue
        # Keep the upper end of each vertical step so np.interp sees increasing abscissae.
        xs, idx = np.unique(curve.fpr[::-1], return_index=True)
        ys = curve.tpr[::-1][idx]
        rows.append(np.interp(grid, xs, ys))
    if not rows:
        return None
    return np.mean(rows, axis=0)


@dataclass
class AucSummary:
    mean_auc: Optional[float]
    defined: int
    undefined: int
    aucs: List[Optional[float]] = field(default_factory=list)


def summarize_auc(curves: Sequence[RocCurve]) -> AucSummary:
    aucs = [c.auc for c in curves]
    defined = [a for a in aucs if a is not None]
    return AucSummary(
        mean_auc=float(np.mean(defined)) if defined else None,
        defined=len(defined),
        undefined=len(aucs) - len(defined),
        aucs=aucs,
    )
