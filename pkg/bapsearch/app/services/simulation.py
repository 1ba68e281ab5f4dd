"""End-to-end workflows: the recovery simulation study and the BAP-vs-DAG comparison on a dataset.

Each simulation replicate draws a uniform BAP, parameters and data, searches for an
estimate, grows the empirical equivalence classes of truth and estimate, and compares
their minimal absolute total effects by ROC. Replicates are independent; replicate ``r``
draws all of its randomness from child ``r`` of the master seed.
"""
from __future__ import annotations

import logging
from typing import Dict, List

import numpy as np
from joblib import Parallel, delayed

from ..core.errors import BapError
from ..core.rng import generator, spawn
from ..schemas import (
    AverageRocModel,
    CompareConfig,
    ComparisonReport,
    EquivalenceClassReport,
    GraphModel,
    ParametersModel,
    ReplicateReport,
    RocModel,
    SearchReport,
    SimulationConfig,
    SimulationReport,
)
from .effects import FPR_GRID, RocCurve, average_roc, min_abs_effects, roc_auc, summarize_auc
from .equivalence import Provenance, greedy_equivalence_class, translate_parameters
from .gaussian_model import Parameters, sample_data, sample_parameters, standardize_parameters
from .graph_core import GraphClass, MixedGraph
from .io import Dataset
from .ricf_fit import SampleStats, ScoreCache
from .search import SearchConfig, greedy_search, sample_uniform_bap

logger = logging.getLogger(__name__)


def _translated_truth(ec, truth: Parameters) -> Dict[MixedGraph, Parameters]:
    """True (standardized) parameters carried over to the collider-identical members."""
    standard = standardize_parameters(truth)
    out = {}
    for member, provenance in ec.members.items():
        if provenance == Provenance.COLLIDER:
            out[member] = translate_parameters(standard, truth.graph, member)
    return out


def _replicate(index: int, seed: np.random.SeedSequence, cfg: SimulationConfig) -> ReplicateReport:
    graph_seed, param_seed, data_seed, search_seed = spawn(seed, 4)
    report = ReplicateReport(index=index)
    try:
        truth = sample_uniform_bap(cfg.d, generator(graph_seed), cfg.max_in_degree, burn_in=cfg.burn_in)
        theta = sample_parameters(truth, generator(param_seed))
        report.truth = GraphModel.from_graph(truth)
        report.truth_parameters = ParametersModel.from_parameters(theta)

        dataset = Dataset.from_array(sample_data(theta, cfg.n, generator(data_seed)), f'simulation replicate {index}')
        if cfg.standardize:
            dataset = dataset.standardize()
        stats = dataset.stats()
        cache = ScoreCache()

        search_cfg = SearchConfig(
            restarts=cfg.restarts,
            max_in_degree=cfg.search_max_in_degree,
            seed=search_seed,
            forward_restart=cfg.forward_search,
        )
        result = greedy_search(stats, search_cfg, cache)
        report.estimate = GraphModel.from_graph(result.graph)
        report.estimate_score = result.fit.score
        report.skipped_restarts = result.trace.skipped

        truth_ec = greedy_equivalence_class(truth, stats, cfg.epsilon, cache)
        estimate_ec = greedy_equivalence_class(result.graph, stats, cfg.epsilon, cache)
        report.truth_score = truth_ec.zeta
        report.truth_class = EquivalenceClassReport.from_class(truth_ec).members
        report.estimate_class = EquivalenceClassReport.from_class(estimate_ec).members

        known = _translated_truth(truth_ec, theta) if cfg.use_true_parameters else None
        truth_bounds = min_abs_effects(truth_ec, stats, cache, parameters=known)
        estimate_bounds = min_abs_effects(estimate_ec, stats, cache)
        report.truth_bounds = truth_bounds.matrix.tolist()
        report.estimate_bounds = estimate_bounds.matrix.tolist()
        report.failed_members = truth_bounds.failed + estimate_bounds.failed
        report.roc = RocModel.from_curve(roc_auc(truth_bounds, estimate_bounds))
    except BapError as e:
        logger.warning('replicate %d failed: %s', index, e)
        report.error = str(e)
        return report

    logger.info('replicate %d: |EC truth|=%d, |EC estimate|=%d, AUC=%s',
                index, len(report.truth_class), len(report.estimate_class), report.roc.auc)
    return report


def _curve(model: RocModel) -> RocCurve:
    return RocCurve(np.array(model.fpr), np.array(model.tpr), np.zeros(0), model.auc, model.positives, model.negatives)


def run_simulation(cfg: SimulationConfig) -> SimulationReport:
    seeds = spawn(cfg.seed, cfg.replicates)
    logger.info('simulation: %d replicates, d=%d, n=%d, R=%d', cfg.replicates, cfg.d, cfg.n, cfg.restarts)
    replicates: List[ReplicateReport] = Parallel(n_jobs=cfg.threads)(
        delayed(_replicate)(r, seeds[r], cfg) for r in range(cfg.replicates)
    )
    replicates = sorted(replicates, key=lambda rep: rep.index)
    curves = [_curve(rep.roc) for rep in replicates if rep.roc is not None]
    summary = summarize_auc(curves)
    mean_curve = average_roc(curves)
    report = SimulationReport(
        config=cfg,
        replicates=replicates,
        mean_auc=summary.mean_auc,
        auc_defined=summary.defined,
        failed_replicates=sum(1 for rep in replicates if rep.error is not None),
        average_roc=None if mean_curve is None else AverageRocModel(
            fpr=[float(x) for x in FPR_GRID], tpr=[float(x) for x in mean_curve]
        ),
    )
    logger.info('simulation done: mean AUC %s over %d replicates', report.mean_auc, summary.defined)
    return report


def roc_curves(report: SimulationReport) -> List[RocCurve]:
    return [_curve(rep.roc) if rep.roc is not None else None for rep in report.replicates]


def fit_dataset(dataset: Dataset, cfg: CompareConfig) -> ComparisonReport:
    """DAG search and BAP search on the same data; the best DAG seeds one BAP climb."""
    if cfg.log_transform:
        dataset = dataset.log_transform()
    if cfg.standardize:
        dataset = dataset.standardize()
    stats: SampleStats = dataset.stats()
    cache = ScoreCache()
    dag_seed, bap_seed = spawn(cfg.seed, 2)

    dag_cfg = SearchConfig(
        restarts=cfg.dag_restarts,
        max_in_degree=cfg.max_in_degree,
        graph_class=GraphClass.DAG,
        neighbor_subset=cfg.neighbor_subset,
        seed=dag_seed,
        threads=cfg.threads,
    )
    dag = greedy_search(stats, dag_cfg, cache)
    bap_cfg = SearchConfig(
        restarts=cfg.bap_restarts,
        max_in_degree=cfg.max_in_degree,
        graph_class=GraphClass.BAP,
        neighbor_subset=cfg.neighbor_subset,
        seed=bap_seed,
        threads=cfg.threads,
    )
    bap = greedy_search(stats, bap_cfg, cache, start_graphs=(dag.graph,) if cfg.inject_best_dag else ())
    logger.info('%s: best DAG score %.6f, best BAP score %.6f', dataset.provenance, dag.fit.score, bap.fit.score)
    return ComparisonReport(
        dataset=dataset.provenance,
        columns=dataset.columns,
        n=dataset.n,
        config=cfg,
        dag=SearchReport.from_result(dag, dag_cfg),
        bap=SearchReport.from_result(bap, bap_cfg),
        score_difference=bap.fit.score - dag.fit.score,
    )
