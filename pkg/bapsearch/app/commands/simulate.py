from __future__ import annotations

import argparse
import logging

from ..schemas import SimulationConfig
from ..services.effects import FPR_GRID
from ..services.io import read_json, write_roc_csv
from ..services.simulation import roc_curves, run_simulation
from .common import add_output_argument, emit

logger = logging.getLogger(__name__)

_OVERRIDES = ('replicates', 'd', 'max_in_degree', 'n', 'restarts', 'epsilon', 'seed', 'threads', 'burn_in')


def run(args: argparse.Namespace) -> int:
    cfg = read_json(SimulationConfig, args.config) if args.config else SimulationConfig()
    updates = {name: getattr(args, name) for name in _OVERRIDES if getattr(args, name) is not None}
    if args.use_true_parameters:
        updates['use_true_parameters'] = True
    if args.standardize is not None:
        updates['standardize'] = args.standardize
    cfg = SimulationConfig.model_validate({**cfg.model_dump(), **updates})

    report = run_simulation(cfg)
    if args.roc_out:
        average = None if report.average_roc is None else report.average_roc.tpr
        write_roc_csv(roc_curves(report), args.roc_out, average=average, grid=FPR_GRID)
    emit(report, args.out)
    logger.info('mean AUC: %s', report.mean_auc)
    return 0


def register(subparsers) -> None:
    parser = subparsers.add_parser('simulate', help='structure recovery simulation study')
    parser.add_argument('--config', help='JSON simulation config (see configs/)')
    parser.add_argument('--replicates', type=int)
    parser.add_argument('--d', type=int)
    parser.add_argument('--max-in-degree', type=int)
    parser.add_argument('--n', type=int)
    parser.add_argument('--restarts', type=int)
    parser.add_argument('--epsilon', type=float)
    parser.add_argument('--seed', type=int)
    parser.add_argument('--threads', type=int)
    parser.add_argument('--burn-in', type=int)
    parser.add_argument('--standardize', action=argparse.BooleanOptionalAction, default=None)
    parser.add_argument('--use-true-parameters', action='store_true',
                        help='truth-side effects from the true parameters where they carry over')
    parser.add_argument('--roc-out', help='CSV with every ROC curve and the pointwise average')
    add_output_argument(parser)
    parser.set_defaults(func=run)
