from __future__ import annotations

import argparse
import logging

from ..schemas import FitReport
from ..services.io import read_graph
from ..services.ricf_fit import fit, ricf
from .common import add_data_arguments, add_output_argument, emit, load_stats

logger = logging.getLogger(__name__)


def run(args: argparse.Namespace) -> int:
    g = read_graph(args.graph)
    stats = load_stats(args)
    result = ricf(g, stats) if args.monolithic else fit(g, stats)
    if not result.converged:
        logger.warning('RICF did not converge within the iteration cap; reporting the capped fit')
    emit(FitReport.from_result(result), args.out)
    return 0


def register(subparsers) -> None:
    parser = subparsers.add_parser('fit', help='fit one graph to a dataset by RICF')
    parser.add_argument('--graph', required=True, help='graph file (d=<k> header, "i -> j" / "i <-> j" lines)')
    add_data_arguments(parser)
    parser.add_argument('--monolithic', action='store_true', help='one RICF run on the whole graph')
    add_output_argument(parser)
    parser.set_defaults(func=run)
