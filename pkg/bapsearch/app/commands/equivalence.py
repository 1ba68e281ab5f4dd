from __future__ import annotations

import argparse
import sys

from ..core.config import settings
from ..schemas import EquivalenceClassReport
from ..services.effects import min_abs_effects
from ..services.equivalence import greedy_equivalence_class
from ..services.io import read_graph, read_json, write_matrix_csv
from .common import add_data_arguments, add_output_argument, emit, load_dataset, load_stats


def run_class(args: argparse.Namespace) -> int:
    ec = greedy_equivalence_class(read_graph(args.graph), load_stats(args), args.epsilon)
    emit(EquivalenceClassReport.from_class(ec), args.out)
    return 0


def run_effects(args: argparse.Namespace) -> int:
    ec = read_json(EquivalenceClassReport, args.equivalence_class).to_class()
    dataset = load_dataset(args)
    bounds = min_abs_effects(ec, dataset.stats())
    write_matrix_csv(bounds.matrix, args.out or sys.stdout, labels=dataset.columns)
    return 0


def register(subparsers) -> None:
    parser = subparsers.add_parser('equiv-class', help='empirical equivalence class of a graph')
    parser.add_argument('--graph', required=True)
    add_data_arguments(parser)
    parser.add_argument('--epsilon', type=float, default=settings.epsilon)
    add_output_argument(parser)
    parser.set_defaults(func=run_class)

    parser = subparsers.add_parser('effects', help='minimal absolute total effects over a class')
    parser.add_argument('--class', dest='equivalence_class', required=True, help='report written by equiv-class')
    add_data_arguments(parser)
    parser.add_argument('--out', help='CSV file; row i, column j bounds the effect of column j on column i')
    parser.set_defaults(func=run_effects)
