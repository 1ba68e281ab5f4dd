from __future__ import annotations

import argparse

from ..core.config import settings
from ..schemas import CompareConfig, SearchReport
from ..services.graph_core import GraphClass
from ..services.io import read_dataset, read_graph, write_graph
from ..services.search import SearchConfig, greedy_search
from ..services.simulation import fit_dataset
from .common import add_data_arguments, add_output_argument, emit, load_stats


def run_search(args: argparse.Namespace) -> int:
    cfg = SearchConfig(
        restarts=args.restarts,
        max_in_degree=args.max_in_degree,
        graph_class=GraphClass(args.graph_class),
        neighbor_subset=args.neighbor_subset,
        seed=args.seed,
        forward_only=args.forward_only,
        forward_restart=args.forward_restart,
        threads=args.threads,
    )
    start_graphs = [read_graph(path) for path in args.start_graph]
    result = greedy_search(load_stats(args), cfg, start_graphs=start_graphs)
    if args.graph_out:
        write_graph(result.graph, args.graph_out, comment=f'score {result.fit.score:.12g}')
    emit(SearchReport.from_result(result, cfg), args.out)
    return 0


def run_compare(args: argparse.Namespace) -> int:
    cfg = CompareConfig(
        bap_restarts=args.bap_restarts,
        dag_restarts=args.dag_restarts,
        max_in_degree=args.max_in_degree,
        neighbor_subset=args.neighbor_subset,
        log_transform=args.log_transform,
        standardize=args.standardize,
        inject_best_dag=args.inject_best_dag,
        seed=args.seed,
        threads=args.threads,
    )
    emit(fit_dataset(read_dataset(args.data), cfg), args.out)
    return 0


def _common_search_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--max-in-degree', type=int, default=None, help='cap on arrowheads per vertex')
    parser.add_argument('--neighbor-subset', type=int, default=None, help='score only this many random neighbors per step')
    parser.add_argument('--seed', type=int, default=None)
    parser.add_argument('--threads', type=int, default=settings.threads)


def register(subparsers) -> None:
    parser = subparsers.add_parser('search', help='greedy structure search with random restarts')
    add_data_arguments(parser)
    parser.add_argument('--restarts', type=int, default=1)
    parser.add_argument('--class', dest='graph_class', choices=['bap', 'dag'], default='bap')
    parser.add_argument('--forward-only', action='store_true', help='additions only, starting from the empty graph')
    parser.add_argument('--forward-restart', action='store_true', help='add one forward run to the random restarts')
    parser.add_argument('--start-graph', action='append', default=[], help='extra start graph file (repeatable)')
    parser.add_argument('--graph-out', help='write the best graph to this file')
    _common_search_flags(parser)
    add_output_argument(parser)
    parser.set_defaults(func=run_search)

    parser = subparsers.add_parser('compare', help='BAP search vs DAG search on one dataset')
    add_data_arguments(parser)
    parser.add_argument('--bap-restarts', type=int, default=10)
    parser.add_argument('--dag-restarts', type=int, default=10)
    parser.add_argument(
        '--inject-best-dag',
        action=argparse.BooleanOptionalAction,
        default=True,
        help='start one BAP climb from the best DAG',
    )
    _common_search_flags(parser)
    add_output_argument(parser)
    parser.set_defaults(func=run_compare)
