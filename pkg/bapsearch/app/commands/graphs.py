from __future__ import annotations

import argparse
import logging
import sys

from ..core.rng import generator
from ..services.graph_core import GraphClass, enumerate_graphs
from ..services.io import format_graph, write_graphs
from ..services.search import naive_sample_bap, sample_uniform_bap

logger = logging.getLogger(__name__)


def _write(graphs, out_dir, prefix) -> None:
    if out_dir:
        paths = write_graphs(graphs, out_dir, prefix=prefix)
        logger.info('wrote %d graph files to %s', len(paths), out_dir)
    else:
        sys.stdout.write('\n'.join(format_graph(g) for g in graphs))


def run_sample(args: argparse.Namespace) -> int:
    rng = generator(args.seed)
    graph_class = GraphClass(args.graph_class)
    if args.naive:
        graphs = [naive_sample_bap(args.d, rng, graph_class) for _ in range(args.count)]
    else:
        graphs = [
            sample_uniform_bap(args.d, rng, args.max_in_degree, burn_in=args.burn_in, graph_class=graph_class)
            for _ in range(args.count)
        ]
    _write(graphs, args.out_dir, 'sample')
    return 0


def run_enumerate(args: argparse.Namespace) -> int:
    graphs = enumerate_graphs(args.d, GraphClass(args.graph_class))
    logger.info('%d %s graphs on %d vertices', len(graphs), args.graph_class.upper(), args.d)
    if args.count_only:
        sys.stdout.write(f'{len(graphs)}\n')
    else:
        _write(graphs, args.out_dir, 'graph')
    return 0


def register(subparsers) -> None:
    parser = subparsers.add_parser('sample-bap', help='draw uniformly random BAPs by MCMC')
    parser.add_argument('--d', type=int, required=True)
    parser.add_argument('--count', type=int, default=1)
    parser.add_argument('--max-in-degree', type=int, default=None)
    parser.add_argument('--burn-in', type=int, default=None, help='chain steps per sample (default c * d**4)')
    parser.add_argument('--class', dest='graph_class', choices=['bap', 'dag'], default='bap')
    parser.add_argument('--naive', action='store_true', help='triangular-matrix sampler (not uniform)')
    parser.add_argument('--seed', type=int, default=None)
    parser.add_argument('--out-dir', help='one file per graph in this directory (default: stdout)')
    parser.set_defaults(func=run_sample)

    parser = subparsers.add_parser('enumerate', help='list every graph on a few vertices')
    parser.add_argument('--d', type=int, required=True)
    parser.add_argument('--class', dest='graph_class', choices=['bap', 'dag', 'apd'], default='bap')
    parser.add_argument('--count-only', action='store_true')
    parser.add_argument('--out-dir')
    parser.set_defaults(func=run_enumerate)
