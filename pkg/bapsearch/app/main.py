from __future__ import annotations

import argparse
import logging
import sys
from typing import List, Optional

from .commands import equivalence, fit, graphs, schema, search, simulate
from .core.config import settings
from .core.errors import BapError
from .core.log import configure_logging

logger = logging.getLogger('bapsearch')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='bapsearch',
        description='Structure learning for bow-free acyclic path diagrams.',
    )
    parser.add_argument('--log-level', default=settings.log_level, help='DEBUG, INFO, WARNING or ERROR')
    subparsers = parser.add_subparsers(dest='command', required=True)
    fit.register(subparsers)
    search.register(subparsers)
    graphs.register(subparsers)
    equivalence.register(subparsers)
    simulate.register(subparsers)
    schema.register(subparsers)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    try:
        return args.func(args)
    except BapError as e:
        logger.error('%s', e)
        return 2


if __name__ == '__main__':
    sys.exit(main())
