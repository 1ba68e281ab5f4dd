from __future__ import annotations

import argparse
import sys
from typing import Optional

from pydantic import BaseModel

from ..core.config import settings
from ..services.io import Dataset, read_dataset, write_json
from ..services.ricf_fit import SampleStats


def add_data_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--data', required=True, help='CSV file with a header row and numeric columns')
    parser.add_argument(
        '--standardize',
        action=argparse.BooleanOptionalAction,
        default=settings.standardize,
        help='center and scale every column before fitting',
    )
    parser.add_argument('--log-transform', action='store_true', help='take logs of all (positive) columns first')


def add_output_argument(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--out', help='write the JSON report here instead of stdout')


def load_dataset(args: argparse.Namespace) -> Dataset:
    dataset = read_dataset(args.data)
    if getattr(args, 'log_transform', False):
        dataset = dataset.log_transform()
    if getattr(args, 'standardize', False):
        dataset = dataset.standardize()
    return dataset


def load_stats(args: argparse.Namespace) -> SampleStats:
    return load_dataset(args).stats()


def emit(report: BaseModel, out: Optional[str]) -> None:
    text = write_json(report, out)
    if out is None:
        sys.stdout.write(text + '\n')
