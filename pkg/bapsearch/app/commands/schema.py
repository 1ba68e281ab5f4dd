from __future__ import annotations

import argparse
import json
import sys

from ..schemas import REPORT_MODELS


def run(args: argparse.Namespace) -> int:
    names = [args.kind] if args.kind else sorted(REPORT_MODELS)
    schemas = {name: REPORT_MODELS[name].model_json_schema() for name in names}
    sys.stdout.write(json.dumps(schemas if len(names) > 1 else schemas[names[0]], indent=2) + '\n')
    return 0


def register(subparsers) -> None:
    parser = subparsers.add_parser('schema', help='print the JSON schema of the reports')
    parser.add_argument('--kind', choices=sorted(REPORT_MODELS))
    parser.set_defaults(func=run)
