"""Datasets, graph files and report files.

Graph files hold one statement per line::

    # comment
    d=4
    0 -> 1
    1 <-> 3

The ``d=<k>`` header comes first; vertices are 0-based indices below ``k``.
"""
from __future__ import annotations

import logging
import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel

from ..core.errors import FitError, GraphError, ParseError
from .effects import RocCurve
from .graph_core import MixedGraph
from .ricf_fit import SampleStats

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

_HEADER = re.compile(r'^d\s*=\s*(\d+)$')
_EDGE = re.compile(r'^(\d+)\s*(->|<->)\s*(\d+)$')


@dataclass(frozen=True)
class Dataset:
    columns: List[str]
    X: np.ndarray
    provenance: str
    standardized: bool = False
    log_transformed: bool = False

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def standardize(self) -> 'Dataset':
        """Zero mean and unit sample variance per column."""
        sd = self.X.std(axis=0, ddof=1)
        if np.any(sd <= 0):
            bad = [c for c, s in zip(self.columns, sd) if s <= 0]
            raise FitError(f'constant columns cannot be standardized: {bad}')
        return replace(self, X=(self.X - self.X.mean(axis=0)) / sd, standardized=True)

    def log_transform(self) -> 'Dataset':
        if np.any(self.X <= 0):
            bad = [c for c, col in zip(self.columns, self.X.T) if np.any(col <= 0)]
            raise FitError(f'log transform needs positive values; offending columns: {bad}')
        return replace(self, X=np.log(self.X), log_transformed=True)

    def permute(self, order: Sequence[int]) -> 'Dataset':
        order = list(order)
        return replace(self, columns=[self.columns[k] for k in order], X=self.X[:, order])

    def stats(self) -> SampleStats:
        return SampleStats.from_data(self.X)

    @classmethod
    def from_array(cls, X: np.ndarray, provenance: str, columns: Optional[List[str]] = None) -> 'Dataset':
        X = np.asarray(X, dtype=float)
        columns = columns or [f'X{k + 1}' for k in range(X.shape[1])]
        return cls(columns, X, provenance)


def read_dataset(path: PathLike) -> Dataset:
    """Read a CSV with a header row and numeric cells only."""
    source = str(path)
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    except pd.errors.EmptyDataError as e:
        raise ParseError('file is empty', source=source) from e
    except pd.errors.ParserError as e:
        raise ParseError(str(e), source=source) from e
    if frame.shape[1] == 0:
        raise ParseError('no columns found', source=source)

    numeric = frame.apply(lambda col: pd.to_numeric(col.str.strip(), errors='coerce'))
    bad = numeric.isna()
    if bad.to_numpy().any():
        row, col = np.argwhere(bad.to_numpy())[0]
        cell = frame.iat[row, col]
        what = 'missing value' if cell.strip() == '' else f'non-numeric value {cell!r}'
        # Line 1 is the header.
        raise ParseError(what, source=source, line=int(row) + 2, column=str(frame.columns[col]))

    dataset = Dataset([str(c) for c in frame.columns], numeric.to_numpy(dtype=float), source)
    logger.info('read %s: n=%d, d=%d', source, dataset.n, dataset.d)
    return dataset


def write_dataset(dataset: Dataset, path: PathLike) -> None:
    pd.DataFrame(dataset.X, columns=dataset.columns).to_csv(path, index=False, float_format='%.17g')


# ---------------------------------------------------------------------------
# Graph files
# ---------------------------------------------------------------------------


def parse_graph(text: str, source: str = '<string>') -> MixedGraph:
    d: Optional[int] = None
    directed, bidirected = set(), set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        content = raw.split('#', 1)[0]
        line = content.strip()
        if not line:
            continue
        column = len(content) - len(content.lstrip()) + 1
        header = _HEADER.match(line)
        if header:
            if d is not None:
                raise ParseError('duplicate d=<k> header', source=source, line=lineno, column=column)
            d = int(header.group(1))
            continue
        edge = _EDGE.match(line)
        if edge is None:
            raise ParseError(f'expected "i -> j" or "i <-> j", got {line!r}', source=source, line=lineno, column=column)
        if d is None:
            raise ParseError('edge before the d=<k> header', source=source, line=lineno, column=column)
        i, j = int(edge.group(1)), int(edge.group(3))
        for v in (i, j):
            if v >= d:
                raise ParseError(f'vertex {v} out of range for d={d}', source=source, line=lineno, column=column)
        if i == j:
            raise ParseError(f'self-loop at vertex {i}', source=source, line=lineno, column=column)
        (directed if edge.group(2) == '->' else bidirected).add((i, j))
    if d is None:
        raise ParseError('missing d=<k> header', source=source)
    try:
        return MixedGraph(d, frozenset(directed), frozenset(bidirected))
    except GraphError as e:
        raise ParseError(str(e), source=source) from e


def format_graph(g: MixedGraph, comment: Optional[str] = None) -> str:
    lines = [f'# {line}' for line in (comment.splitlines() if comment else [])]
    lines.append(f'd={g.d}')
    lines += [f'{s} -> {t}' for s, t in sorted(g.directed)]
    lines += [f'{a} <-> {b}' for a, b in sorted(g.bidirected)]
    return '\n'.join(lines) + '\n'


def read_graph(path: PathLike) -> MixedGraph:
    return parse_graph(Path(path).read_text(encoding='utf-8'), source=str(path))


def write_graph(g: MixedGraph, path: PathLike, comment: Optional[str] = None) -> None:
    Path(path).write_text(format_graph(g, comment), encoding='utf-8')


def write_graphs(graphs: Iterable[MixedGraph], directory: PathLike, prefix: str = 'graph') -> List[Path]:
    out_dir = Path(directory)
    out_dir.mkdir(parents=True, exist_ok=True)
    graphs = list(graphs)
    width = max(4, len(str(len(graphs))))
    paths = []
    for k, g in enumerate(graphs):
        path = out_dir / f'{prefix}_{k:0{width}d}.txt'
        write_graph(g, path)
        paths.append(path)
    return paths


# ---------------------------------------------------------------------------
# Reports and tables
# ---------------------------------------------------------------------------


def write_json(model: BaseModel, path: Optional[PathLike]) -> str:
    """Serialize a report; writes to ``path`` when given and returns the text."""
    text = model.model_dump_json(indent=2)
    if path is not None:
        Path(path).write_text(text + '\n', encoding='utf-8')
    return text


def read_json(model_type: type, path: PathLike):
    try:
        return model_type.model_validate_json(Path(path).read_text(encoding='utf-8'))
    except ValueError as e:
        raise ParseError(str(e), source=str(path)) from e


def write_matrix_csv(M: np.ndarray, path: PathLike, labels: Optional[Sequence[str]] = None) -> None:
    labels = list(labels) if labels is not None else [str(k) for k in range(M.shape[0])]
    pd.DataFrame(M, index=labels, columns=labels).to_csv(path, float_format='%.17g')


def read_matrix_csv(path: PathLike) -> np.ndarray:
    return pd.read_csv(path, index_col=0).to_numpy(dtype=float)


def write_roc_csv(curves: Sequence[Optional[RocCurve]], path: PathLike, average: Optional[np.ndarray] = None,
                  grid: Optional[np.ndarray] = None) -> None:
    """Long-format ROC table: one row per point, ``replicate = mean`` for the average curve."""
    frames = []
    for r, curve in enumerate(curves):
        if curve is None or curve.auc is None:
            continue
        frames.append(pd.DataFrame({'replicate': str(r), 'fpr': curve.fpr, 'tpr': curve.tpr}))
    if average is not None and grid is not None:
        frames.append(pd.DataFrame({'replicate': 'mean', 'fpr': grid, 'tpr': average}))
    table = pd.concat(frames, ignore_index=True) if frames else pd.DataFrame(columns=['replicate', 'fpr', 'tpr'])
    table.to_csv(path, index=False, float_format='%.17g')
