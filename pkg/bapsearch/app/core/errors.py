from __future__ import annotations

from typing import Optional


class BapError(Exception):
    """Base class for every failure the library reports on purpose."""


class GraphError(BapError, ValueError):
    pass


class ModelError(BapError, ValueError):
    pass


class FitError(BapError):
    pass


class OracleLimitError(BapError):
    """An exponential routine was asked for an input above its guard."""


class ParseError(BapError, ValueError):
    def __init__(
        self,
        message: str,
        *,
        source: Optional[str] = None,
        line: Optional[int] = None,
        column: Optional[str | int] = None,
    ) -> None:
        self.source = source
        self.line = line
        self.column = column
        where = []
        if source:
            where.append(str(source))
        if line is not None:
            where.append(f'line {line}')
        if column is not None:
            where.append(f'column {column}')
        prefix = f"{', '.join(where)}: " if where else ''
        super().__init__(prefix + message)


class ConfigError(BapError, ValueError):
    pass
