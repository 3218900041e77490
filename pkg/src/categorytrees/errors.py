"""Exception hierarchy shared by every categorytrees module."""

from __future__ import annotations


class CategoryTreesError(Exception):
    """Base class; the CLI turns these into a message and a nonzero exit."""

    message = "categorytrees error"

    def __init__(self, detail: str | None = None) -> None:
        self.detail = detail
        text = self.message if not detail else f"{self.message}: {detail}"
        super().__init__(text)


class EmptyBatchError(CategoryTreesError, ValueError):
    message = "empty batch"


class RaggedRowsError(CategoryTreesError, ValueError):
    message = "ragged rows"


class InvalidTargetError(CategoryTreesError, ValueError):
    message = "invalid target"


class DimensionMismatchError(CategoryTreesError, ValueError):
    message = "dimension mismatch"


class DatasetIOError(CategoryTreesError, OSError):
    message = "io error"


class SchemaError(CategoryTreesError, ValueError):
    message = "schema error"


class EncodingError(CategoryTreesError, ValueError):
    message = "encoding error"

    def __init__(self, token: str, column: str | None = None) -> None:
        self.token = token
        self.column = column
        detail = repr(token) if column is None else f"{token!r} in column {column!r}"
        super().__init__(detail)


class UntrainedModelError(CategoryTreesError, RuntimeError):
    message = "untrained model"


class DegenerateClusteringError(CategoryTreesError, ValueError):
    message = "degenerate clustering"


class EmptyGroupError(CategoryTreesError, ValueError):
    message = "empty group"


class ConfigError(CategoryTreesError, ValueError):
    message = "config error"


__all__ = [
    "CategoryTreesError",
    "ConfigError",
    "DatasetIOError",
    "DegenerateClusteringError",
    "DimensionMismatchError",
    "EmptyBatchError",
    "EmptyGroupError",
    "EncodingError",
    "InvalidTargetError",
    "RaggedRowsError",
    "SchemaError",
    "UntrainedModelError",
]
