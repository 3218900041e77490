"""Numeric primitives: exemplars, single-step weights and the row error.

A classifier stores the mean of its training batch (the exemplar) and a
weight per feature that maps the exemplar onto the target value in one step.
A row is scored by how far its weighted components fall from the target.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterable, Sequence

import numpy as np
import numpy.typing as npt

from .errors import DimensionMismatchError, EmptyBatchError, InvalidTargetError, RaggedRowsError

FeatureVector = npt.NDArray[np.float64]

EPS = 1e-9
DEFAULT_TARGET = 1.0


@dataclass(frozen=True, eq=False)
class DataRow:
    """One observation.

    ``raw`` keeps the original field strings in input-column order so that
    cluster listings can print rows the way they appeared in the file.
    """

    features: FeatureVector
    category: str
    output_value: float | None = None
    row_id: int = 0
    raw: tuple[str, ...] = ()


@dataclass(frozen=True, eq=False)
class CategoryClassifier:
    category: str
    exemplar: FeatureVector
    weights: FeatureVector
    target: float = DEFAULT_TARGET
    train_count: int = 1

    @classmethod
    def train(
        cls,
        category: str,
        rows: Sequence[DataRow] | Sequence[FeatureVector],
        target: float = DEFAULT_TARGET,
    ) -> "CategoryClassifier":
        exemplar = compute_exemplar(rows)
        return cls(
            category=category,
            exemplar=exemplar,
            weights=compute_weights(exemplar, target),
            target=float(target),
            train_count=len(rows),
        )

    @property
    def divisor(self) -> FeatureVector:
        return np.maximum(self.exemplar, EPS)

    @property
    def dimension(self) -> int:
        return int(self.exemplar.shape[0])

    def error(self, row: FeatureVector | DataRow) -> float:
        return row_error(row, self)

    def to_dict(self) -> dict[str, Any]:
        return {
            "category": self.category,
            "target": self.target,
            "train_count": self.train_count,
            "exemplar": [float(v) for v in self.exemplar],
            "weights": [float(v) for v in self.weights],
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "CategoryClassifier":
        return cls(
            category=str(data["category"]),
            exemplar=np.asarray(data["exemplar"], dtype=np.float64),
            weights=np.asarray(data["weights"], dtype=np.float64),
            target=float(data.get("target", DEFAULT_TARGET)),
            train_count=int(data.get("train_count", 1)),
        )


def _as_vector(row: FeatureVector | DataRow | Sequence[float]) -> FeatureVector:
    if isinstance(row, DataRow):
        return np.asarray(row.features, dtype=np.float64)
    return np.asarray(row, dtype=np.float64)


def feature_matrix(rows: Iterable[DataRow | FeatureVector]) -> npt.NDArray[np.float64]:
    """Stack rows into an (n, d) matrix; raises on an empty or ragged batch."""
    vectors = [_as_vector(r) for r in rows]
    if not vectors:
        raise EmptyBatchError()
    width = vectors[0].shape
    if len(width) != 1 or any(v.shape != width for v in vectors):
        raise RaggedRowsError()
    return np.vstack(vectors)


def compute_exemplar(rows: Sequence[DataRow] | Sequence[FeatureVector]) -> FeatureVector:
    """Per-component arithmetic mean of the batch.

    The mean is taken about the first row so that a batch of identical rows
    returns that row exactly.
    """
    matrix = feature_matrix(rows)
    origin = matrix[0]
    return origin + (matrix - origin).mean(axis=0)


def compute_weights(exemplar: FeatureVector, target: float = DEFAULT_TARGET) -> FeatureVector:
    if not np.isfinite(target) or target <= 0:
        raise InvalidTargetError(str(target))
    return float(target) / np.maximum(np.asarray(exemplar, dtype=np.float64), EPS)


def _deviation_matrix(
    features: npt.ArrayLike, classifiers: Sequence[CategoryClassifier]
) -> npt.NDArray[np.float64]:
    matrix = np.atleast_2d(np.asarray(features, dtype=np.float64))
    if not classifiers:
        return np.zeros((matrix.shape[0], 0))
    divisors = np.vstack([c.divisor for c in classifiers])
    if divisors.shape[1] != matrix.shape[1]:
        raise DimensionMismatchError(f"rows have {matrix.shape[1]} features, classifiers {divisors.shape[1]}")
    return np.abs(matrix[:, None, :] / divisors[None, :, :] - 1.0).mean(axis=2)


def error_matrix(
    features: npt.ArrayLike, classifiers: Sequence[CategoryClassifier]
) -> npt.NDArray[np.float64]:
    """Rows x classifiers matrix of mean absolute deviation from the target.

    ``|row * w - t|`` is evaluated as ``t * |row / divisor - 1|`` (the same
    quantity since ``w = t / divisor``), which keeps an exemplar's error
    against its own classifier at exactly zero.
    """
    deviation = _deviation_matrix(features, classifiers)
    targets = np.array([c.target for c in classifiers], dtype=np.float64)
    return deviation * targets[None, :]


def row_error(row: FeatureVector | DataRow, classifier: CategoryClassifier) -> float:
    vector = _as_vector(row)
    if vector.ndim != 1 or vector.shape[0] != classifier.dimension:
        raise DimensionMismatchError(f"row has {vector.size} features, classifier {classifier.dimension}")
    return float(error_matrix(vector[None, :], [classifier])[0, 0])


def nearest(features: npt.ArrayLike, classifiers: Sequence[CategoryClassifier]) -> npt.NDArray[np.intp]:
    """Index of the smallest-error classifier for every row.

    Ties go to the lexicographically lowest category. When every classifier
    shares one target the ranking uses the unscaled deviation, so the choice
    cannot depend on the target value.
    """
    if not classifiers:
        raise EmptyBatchError("no classifiers")
    order = sorted(range(len(classifiers)), key=lambda i: classifiers[i].category)
    ranked = [classifiers[i] for i in order]
    if len({c.target for c in ranked}) == 1:
        errors = _deviation_matrix(features, ranked)
    else:
        errors = error_matrix(features, ranked)
    return np.asarray(order, dtype=np.intp)[np.argmin(errors, axis=1)]


__all__ = [
    "CategoryClassifier",
    "DEFAULT_TARGET",
    "DataRow",
    "EPS",
    "FeatureVector",
    "compute_exemplar",
    "compute_weights",
    "error_matrix",
    "feature_matrix",
    "nearest",
    "row_error",
]
