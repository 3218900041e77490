"""Variance as the cohesion measure of a grouping.

``variance`` is the population variance unless ``sample`` is set. Grouped
variance averages the per-group variances of one column; information gain is
the parent variance minus the (optionally size-weighted) subset variances.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterable, Mapping, Sequence, Union

import numpy as np
import numpy.typing as npt
import pandas as pd

from .errors import DegenerateClusteringError, EmptyGroupError
from .ingest import Dataset
from .recluster import ClusterSet

Partition = Union[ClusterSet, Mapping[str, Sequence[int]]]


def variance(values: npt.ArrayLike, sample: bool = False) -> float:
    arr = np.asarray(values, dtype=np.float64).ravel()
    if arr.size == 0:
        raise EmptyGroupError()
    if sample:
        return float(np.var(arr, ddof=1)) if arr.size > 1 else 0.0
    return float(np.var(arr))


def _partition(groups: Partition) -> Mapping[str, Sequence[int]]:
    return groups.clusters if isinstance(groups, ClusterSet) else groups


def grouped_variance(
    groups: Partition,
    column: Mapping[int, float],
    weighted: bool = False,
    sample: bool = False,
) -> float:
    """Mean of per-group variances of ``column`` over the non-empty groups."""
    members = [ids for ids in _partition(groups).values() if len(ids)]
    if not members:
        raise DegenerateClusteringError("no non-empty groups")
    variances = np.array([variance([column[i] for i in ids], sample) for ids in members])
    if weighted:
        sizes = np.array([len(ids) for ids in members], dtype=np.float64)
        return float(np.sum(variances * sizes) / sizes.sum())
    return float(variances.mean())


def information_gain(
    parent: npt.ArrayLike,
    subsets: Iterable[npt.ArrayLike],
    weighted: bool = False,
    sample: bool = False,
) -> float:
    """Parent variance minus the sum of subset variances; may be negative.

    With ``weighted`` each subset variance is scaled by its share of the
    parent rows, the classical within-group reduction.
    """
    whole = np.asarray(parent, dtype=np.float64).ravel()
    total = variance(whole, sample)
    parts = [np.asarray(s, dtype=np.float64).ravel() for s in subsets]
    parts = [p for p in parts if p.size]
    if weighted:
        return total - sum(p.size / whole.size * variance(p, sample) for p in parts)
    return total - sum(variance(p, sample) for p in parts)


@dataclass(frozen=True)
class VarianceReport:
    column_name: str
    variance_before: float
    variance_after: float
    groups_before: int
    groups_after: int
    information_gain: float = 0.0

    @property
    def reduction_ratio(self) -> float | None:
        if self.variance_before > 0:
            return self.variance_after / self.variance_before
        return None

    def to_dict(self) -> dict[str, Any]:
        return {
            "column_name": self.column_name,
            "variance_before": self.variance_before,
            "variance_after": self.variance_after,
            "groups_before": self.groups_before,
            "groups_after": self.groups_after,
            "reduction_ratio": self.reduction_ratio,
            "information_gain": self.information_gain,
        }


def build_variance_report(
    dataset: Dataset,
    before: Partition,
    after: Partition,
    columns: Sequence[str],
    weighted: bool = False,
    sample: bool = False,
) -> list[VarianceReport]:
    reports = []
    before_groups, after_groups = _partition(before), _partition(after)
    for name in columns:
        values = dataset.column_values(name)
        reports.append(
            VarianceReport(
                column_name=name,
                variance_before=grouped_variance(before_groups, values, weighted, sample),
                variance_after=grouped_variance(after_groups, values, weighted, sample),
                groups_before=sum(1 for ids in before_groups.values() if ids),
                groups_after=sum(1 for ids in after_groups.values() if ids),
                information_gain=information_gain(
                    list(values.values()),
                    ([values[i] for i in ids] for ids in after_groups.values()),
                    weighted,
                    sample,
                ),
            )
        )
    return reports


def render_variance_table(reports: Sequence[VarianceReport], precision: int = 4) -> str:
    """One column per report, with before, after and ratio rows."""
    frame = pd.DataFrame(
        {
            r.column_name: [r.variance_before, r.variance_after, r.reduction_ratio]
            for r in reports
        },
        index=["Var Before", "Var After", "Ratio"],
    )
    return frame.to_string(float_format=lambda v: f"{v:.{precision}f}", na_rep="n/a")


__all__ = [
    "VarianceReport",
    "build_variance_report",
    "grouped_variance",
    "information_gain",
    "render_variance_table",
    "variance",
]
