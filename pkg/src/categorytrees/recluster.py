"""Secondary clustering and recursive reclustering on top of a forest.

The secondary clusters group rows by the tree they were stored with rather
than by their own category. Reclustering then repeats the exemplar step on
those groups: a fresh exemplar per non-empty cluster, every row re-assigned
by smallest error, until few enough rows move.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from itertools import islice
from typing import Any, Iterator, Mapping, Sequence

from .core_model import DEFAULT_TARGET, CategoryClassifier, FeatureVector
from .errors import ConfigError, DegenerateClusteringError
from .ingest import CATEGORY_SEPARATOR, Dataset
from .tree import BuildConfig, Forest, assign_rows, build_forest

logger = logging.getLogger(__name__)

MAX_ITERS_RANGE = (0, 100)


@dataclass
class ClusterSet:
    clusters: dict[str, list[int]]
    generation: int = 0
    changes_from_previous: int = 0
    dropped_keys: tuple[str, ...] = ()
    exemplars: dict[str, FeatureVector] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.clusters)

    @property
    def row_count(self) -> int:
        return sum(len(ids) for ids in self.clusters.values())

    def sizes(self) -> dict[str, int]:
        return {k: len(ids) for k, ids in self.clusters.items()}

    def membership(self) -> dict[int, str]:
        return {rid: key for key, ids in self.clusters.items() for rid in ids}

    def non_empty(self) -> dict[str, list[int]]:
        return {k: ids for k, ids in self.clusters.items() if ids}

    def to_dict(self) -> dict[str, Any]:
        return {
            "generation": self.generation,
            "changes_from_previous": self.changes_from_previous,
            "dropped_keys": list(self.dropped_keys),
            "clusters": {k: list(ids) for k, ids in self.clusters.items()},
        }


def count_moves(before: Mapping[str, Sequence[int]], after: Mapping[str, Sequence[int]]) -> int:
    """Rows whose cluster key differs between two partitions."""
    old = {rid: key for key, ids in before.items() for rid in ids}
    return sum(1 for key, ids in after.items() for rid in ids if old.get(rid) != key)


def secondary_clusters(forest: Forest) -> ClusterSet:
    """Rows grouped by the base tree that holds them, keyed by its category."""
    clusters = forest.base_assignment()
    return ClusterSet(clusters=clusters, generation=0, changes_from_previous=forest.foreign_assignments())


def recluster_step(clusters: ClusterSet, dataset: Dataset, target: float = DEFAULT_TARGET) -> ClusterSet:
    by_id = dataset.by_id()
    live = clusters.non_empty()
    if not live or not dataset.rows:
        raise DegenerateClusteringError()
    dropped = clusters.dropped_keys + tuple(
        k for k, ids in clusters.clusters.items() if not ids and k not in clusters.dropped_keys
    )
    classifiers = [
        CategoryClassifier.train(key, [by_id[i] for i in ids], target) for key, ids in sorted(live.items())
    ]
    groups = assign_rows(classifiers, dataset.rows)
    return ClusterSet(
        clusters=groups,
        generation=clusters.generation + 1,
        changes_from_previous=count_moves(clusters.clusters, groups),
        dropped_keys=dropped,
        exemplars={c.category: c.exemplar for c in classifiers},
    )


def recluster_generations(
    clusters: ClusterSet, dataset: Dataset, target: float = DEFAULT_TARGET
) -> Iterator[ClusterSet]:
    """Every generation after ``clusters``, without end."""
    current = clusters
    while True:
        current = recluster_step(current, dataset, target)
        yield current


def recursive_recluster(
    clusters: ClusterSet,
    dataset: Dataset,
    max_iters: int = 1,
    min_changes: int = 1,
    target: float = DEFAULT_TARGET,
) -> ClusterSet:
    lo, hi = MAX_ITERS_RANGE
    if not lo <= max_iters <= hi:
        raise ConfigError(f"max_iters must be in {lo}-{hi}, got {max_iters}")
    if not clusters.non_empty():
        raise DegenerateClusteringError()
    current = clusters
    for generation in islice(recluster_generations(clusters, dataset, target), max_iters):
        current = generation
        logger.debug("generation %d moved %d rows", generation.generation, generation.changes_from_previous)
        if generation.changes_from_previous < min_changes:
            break
    return current


def rebuild_from_clusters(
    dataset: Dataset, clusters: ClusterSet, config: BuildConfig | None = None
) -> tuple[Forest, ClusterSet]:
    """Feed a ClusterSet back as category labels and re-derive secondary clusters."""
    relabeled = dataset.relabeled(clusters.membership())
    forest = build_forest(relabeled, config)
    result = secondary_clusters(forest)
    result.generation = clusters.generation + 1
    return forest, result


def cluster_composition(clusters: ClusterSet, dataset: Dataset) -> dict[str, dict[str, Any]]:
    labels = dataset.labels()
    out: dict[str, dict[str, Any]] = {}
    for key, ids in clusters.clusters.items():
        counts = Counter(labels[i] for i in ids)
        out[key] = {
            "size": len(ids),
            "own_rows": counts.get(key, 0),
            "by_category": dict(sorted(counts.items())),
        }
    return out


def orphaned_clusters(clusters: ClusterSet, dataset: Dataset) -> list[str]:
    """Non-empty clusters holding none of their own category's rows."""
    composition = cluster_composition(clusters, dataset)
    return sorted(k for k, c in composition.items() if c["size"] and not c["own_rows"])


def render_listing(clusters: ClusterSet, dataset: Dataset, label: str = "Cluster") -> str:
    """Plain-text listing: a header per cluster, then its rows as read from the file."""
    by_id = dataset.by_id()
    header = ", ".join(dataset.header)
    blocks = []
    for key in sorted(clusters.clusters):
        title = f"Rows clustered for {label} ({', '.join(key.split(CATEGORY_SEPARATOR))})"
        ids = clusters.clusters[key]
        lines = [title, "", header, ""]
        if ids:
            lines.extend(",".join(by_id[i].raw) for i in ids)
        else:
            lines.append("(no rows)")
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"


__all__ = [
    "ClusterSet",
    "cluster_composition",
    "count_moves",
    "orphaned_clusters",
    "rebuild_from_clusters",
    "recluster_generations",
    "recluster_step",
    "recursive_recluster",
    "render_listing",
    "secondary_clusters",
]
