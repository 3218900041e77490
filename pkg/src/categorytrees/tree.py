"""Category Trees.

Every category gets a base classifier trained on the mean of its rows. Each
row is then stored with the classifier that gives it the smallest error.
When a classifier collects rows of other categories it grows a new layer:
one child per category present in its rows, trained on that subset only,
and the rows are re-assigned among the children. Retrieval descends from
the best base classifier through the best child at each layer to a leaf.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Iterator, Mapping, Sequence

import numpy as np

from .core_model import DEFAULT_TARGET, CategoryClassifier, DataRow, FeatureVector, feature_matrix, nearest
from .errors import ConfigError, EmptyBatchError, InvalidTargetError, UntrainedModelError
from .ingest import Dataset, MinMaxScaling

logger = logging.getLogger(__name__)

FOREST_FORMAT = "categorytrees/forest-v1"
DEPTH_CAP_RANGE = (1, 64)


@dataclass(frozen=True)
class BuildConfig:
    target: float = DEFAULT_TARGET
    depth_cap: int = 10
    min_branch_size: int = 2

    def __post_init__(self) -> None:
        if not np.isfinite(self.target) or self.target <= 0:
            raise InvalidTargetError(str(self.target))
        lo, hi = DEPTH_CAP_RANGE
        if not lo <= self.depth_cap <= hi:
            raise ConfigError(f"depth_cap must be in {lo}-{hi}, got {self.depth_cap}")
        if self.min_branch_size < 1:
            raise ConfigError(f"min_branch_size must be >= 1, got {self.min_branch_size}")

    def to_dict(self) -> dict[str, Any]:
        return {"target": float(self.target), "depth_cap": self.depth_cap, "min_branch_size": self.min_branch_size}


@dataclass
class TreeNode:
    classifier: CategoryClassifier
    assigned_rows: list[int] = field(default_factory=list)
    children: list["TreeNode"] = field(default_factory=list)
    depth: int = 0

    @property
    def category(self) -> str:
        return self.classifier.category

    @property
    def count(self) -> int:
        return len(self.assigned_rows)

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def iter_nodes(self) -> Iterator["TreeNode"]:
        yield self
        for child in self.children:
            yield from child.iter_nodes()

    def max_depth(self) -> int:
        return max(n.depth for n in self.iter_nodes())

    def to_dict(self) -> dict[str, Any]:
        data = self.classifier.to_dict()
        data["depth"] = self.depth
        data["assigned_rows"] = list(self.assigned_rows)
        data["children"] = [c.to_dict() for c in self.children]
        return data

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "TreeNode":
        return cls(
            classifier=CategoryClassifier.from_dict(dict(data)),
            assigned_rows=[int(r) for r in data.get("assigned_rows", [])],
            children=[cls.from_dict(c) for c in data.get("children", [])],
            depth=int(data.get("depth", 0)),
        )


def train_base_layer(dataset: Dataset, config: BuildConfig) -> list[CategoryClassifier]:
    """One classifier per category, trained on that category's rows."""
    if not dataset.rows:
        raise EmptyBatchError("dataset has no rows")
    batches: dict[str, list[DataRow]] = {c: [] for c in dataset.categories}
    for row in dataset.rows:
        batches[row.category].append(row)
    return [CategoryClassifier.train(cat, batch, config.target) for cat, batch in batches.items()]


def assign_rows(
    classifiers: Sequence[CategoryClassifier], rows: Sequence[DataRow]
) -> dict[str, list[int]]:
    """Store each row with its smallest-error classifier, keyed by category."""
    groups: dict[str, list[int]] = {c.category: [] for c in classifiers}
    if not rows:
        return groups
    winners = nearest(feature_matrix(rows), classifiers)
    for row, idx in zip(rows, winners):
        groups[classifiers[idx].category].append(row.row_id)
    return groups


def build_tree(
    base: CategoryClassifier,
    assigned: Sequence[DataRow],
    config: BuildConfig,
    depth: int = 0,
) -> TreeNode:
    node = TreeNode(classifier=base, assigned_rows=[r.row_id for r in assigned], depth=depth)
    categories = sorted({r.category for r in assigned})
    if len(categories) < 2 or depth >= config.depth_cap or len(assigned) < config.min_branch_size:
        return node

    layer = [
        CategoryClassifier.train(cat, [r for r in assigned if r.category == cat], config.target)
        for cat in categories
    ]
    groups = assign_rows(layer, assigned)
    # a layer that leaves every row in one child splits nothing
    if sum(1 for ids in groups.values() if ids) < 2:
        return node

    by_id = {r.row_id: r for r in assigned}
    node.children = [
        build_tree(clf, [by_id[i] for i in groups[clf.category]], config, depth + 1) for clf in layer
    ]
    return node


@dataclass
class Forest:
    trees: list[TreeNode]
    config: BuildConfig = field(default_factory=BuildConfig)
    labels: dict[int, str] = field(default_factory=dict)
    feature_names: tuple[str, ...] = ()
    scaling: MinMaxScaling | None = None

    @property
    def categories(self) -> list[str]:
        return [t.category for t in self.trees]

    @property
    def dimension(self) -> int:
        if not self.trees:
            raise UntrainedModelError()
        return self.trees[0].classifier.dimension

    def iter_nodes(self) -> Iterator[TreeNode]:
        for tree in self.trees:
            yield from tree.iter_nodes()

    def base_assignment(self) -> dict[str, list[int]]:
        return {t.category: list(t.assigned_rows) for t in self.trees}

    def foreign_assignments(self) -> int:
        """Rows whose base-layer classifier is not their own category's."""
        return sum(1 for t in self.trees for rid in t.assigned_rows if self.labels.get(rid) != t.category)

    def descend(self, row: FeatureVector | DataRow) -> TreeNode:
        if not self.trees:
            raise UntrainedModelError()
        vector = np.asarray(row.features if isinstance(row, DataRow) else row, dtype=np.float64)
        node = self.trees[int(nearest(vector[None, :], [t.classifier for t in self.trees])[0])]
        while node.children:
            node = node.children[int(nearest(vector[None, :], [c.classifier for c in node.children])[0])]
        return node

    def classify(self, row: FeatureVector | DataRow) -> str:
        return self.descend(row).category

    def classify_many(self, rows: Sequence[FeatureVector | DataRow]) -> list[str]:
        return [self.classify(r) for r in rows]

    def stats(self) -> dict[str, Any]:
        nodes = list(self.iter_nodes())
        pure = 0
        for n in nodes:
            if n.is_leaf and len({self.labels.get(r) for r in n.assigned_rows}) <= 1:
                pure += 1
        return {
            "categories": len(self.trees),
            "nodes": len(nodes),
            "branching_nodes": sum(1 for n in nodes if n.children),
            "leaves": sum(1 for n in nodes if n.is_leaf),
            "pure_leaves": pure,
            "max_depth": max((n.depth for n in nodes), default=0),
            "tree_depths": {t.category: t.max_depth() for t in self.trees},
            "foreign_assignments": self.foreign_assignments(),
            "empty_base_trees": sorted(t.category for t in self.trees if not t.assigned_rows),
        }

    def to_dict(self) -> dict[str, Any]:
        return {
            "format": FOREST_FORMAT,
            "config": self.config.to_dict(),
            "feature_names": list(self.feature_names),
            "scaling": self.scaling.to_dict() if self.scaling else None,
            "labels": {str(k): v for k, v in sorted(self.labels.items())},
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Forest":
        if data.get("format") != FOREST_FORMAT:
            raise UntrainedModelError(f"not a forest document: format {data.get('format')!r}")
        scaling = data.get("scaling")
        return cls(
            trees=[TreeNode.from_dict(t) for t in data.get("trees", [])],
            config=BuildConfig(**data.get("config", {})),
            labels={int(k): str(v) for k, v in data.get("labels", {}).items()},
            feature_names=tuple(data.get("feature_names", ())),
            scaling=MinMaxScaling.from_dict(scaling) if scaling else None,
        )


def build_forest(dataset: Dataset, config: BuildConfig | None = None) -> Forest:
    config = config or BuildConfig()
    base = train_base_layer(dataset, config)
    groups = assign_rows(base, dataset.rows)
    by_id = dataset.by_id()
    trees = [build_tree(clf, [by_id[i] for i in groups[clf.category]], config) for clf in base]
    forest = Forest(
        trees=trees,
        config=config,
        labels=dataset.labels(),
        feature_names=dataset.feature_names,
        scaling=dataset.scaling,
    )
    logger.info(
        "built %d trees over %d rows (%d foreign assignments)",
        len(trees), len(dataset), forest.foreign_assignments(),
    )
    return forest


def classify(forest: Forest, row: FeatureVector | DataRow) -> str:
    return forest.classify(row)


__all__ = [
    "BuildConfig",
    "FOREST_FORMAT",
    "Forest",
    "TreeNode",
    "assign_rows",
    "build_forest",
    "build_tree",
    "classify",
    "train_base_layer",
]
