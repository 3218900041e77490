from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .config import RunConfig
from .errors import (
    DatasetIOError,
    DimensionMismatchError,
    EmptyBatchError,
    SchemaError,
    UntrainedModelError,
)
from .ingest import Dataset, MinMaxScaling, load_dataset
from .metrics import VarianceReport, build_variance_report, render_variance_table
from .recluster import (
    ClusterSet,
    cluster_composition,
    orphaned_clusters,
    rebuild_from_clusters,
    recursive_recluster,
    render_listing,
    secondary_clusters,
)
from .tree import Forest, build_forest
from .utils import dump_json, load_json, write_file

logger = logging.getLogger(__name__)

UNCLASSIFIED = "?"


@dataclass
class ReclusterResult:
    secondary: ClusterSet
    final: ClusterSet
    reports: list[VarianceReport]
    composition: dict[str, dict[str, Any]]
    orphaned: list[str]
    listing: str
    feedback: list[ClusterSet] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "secondary": self.secondary.to_dict(),
            "final": self.final.to_dict(),
            "feedback": [c.to_dict() for c in self.feedback],
            "composition": self.composition,
            "orphaned_clusters": self.orphaned,
            "variance": [r.to_dict() for r in self.reports],
        }


def check_forest_matches(forest: Forest, dataset: Dataset) -> None:
    """Reject a forest trained on other columns or other rows than ``dataset``."""
    if forest.feature_names and tuple(forest.feature_names) != tuple(dataset.feature_names):
        raise DimensionMismatchError(
            f"forest features {list(forest.feature_names)} differ from {list(dataset.feature_names)}"
        )
    unknown = sorted(set(forest.labels) - set(dataset.row_ids))
    missing = sorted(set(dataset.row_ids) - set(forest.labels))
    if unknown or missing:
        raise SchemaError(
            f"forest was trained on other rows ({len(unknown)} unknown, {len(missing)} not in forest)"
        )


class CategoryTreesPipeline:
    """Run ingest -> train -> recluster -> report for one RunConfig.

    Outputs land in ``config.output_dir``:
    - ``forest.json`` and ``summary.json`` from :meth:`train`
    - ``clusters.json``, ``clusters.txt``, ``variance.json`` and ``variance.txt``
      from :meth:`recluster`
    """

    def __init__(self, config: RunConfig) -> None:
        self.config = config
        self.output_dir = Path(config.output_dir)
        self.forest_json = self.output_dir / "forest.json"
        self.summary_json = self.output_dir / "summary.json"
        self.clusters_json = self.output_dir / "clusters.json"
        self.clusters_txt = self.output_dir / "clusters.txt"
        self.variance_json = self.output_dir / "variance.json"
        self.variance_txt = self.output_dir / "variance.txt"
        self._dataset: Dataset | None = None

    @property
    def dataset(self) -> Dataset:
        if self._dataset is None:
            self._dataset = load_dataset(self.config.dataset)
        return self._dataset

    def summarize(self, forest: Forest) -> dict[str, Any]:
        spec = self.config.dataset
        stats = forest.stats()
        summary = {
            "dataset": str(spec.path),
            "rows": len(self.dataset),
            "dropped_count": self.dataset.dropped_count,
            "category_count": stats["categories"],
            "tree_depths": stats["tree_depths"],
            "foreign_assignments": stats["foreign_assignments"],
            "forest": {k: v for k, v in stats.items() if k not in ("tree_depths", "foreign_assignments")},
            "config": self.config.build.to_dict(),
        }
        if spec.expected_rows is not None:
            summary["expected_rows"] = spec.expected_rows
            summary["row_count_matches"] = spec.expected_rows == len(self.dataset)
        return summary

    def train(self) -> tuple[Forest, dict[str, Any]]:
        forest = build_forest(self.dataset, self.config.build)
        summary = self.summarize(forest)
        write_file(self.forest_json, dump_json(forest.to_dict()))
        write_file(self.summary_json, dump_json(summary))
        logger.info("wrote %s and %s", self.forest_json, self.summary_json)
        return forest, summary

    def load_forest(self, path: str | Path | None = None) -> Forest:
        path = Path(path or self.forest_json)
        try:
            data = load_json(path)
        except OSError as exc:
            raise DatasetIOError(f"cannot read forest {path}: {exc.strerror}") from exc
        except json.JSONDecodeError as exc:
            raise UntrainedModelError(f"{path} is not valid JSON") from exc
        return Forest.from_dict(data)

    def recluster(self, forest: Forest | None = None) -> ReclusterResult:
        options = self.config.recluster
        dataset = self.dataset
        if forest is None:
            forest = build_forest(dataset, self.config.build)
        else:
            check_forest_matches(forest, dataset)
        secondary = secondary_clusters(forest)
        final = recursive_recluster(
            secondary, dataset, options.max_iters, options.min_changes, self.config.build.target
        )
        feedback = []
        for _ in range(options.feedback_passes):
            _, rebuilt = rebuild_from_clusters(dataset, final, self.config.build)
            final = recursive_recluster(
                rebuilt, dataset, options.max_iters, options.min_changes, self.config.build.target
            )
            feedback.append(final)

        report_opts = self.config.report
        reports = build_variance_report(
            dataset,
            dataset.category_grouping(),
            final,
            self.config.report_columns,
            weighted=report_opts.weighted,
            sample=report_opts.sample_variance,
        )
        result = ReclusterResult(
            secondary=secondary,
            final=final,
            reports=reports,
            composition=cluster_composition(final, dataset),
            orphaned=orphaned_clusters(final, dataset),
            listing=render_listing(final, dataset, report_opts.cluster_label),
            feedback=feedback,
        )
        if result.orphaned:
            logger.info("%d cluster(s) hold none of their own rows: %s",
                        len(result.orphaned), ", ".join(result.orphaned))
        write_file(self.clusters_json, dump_json(result.to_dict()))
        write_file(self.clusters_txt, result.listing)
        write_file(self.variance_json, dump_json([r.to_dict() for r in reports]))
        write_file(self.variance_txt, render_variance_table(reports) + "\n")
        return result

    def classify(self, input_path: str | Path, forest: Forest) -> list[tuple[int, str | None]]:
        """One ``(row_id, category)`` per input row, in file order.

        Rows with a missing or non-numeric feature get ``None``.
        """
        spec = self.config.dataset.for_input(input_path)
        if forest.feature_names and tuple(spec.feature_columns) != tuple(forest.feature_names):
            raise DimensionMismatchError(
                f"forest features {list(forest.feature_names)} differ from {spec.feature_columns}"
            )
        try:
            inputs = load_dataset(spec, scaling=forest.scaling)
        except EmptyBatchError:
            return []
        if inputs.dropped_count:
            logger.warning("%d input row(s) with missing values were not classified", inputs.dropped_count)
        predicted = {r.row_id: forest.classify(r) for r in inputs.rows}
        total = len(inputs) + inputs.dropped_count
        return [(i, predicted.get(i)) for i in range(total)]

    def bench(self) -> dict[str, Any]:
        dataset = self.dataset
        ids = np.array(dataset.row_ids)
        if self.config.seed:
            ids = ids[np.random.default_rng(self.config.seed).permutation(len(ids))]
        held = int(round(len(ids) * self.config.bench.holdout))
        train_ids = ids[: len(ids) - held].tolist()
        test_ids = ids[len(ids) - held:].tolist()

        if dataset.scaling is not None and train_ids:
            # scaling sees the training rows only
            dataset = dataset.rescaled(MinMaxScaling.fit(dataset.subset(train_ids).raw_features()))
        train_set = dataset.subset(train_ids)
        forest = build_forest(train_set, self.config.build)
        by_id = dataset.by_id()

        def accuracy(row_ids: list[int]) -> float | None:
            if not row_ids:
                return None
            hits = sum(forest.classify(by_id[i]) == by_id[i].category for i in row_ids)
            return hits / len(row_ids)

        clusters = secondary_clusters(forest)
        return {
            "rows": len(dataset),
            "train_rows": len(train_ids),
            "holdout_rows": len(test_ids),
            "seed": self.config.seed,
            "train_accuracy": accuracy(train_ids),
            "holdout_accuracy": accuracy(test_ids),
            "forest": forest.stats(),
            "scaling": None if forest.scaling is None else forest.scaling.to_dict(),
            "clusters": {
                "non_empty": len(clusters.non_empty()),
                "orphaned": orphaned_clusters(clusters, train_set),
            },
        }


__all__ = ["UNCLASSIFIED", "CategoryTreesPipeline", "ReclusterResult", "check_forest_matches"]
