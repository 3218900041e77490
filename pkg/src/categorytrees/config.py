from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Mapping

import yaml

from .errors import CategoryTreesError, ConfigError, DatasetIOError
from .ingest import DatasetSpec
from .tree import BuildConfig

OUTPUT_FORMATS = ("json", "table")


def _from_section(cls: type, section: str, data: Mapping[str, Any] | None) -> Any:
    data = dict(data or {})
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown key(s) in {section}: {', '.join(sorted(unknown))}")
    try:
        return cls(**data)
    except TypeError as exc:
        raise ConfigError(f"{section}: {exc}") from exc


@dataclass(frozen=True)
class ReclusterOptions:
    max_iters: int = 1
    min_changes: int = 1
    feedback_passes: int = 0

    def __post_init__(self) -> None:
        if not 0 <= self.max_iters <= 100:
            raise ConfigError(f"max_iters must be in 0-100, got {self.max_iters}")
        if self.min_changes < 0:
            raise ConfigError(f"min_changes must be >= 0, got {self.min_changes}")
        if not 0 <= self.feedback_passes <= 10:
            raise ConfigError(f"feedback_passes must be in 0-10, got {self.feedback_passes}")


@dataclass(frozen=True)
class ReportOptions:
    columns: tuple[str, ...] = ()
    weighted: bool = False
    sample_variance: bool = False
    format: str = "json"
    cluster_label: str = "Cluster"

    def __post_init__(self) -> None:
        object.__setattr__(self, "columns", tuple(self.columns))
        if self.format not in OUTPUT_FORMATS:
            raise ConfigError(f"format must be one of {', '.join(OUTPUT_FORMATS)}, got {self.format!r}")


@dataclass(frozen=True)
class BenchOptions:
    holdout: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.holdout < 1.0:
            raise ConfigError(f"holdout must be in [0, 1), got {self.holdout}")


@dataclass(frozen=True)
class RunConfig:
    dataset: DatasetSpec
    build: BuildConfig = field(default_factory=BuildConfig)
    recluster: ReclusterOptions = field(default_factory=ReclusterOptions)
    report: ReportOptions = field(default_factory=ReportOptions)
    bench: BenchOptions = field(default_factory=BenchOptions)
    seed: int = 0
    output_dir: Path = Path("out")

    def __post_init__(self) -> None:
        object.__setattr__(self, "output_dir", Path(self.output_dir))
        if self.seed < 0:
            raise ConfigError(f"seed must be >= 0, got {self.seed}")

    @property
    def report_columns(self) -> tuple[str, ...]:
        if self.report.columns:
            return self.report.columns
        if self.dataset.output_column:
            return (self.dataset.output_column,)
        return tuple(self.dataset.feature_columns)

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown section(s): {', '.join(sorted(unknown))}")
        if "dataset" not in data:
            raise ConfigError("missing dataset section")
        try:
            return cls(
                dataset=DatasetSpec.from_mapping(data["dataset"]),
                build=_from_section(BuildConfig, "build", data.get("build")),
                recluster=_from_section(ReclusterOptions, "recluster", data.get("recluster")),
                report=_from_section(ReportOptions, "report", data.get("report")),
                bench=_from_section(BenchOptions, "bench", data.get("bench")),
                seed=int(data.get("seed", 0)),
                output_dir=Path(data.get("output_dir", "out")),
            )
        except ConfigError:
            raise
        except CategoryTreesError as exc:
            raise ConfigError(str(exc)) from exc

    def with_overrides(self, **overrides: Any) -> "RunConfig":
        """Apply CLI flag values; ``None`` means the flag was not given."""
        given = {k: v for k, v in overrides.items() if v is not None}
        sections = {
            "dataset": ("path",),
            "build": ("target", "depth_cap", "min_branch_size"),
            "recluster": ("max_iters", "min_changes", "feedback_passes"),
            "report": ("columns", "weighted", "sample_variance", "format", "cluster_label"),
            "bench": ("holdout",),
        }
        config = self
        for section, keys in sections.items():
            values = {k: given.pop(k) for k in keys if k in given}
            if not values:
                continue
            if section == "dataset":
                config = replace(config, dataset=replace(config.dataset, **values))
            else:
                config = replace(config, **{section: replace(getattr(config, section), **values)})
        top = {k: given.pop(k) for k in ("seed", "output_dir") if k in given}
        if given:
            raise ConfigError(f"unknown override(s): {', '.join(sorted(given))}")
        return replace(config, **top) if top else config

    def to_dict(self) -> dict[str, Any]:
        return {
            "dataset": self.dataset.to_mapping(),
            "build": self.build.to_dict(),
            "recluster": {
                "max_iters": self.recluster.max_iters,
                "min_changes": self.recluster.min_changes,
                "feedback_passes": self.recluster.feedback_passes,
            },
            "report": {
                "columns": list(self.report.columns),
                "weighted": self.report.weighted,
                "sample_variance": self.report.sample_variance,
                "format": self.report.format,
                "cluster_label": self.report.cluster_label,
            },
            "bench": {"holdout": self.bench.holdout},
            "seed": self.seed,
            "output_dir": str(self.output_dir),
        }


def load_run_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DatasetIOError(f"cannot read config {path}: {exc.strerror}") from exc
    try:
        data = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if not isinstance(data, Mapping):
        raise ConfigError(f"{path}: expected a mapping at top level")
    return RunConfig.from_mapping(data)


__all__ = [
    "BenchOptions",
    "OUTPUT_FORMATS",
    "ReclusterOptions",
    "ReportOptions",
    "RunConfig",
    "load_run_config",
]
