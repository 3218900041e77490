from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np
import numpy.typing as npt
import pandas as pd

from .core_model import DataRow
from .errors import DatasetIOError, EmptyBatchError, EncodingError, SchemaError

logger = logging.getLogger(__name__)

MONTHS: dict[str, float] = {
    name: float(i)
    for i, name in enumerate(
        ("jan", "feb", "mar", "apr", "may", "jun", "jul", "aug", "sep", "oct", "nov", "dec"), start=1
    )
}
WEEKDAYS: dict[str, float] = {
    name: float(i) for i, name in enumerate(("mon", "tue", "wed", "thu", "fri", "sat", "sun"), start=1)
}
BUILTIN_ENCODINGS: dict[str, dict[str, float]] = {"month": MONTHS, "day": WEEKDAYS}

DEFAULT_MISSING = ("", "NA", "NaN", "nan", "?", ".")
CATEGORY_SEPARATOR = ","


def encode_month(token: str) -> float:
    """Ordinal month index, jan=1 ... dec=12 (case-insensitive)."""
    value = MONTHS.get(str(token).strip().lower())
    if value is None:
        raise EncodingError(str(token), "month")
    return value


def _resolve_encoding(column: str, table: str | Mapping[str, Any]) -> dict[str, float]:
    if isinstance(table, str):
        try:
            return dict(BUILTIN_ENCODINGS[table.lower()])
        except KeyError:
            raise SchemaError(f"unknown builtin encoding {table!r} for column {column!r}") from None
    resolved = {str(k).strip().lower(): float(v) for k, v in table.items()}
    if len(resolved) != len(table) or len(set(resolved.values())) != len(resolved):
        raise SchemaError(f"encoding for column {column!r} is not a bijection")
    return resolved


@dataclass(frozen=True)
class MinMaxScaling:
    """Per-column min/max fitted on the retained rows."""

    minimums: tuple[float, ...]
    maximums: tuple[float, ...]

    @classmethod
    def fit(cls, columns: npt.ArrayLike) -> "MinMaxScaling":
        matrix = np.asarray(columns, dtype=np.float64)
        if matrix.ndim == 1:
            matrix = matrix[:, None]
        if matrix.shape[0] == 0:
            raise EmptyBatchError("cannot fit scaling on zero rows")
        return cls(
            minimums=tuple(float(v) for v in matrix.min(axis=0)),
            maximums=tuple(float(v) for v in matrix.max(axis=0)),
        )

    def apply(self, columns: npt.ArrayLike) -> npt.NDArray[np.float64]:
        matrix = np.asarray(columns, dtype=np.float64)
        flat = matrix.ndim == 1
        if flat:
            matrix = matrix[:, None]
        lo = np.asarray(self.minimums)
        span = np.asarray(self.maximums) - lo
        constant = span == 0
        scaled = (matrix - lo) / np.where(constant, 1.0, span)
        scaled[:, constant] = 0.0
        return scaled[:, 0] if flat else scaled

    def to_dict(self) -> dict[str, list[float]]:
        return {"min": list(self.minimums), "max": list(self.maximums)}

    @classmethod
    def from_dict(cls, data: Mapping[str, Sequence[float]]) -> "MinMaxScaling":
        return cls(tuple(float(v) for v in data["min"]), tuple(float(v) for v in data["max"]))


def minmax_normalize(columns: npt.ArrayLike) -> npt.NDArray[np.float64]:
    """Scale each column to [0, 1]; constant columns map to 0."""
    return MinMaxScaling.fit(columns).apply(columns)


@dataclass
class DatasetSpec:
    path: Path
    category_columns: list[str]
    feature_columns: list[str]
    output_column: str | None = None
    encodings: dict[str, Any] = field(default_factory=dict)
    normalize: bool = True
    delimiter: str = ","
    column_names: list[str] | None = None
    missing_values: tuple[str, ...] = DEFAULT_MISSING
    expected_rows: int | None = None

    def __post_init__(self) -> None:
        self.path = Path(self.path)
        self.category_columns = list(self.category_columns)
        self.feature_columns = list(self.feature_columns)
        self.missing_values = tuple(str(v) for v in self.missing_values)
        if not self.feature_columns:
            raise SchemaError("no feature columns")
        selected = [*self.category_columns, *self.feature_columns]
        if self.output_column:
            selected.append(self.output_column)
        if len(set(selected)) != len(selected):
            raise SchemaError("category, feature and output columns must be disjoint")
        self.encodings = {col: _resolve_encoding(col, table) for col, table in self.encodings.items()}

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "DatasetSpec":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise SchemaError(f"unknown dataset keys: {', '.join(sorted(unknown))}")
        missing = {"path", "feature_columns"} - set(data)
        if missing:
            raise SchemaError(f"dataset spec needs: {', '.join(sorted(missing))}")
        values = dict(data)
        values.setdefault("category_columns", [])
        if "missing_values" in values:
            values["missing_values"] = tuple(values["missing_values"])
        return cls(**values)

    def to_mapping(self) -> dict[str, Any]:
        return {
            "path": str(self.path),
            "category_columns": list(self.category_columns),
            "feature_columns": list(self.feature_columns),
            "output_column": self.output_column,
            "encodings": {k: dict(v) for k, v in self.encodings.items()},
            "normalize": self.normalize,
            "delimiter": self.delimiter,
            "column_names": self.column_names,
            "missing_values": list(self.missing_values),
            "expected_rows": self.expected_rows,
        }

    def for_input(self, path: str | Path) -> "DatasetSpec":
        """Spec for reading unlabeled rows to classify: same features, no labels."""
        encodings = {k: v for k, v in self.encodings.items() if k in self.feature_columns}
        return replace(self, path=Path(path), category_columns=[], output_column=None,
                       encodings=encodings, expected_rows=None)

    @property
    def numeric_columns(self) -> list[str]:
        cols = list(self.feature_columns)
        if self.output_column:
            cols.append(self.output_column)
        return cols


@dataclass(frozen=True, eq=False)
class Dataset:
    rows: tuple[DataRow, ...]
    categories: tuple[str, ...]
    feature_names: tuple[str, ...]
    dropped_count: int = 0
    columns: Mapping[str, npt.NDArray[np.float64]] = field(default_factory=dict)
    header: tuple[str, ...] = ()
    scaling: MinMaxScaling | None = None
    output_column: str | None = None

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def row_ids(self) -> list[int]:
        return [r.row_id for r in self.rows]

    def features(self) -> npt.NDArray[np.float64]:
        if not self.rows:
            return np.zeros((0, len(self.feature_names)))
        return np.vstack([r.features for r in self.rows])

    def by_id(self) -> dict[int, DataRow]:
        return {r.row_id: r for r in self.rows}

    def labels(self) -> dict[int, str]:
        return {r.row_id: r.category for r in self.rows}

    def category_grouping(self) -> dict[str, list[int]]:
        groups: dict[str, list[int]] = {c: [] for c in self.categories}
        for row in self.rows:
            groups[row.category].append(row.row_id)
        return groups

    def column_values(self, name: str) -> dict[int, float]:
        """Un-normalized values of a feature or output column keyed by row id."""
        if name not in self.columns:
            raise SchemaError(f"unknown column {name!r}")
        return {r.row_id: float(v) for r, v in zip(self.rows, self.columns[name])}

    def subset(self, row_ids: Iterable[int]) -> "Dataset":
        keep = set(row_ids)
        positions = [i for i, r in enumerate(self.rows) if r.row_id in keep]
        rows = tuple(self.rows[i] for i in positions)
        return replace(
            self,
            rows=rows,
            categories=tuple(sorted({r.category for r in rows})),
            columns={k: v[positions] for k, v in self.columns.items()},
        )

    def relabeled(self, labels: Mapping[int, str]) -> "Dataset":
        """Copy whose rows carry new category labels (e.g. cluster keys)."""
        rows = tuple(replace(r, category=labels[r.row_id]) for r in self.rows)
        return replace(self, rows=rows, categories=tuple(sorted({r.category for r in rows})))

    def raw_features(self) -> npt.NDArray[np.float64]:
        """Feature matrix before any scaling, in row order."""
        if not self.rows:
            return np.zeros((0, len(self.feature_names)))
        return np.column_stack([self.columns[name] for name in self.feature_names])

    def rescaled(self, scaling: MinMaxScaling) -> "Dataset":
        """Copy whose features are the raw values passed through ``scaling``."""
        scaled = scaling.apply(self.raw_features())
        rows = tuple(replace(r, features=np.array(scaled[k], dtype=np.float64)) for k, r in enumerate(self.rows))
        return replace(self, rows=rows, scaling=scaling)


class DatasetLoader:
    """Read a CSV into a Dataset: drop incomplete rows, encode, normalize."""

    def __init__(self, spec: DatasetSpec, scaling: MinMaxScaling | None = None) -> None:
        self.spec = spec
        self.scaling = scaling

    def _read_frame(self) -> pd.DataFrame:
        spec = self.spec
        if not spec.path.is_file():
            raise DatasetIOError(f"no such file: {spec.path}")
        options: dict[str, Any] = {"dtype": str, "keep_default_na": False, "skipinitialspace": True}
        if spec.delimiter == "whitespace":
            options["sep"] = r"\s+"
        else:
            options["sep"] = spec.delimiter
        if spec.column_names:
            options["header"] = None
            options["names"] = list(spec.column_names)
        try:
            frame = pd.read_csv(spec.path, encoding="utf-8", **options)
        except pd.errors.EmptyDataError:
            raise EmptyBatchError(f"no data in {spec.path}") from None
        except (pd.errors.ParserError, UnicodeDecodeError) as exc:
            raise DatasetIOError(str(exc)) from exc
        frame.columns = [str(c).strip() for c in frame.columns]
        return frame.fillna("").astype(str)

    def _check_schema(self, frame: pd.DataFrame) -> None:
        wanted = [*self.spec.category_columns, *self.spec.numeric_columns]
        missing = [c for c in wanted if c not in frame.columns]
        if missing:
            raise SchemaError(f"unknown column(s): {', '.join(missing)}")

    def _numeric(self, column: str, tokens: pd.Series, missing: pd.Series) -> pd.Series:
        table = self.spec.encodings.get(column)
        if table is None:
            values = pd.to_numeric(tokens.where(~missing), errors="coerce").astype(float)
            return values.where(np.isfinite(values))
        lowered = tokens.str.lower()
        unknown = ~missing & ~lowered.isin(table.keys())
        if unknown.any():
            raise EncodingError(tokens[unknown].iloc[0], column)
        return lowered.map(table).where(~missing).astype(float)

    def load(self) -> Dataset:
        spec = self.spec
        frame = self._read_frame()
        self._check_schema(frame)
        stripped = {c: frame[c].str.strip() for c in frame.columns}
        missing_tokens = set(spec.missing_values)
        is_missing = {c: stripped[c].isin(missing_tokens) for c in frame.columns}

        keep = pd.Series(True, index=frame.index)
        for col in spec.category_columns:
            keep &= ~is_missing[col]
        numeric = {}
        for col in spec.numeric_columns:
            numeric[col] = self._numeric(col, stripped[col], is_missing[col])
            keep &= numeric[col].notna()

        positions = np.flatnonzero(keep.to_numpy())
        dropped = int(len(frame) - len(positions))
        raw_features = np.column_stack(
            [numeric[c].to_numpy()[positions] for c in spec.feature_columns]
        ) if len(positions) else np.zeros((0, len(spec.feature_columns)))

        scaling = self.scaling
        if spec.normalize and scaling is None and len(positions):
            scaling = MinMaxScaling.fit(raw_features)
        features = scaling.apply(raw_features) if (spec.normalize and scaling is not None) else raw_features

        header = tuple(frame.columns)
        rows = []
        for k, pos in enumerate(positions):
            category = CATEGORY_SEPARATOR.join(stripped[c].iloc[pos] for c in spec.category_columns)
            output = float(numeric[spec.output_column].iloc[pos]) if spec.output_column else None
            rows.append(
                DataRow(
                    features=np.array(features[k], dtype=np.float64),
                    category=category,
                    output_value=output,
                    row_id=int(pos),
                    raw=tuple(stripped[c].iloc[pos] for c in header),
                )
            )

        logger.info("loaded %d rows from %s (%d dropped)", len(rows), spec.path, dropped)
        if spec.expected_rows is not None and spec.expected_rows != len(rows):
            logger.warning(
                "%s: expected %d rows after missing-value removal, got %d",
                spec.path, spec.expected_rows, len(rows),
            )
        return Dataset(
            rows=tuple(rows),
            categories=tuple(sorted({r.category for r in rows})),
            feature_names=tuple(spec.feature_columns),
            dropped_count=dropped,
            columns={c: numeric[c].to_numpy()[positions].astype(np.float64) for c in spec.numeric_columns},
            header=header,
            scaling=scaling if spec.normalize else None,
            output_column=spec.output_column,
        )


def load_dataset(spec: DatasetSpec, scaling: MinMaxScaling | None = None) -> Dataset:
    return DatasetLoader(spec, scaling=scaling).load()


__all__ = [
    "BUILTIN_ENCODINGS",
    "Dataset",
    "DatasetLoader",
    "DatasetSpec",
    "MONTHS",
    "MinMaxScaling",
    "WEEKDAYS",
    "encode_month",
    "load_dataset",
    "minmax_normalize",
]
