"""Builders and brute-force oracles shared by the test modules."""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Sequence

import numpy as np

from categorytrees.core_model import EPS, DataRow
from categorytrees.ingest import Dataset, DatasetSpec, load_dataset

IRIS_CSV = Path(__file__).parent / "data" / "iris.csv"
IRIS_FEATURES = ["sepal_length", "sepal_width", "petal_length", "petal_width"]


def make_dataset(points, labels, outputs=None) -> Dataset:
    points = [list(map(float, p)) for p in points]
    dim = len(points[0]) if points else 0
    names = tuple(f"f{j}" for j in range(dim))
    rows = tuple(
        DataRow(
            features=np.asarray(p, dtype=np.float64),
            category=str(c),
            output_value=None if outputs is None else float(outputs[i]),
            row_id=i,
            raw=tuple(str(v) for v in (*p, c)),
        )
        for i, (p, c) in enumerate(zip(points, labels))
    )
    columns = {name: np.array([p[j] for p in points], dtype=np.float64) for j, name in enumerate(names)}
    if outputs is not None:
        columns["out"] = np.asarray(outputs, dtype=np.float64)
    return Dataset(
        rows=rows,
        categories=tuple(sorted({str(c) for c in labels})),
        feature_names=names,
        columns=columns,
        header=(*names, "label"),
        output_column="out" if outputs is not None else None,
    )


def load_iris(normalize: bool = True) -> Dataset:
    """The 150-row Iris table checked in under tests/data."""
    return load_dataset(
        DatasetSpec(path=IRIS_CSV, category_columns=["species"], feature_columns=IRIS_FEATURES, normalize=normalize)
    )


def two_blobs(n_per: int = 25, seed: int = 7, spread: float = 0.05) -> Dataset:
    rng = np.random.default_rng(seed)
    a = 0.2 + rng.uniform(-spread, spread, size=(n_per, 2))
    b = 0.8 + rng.uniform(-spread, spread, size=(n_per, 2))
    return make_dataset([*a, *b], ["A"] * n_per + ["B"] * n_per)


def write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence[object]]) -> Path:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    return path


def oracle_mean(vectors) -> list[float]:
    n = len(vectors)
    return [sum(v[j] for v in vectors) / n for j in range(len(vectors[0]))]


def oracle_error(row, exemplar, target=1.0) -> float:
    terms = [abs(x * (target / max(e, EPS)) - target) for x, e in zip(row, exemplar)]
    return sum(terms) / len(terms)


def oracle_argmin(row, exemplars: dict[str, Sequence[float]], target=1.0) -> str:
    """Lowest-error key, ties to the lowest key."""
    best = None
    for key in sorted(exemplars):
        err = oracle_error(row, exemplars[key], target)
        if best is None or err < best[0]:
            best = (err, key)
    return best[1]


def oracle_variance(values) -> float:
    n = len(values)
    mean = sum(values) / n
    return sum((v - mean) ** 2 for v in values) / n


A_ROWS = [0.78, 0.80, 0.82]
B_LOW = [0.18, 0.20, 0.22, 0.19, 0.21]
B_HIGH = [0.69, 0.70, 0.71]


def straying_dataset() -> Dataset:
    """Three B rows sit next to the A rows and end up in A's tree."""
    values = [*A_ROWS, *B_LOW, *B_HIGH]
    labels = ["A"] * len(A_ROWS) + ["B"] * (len(B_LOW) + len(B_HIGH))
    return make_dataset([[v, v] for v in values], labels)
