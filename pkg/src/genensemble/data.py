"""Tabular dataset model: schema, CSV ingestion, splitting, feature encoding.

A Dataset stores rows as a float64 matrix; categorical cells hold the index
of their level in the schema. Values survive a CSV round trip exactly
because serialization uses the shortest decimal form that parses back to
the same float.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .rng import make_rng

NUMERIC = "numeric"
CATEGORICAL = "categorical"
FEATURE = "feature"
TARGET = "target"


class SchemaError(ValueError):
    pass


class ParseError(ValueError):
    pass


@dataclass(frozen=True)
class Column:
    name: str
    kind: str
    role: str
    levels: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind not in (NUMERIC, CATEGORICAL):
            raise SchemaError(f"unknown column kind {self.kind!r}")
        if self.role not in (FEATURE, TARGET):
            raise SchemaError(f"unknown column role {self.role!r}")
        if self.kind == CATEGORICAL:
            if not self.levels:
                raise SchemaError(f"categorical column {self.name!r} needs levels")
            if any(lv == "" for lv in self.levels):
                raise SchemaError(f"column {self.name!r} has an empty level name")
            if len(set(self.levels)) != len(self.levels):
                raise SchemaError(f"column {self.name!r} has duplicate levels")
        elif self.levels:
            raise SchemaError(f"numeric column {self.name!r} cannot carry levels")


@dataclass(frozen=True)
class Schema:
    columns: tuple[Column, ...]

    def __post_init__(self):
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise SchemaError("duplicate column names")
        targets = [c for c in self.columns if c.role == TARGET]
        if len(targets) != 1:
            raise SchemaError(f"schema must have exactly one target column, got {len(targets)}")

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.columns]

    @property
    def target_index(self) -> int:
        return next(i for i, c in enumerate(self.columns) if c.role == TARGET)

    @property
    def target(self) -> Column:
        return self.columns[self.target_index]

    @property
    def feature_indices(self) -> list[int]:
        return [i for i, c in enumerate(self.columns) if c.role == FEATURE]

    @property
    def task(self) -> str:
        return "classification" if self.target.kind == CATEGORICAL else "regression"

    @property
    def n_classes(self) -> int:
        return len(self.target.levels) if self.target.kind == CATEGORICAL else 0


@dataclass(frozen=True)
class Provenance:
    source: str = "real"           # "real" | "synthetic"
    generator: str = ""
    replicate: int = -1
    summary_id: str = ""


REAL = Provenance()


@dataclass(frozen=True)
class Dataset:
    schema: Schema
    rows: np.ndarray
    provenance: Provenance = REAL

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.float64)
        if rows.ndim != 2 or rows.shape[1] != len(self.schema.columns):
            raise SchemaError(
                f"rows shape {rows.shape} does not match schema width {len(self.schema.columns)}"
            )
        for j, col in enumerate(self.schema.columns):
            if col.kind == CATEGORICAL and rows.shape[0]:
                vals = rows[:, j]
                if not np.all((vals == np.floor(vals)) & (vals >= 0) & (vals < len(col.levels))):
                    raise SchemaError(f"column {col.name!r} holds an invalid level index")
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    def target_values(self) -> np.ndarray:
        return self.rows[:, self.schema.target_index]

    def with_provenance(self, provenance: Provenance) -> "Dataset":
        return Dataset(self.schema, self.rows, provenance)


@dataclass(frozen=True)
class FeatureMatrix:
    x: np.ndarray                   # (n, d) encoded features
    y: np.ndarray                   # (n,) targets: floats or class indices
    task: str                       # "regression" | "classification"
    n_classes: int = 0
    scaler: tuple[np.ndarray, np.ndarray] | None = None   # per-column (mean, stddev) fit on train

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def d(self) -> int:
        return self.x.shape[1]


def _parse_cell(text: str, col: Column, row_num: int) -> float:
    if col.kind == NUMERIC:
        try:
            return float(text)
        except ValueError:
            raise ParseError(
                f"row {row_num}, column {col.name!r}: {text!r} is not numeric"
            ) from None
    try:
        return float(col.levels.index(text))
    except ValueError:
        raise ParseError(
            f"row {row_num}, column {col.name!r}: unknown level {text!r}"
        ) from None


def load_csv(path, schema: Schema) -> Dataset:
    """Read a comma-separated file whose header matches the schema in order."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        if header != schema.names:
            raise ParseError(f"{path}: header {header} does not match schema {schema.names}")
        rows = []
        for row_num, record in enumerate(reader, start=1):
            if len(record) != len(schema.columns):
                raise ParseError(f"{path}: row {row_num} has {len(record)} cells, expected "
                                 f"{len(schema.columns)}")
            rows.append([_parse_cell(cell, col, row_num)
                         for cell, col in zip(record, schema.columns)])
    data = np.array(rows, dtype=np.float64).reshape(len(rows), len(schema.columns))
    return Dataset(schema, data, REAL)


def format_cell(value: float, col: Column) -> str:
    if col.kind == CATEGORICAL:
        return col.levels[int(value)]
    if math.isnan(value):
        return "nan"
    return repr(float(value))


def save_csv(dataset: Dataset, path) -> None:
    """Write a dataset back out; numeric cells use shortest round-trip decimals."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(dataset.schema.names)
        for row in dataset.rows:
            writer.writerow([format_cell(v, c) for v, c in zip(row, dataset.schema.columns)])


def train_test_split(data: Dataset, test_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Seeded permutation split; |test| = round(test_fraction * n), half rounds up."""
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    if data.n < 2:
        raise ValueError("need at least 2 rows to split")
    n_test = int(math.floor(test_fraction * data.n + 0.5))
    perm = make_rng(seed).permutation(data.n)
    test_idx = np.sort(perm[:n_test])
    train_idx = np.sort(perm[n_test:])
    return (Dataset(data.schema, data.rows[train_idx], data.provenance),
            Dataset(data.schema, data.rows[test_idx], data.provenance))


def encode(train: Dataset, apply_to: Dataset, standardize: bool) -> FeatureMatrix:
    """One-hot encode categorical features; optionally z-score with train statistics.

    The scaler (per-column mean and population stddev) is fit on the train
    rows only and applied to apply_to; constant columns map to 0. The target
    is never scaled; a categorical target becomes a class-index vector.
    """
    if train.schema != apply_to.schema:
        raise SchemaError("train and apply_to must share a schema")
    schema = train.schema

    def expand(ds: Dataset) -> np.ndarray:
        blocks = []
        for j in schema.feature_indices:
            col = schema.columns[j]
            vals = ds.rows[:, j]
            if col.kind == NUMERIC:
                blocks.append(vals[:, None])
            else:
                onehot = np.zeros((ds.n, len(col.levels)))
                if ds.n:
                    onehot[np.arange(ds.n), vals.astype(int)] = 1.0
                blocks.append(onehot)
        if not blocks:
            return np.zeros((ds.n, 0))
        return np.hstack(blocks)

    x = expand(apply_to)
    scaler = None
    if standardize:
        ref = expand(train)
        mean = ref.mean(axis=0) if ref.shape[0] else np.zeros(ref.shape[1])
        std = ref.std(axis=0) if ref.shape[0] else np.zeros(ref.shape[1])
        x = np.where(std > 0, (x - mean) / np.where(std > 0, std, 1.0), 0.0)
        scaler = (mean, std)

    y = apply_to.target_values()
    if schema.task == "classification":
        y = y.astype(int)
    return FeatureMatrix(x=x, y=y, task=schema.task, n_classes=schema.n_classes, scaler=scaler)
