"""Tabular data container plus CSV ingestion, splitting, and standardization."""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np


class DataError(ValueError):
    """Raised when input data violate the container contract."""


@dataclass(frozen=True)
class Dataset:
    """Feature matrix with aligned regression targets and feature column names.

    Rows are observations, columns are features.  All values must be finite;
    the target vector is kept separate from the feature matrix.
    """

    features: np.ndarray
    targets: np.ndarray
    column_names: tuple[str, ...]

    def __post_init__(self) -> None:
        features = np.asarray(self.features, dtype=np.float64)
        targets = np.asarray(self.targets, dtype=np.float64)
        if features.ndim != 2:
            raise DataError("features must be a 2-d array (rows, columns)")
        if features.shape[0] < 1:
            raise DataError("dataset needs at least one row")
        if targets.shape != (features.shape[0],):
            raise DataError(
                f"targets shape {targets.shape} does not match {features.shape[0]} rows"
            )
        names = tuple(str(name) for name in self.column_names)
        if len(names) != features.shape[1]:
            raise DataError(
                f"{len(names)} column names for {features.shape[1]} feature columns"
            )
        if len(set(names)) != len(names):
            raise DataError("column names must be unique")
        if not np.isfinite(features).all():
            raise DataError("NaN or Inf in feature matrix")
        if not np.isfinite(targets).all():
            raise DataError("NaN or Inf in targets")
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "targets", targets)
        object.__setattr__(self, "column_names", names)

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def take(self, rows: np.ndarray) -> "Dataset":
        """Row subset in the given order."""
        rows = np.asarray(rows, dtype=np.intp)
        return Dataset(
            features=self.features[rows],
            targets=self.targets[rows],
            column_names=self.column_names,
        )

    def drop_column(self, index: int) -> "Dataset":
        """Copy of the dataset without feature column ``index``."""
        if not 0 <= index < self.n_features:
            raise DataError(f"column index {index} out of range")
        keep = [j for j in range(self.n_features) if j != index]
        return Dataset(
            features=self.features[:, keep],
            targets=self.targets,
            column_names=tuple(self.column_names[j] for j in keep),
        )


def ingest_csv(path: str | Path, target_column: str) -> Dataset:
    """Read a numeric CSV with a header row into a :class:`Dataset`.

    The file must be UTF-8, comma separated, with unique header names and one
    column matching ``target_column``.  Every cell must parse as a finite
    float; errors name the offending line and column.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        try:
            header = [name.strip() for name in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        if any(name == "" for name in header):
            raise DataError(f"{path}: blank column name in header")
        if len(set(header)) != len(header):
            duplicates = sorted({name for name in header if header.count(name) > 1})
            raise DataError(f"{path}: duplicate column names {duplicates}")
        if target_column not in header:
            raise DataError(
                f"{path}: target column {target_column!r} not found in header {header}"
            )
        target_index = header.index(target_column)
        rows: list[list[float]] = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue  # tolerate blank lines, e.g. a trailing newline
            if len(row) != len(header):
                raise DataError(
                    f"{path}: line {lineno} has {len(row)} cells, expected {len(header)}"
                )
            parsed = []
            for name, cell in zip(header, row):
                try:
                    value = float(cell)
                except ValueError:
                    raise DataError(
                        f"{path}: line {lineno}, column {name!r}: non-numeric cell {cell!r}"
                    ) from None
                if not np.isfinite(value):
                    raise DataError(
                        f"{path}: line {lineno}, column {name!r}: non-finite cell {cell!r}"
                    )
                parsed.append(value)
            rows.append(parsed)
    if not rows:
        raise DataError(f"{path}: no data rows")
    table = np.asarray(rows, dtype=np.float64)
    keep = [j for j in range(len(header)) if j != target_index]
    return Dataset(
        features=table[:, keep],
        targets=table[:, target_index],
        column_names=tuple(header[j] for j in keep),
    )


def write_csv(data: Dataset, path: str | Path, target_name: str = "y") -> None:
    """Write a dataset as CSV; values round-trip bit-identically through ingest."""
    if target_name in data.column_names:
        raise DataError(f"target name {target_name!r} collides with a feature column")
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(list(data.column_names) + [target_name])
        for x, y in zip(data.features, data.targets):
            # repr() keeps the shortest decimal that parses back to the same float
            writer.writerow([repr(float(v)) for v in x] + [repr(float(y))])


def train_val_test_split(
    data: Dataset,
    fractions: tuple[float, float, float] = (0.7, 0.2, 0.1),
    seed: int | np.random.SeedSequence = 0,
) -> tuple[Dataset, Dataset, Dataset]:
    """Shuffle rows with the given seed and split into train/val/test parts."""
    parts = np.asarray(fractions, dtype=np.float64)
    if parts.shape != (3,) or (parts <= 0).any() or abs(parts.sum() - 1.0) > 1e-9:
        raise ValueError(
            f"fractions must be three positive numbers summing to 1, got {fractions}"
        )
    n = data.n_rows
    n_train = int(np.floor(parts[0] * n))
    n_val = int(np.floor(parts[1] * n))
    n_test = n - n_train - n_val
    if min(n_train, n_val, n_test) < 1:
        raise DataError(f"split {fractions} leaves an empty part for {n} rows")
    order = np.random.default_rng(seed).permutation(n)
    train = data.take(order[:n_train])
    val = data.take(order[n_train : n_train + n_val])
    test = data.take(order[n_train + n_val :])
    return train, val, test


@dataclass(frozen=True)
class Standardizer:
    """Column-wise centering and scaling fitted on one split only.

    Constant columns get scale 1 so they center to zero instead of dividing
    by zero.  ``transform`` is a pure function of the stored moments.
    """

    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, features: np.ndarray) -> "Standardizer":
        features = np.asarray(features, dtype=np.float64)
        mean = features.mean(axis=0)
        scale = features.std(axis=0)
        scale = np.where(scale == 0.0, 1.0, scale)
        return cls(mean=mean, scale=scale)

    def transform(self, features: np.ndarray) -> np.ndarray:
        return (np.asarray(features, dtype=np.float64) - self.mean) / self.scale

    def apply(self, data: Dataset) -> Dataset:
        return replace(data, features=self.transform(data.features))
