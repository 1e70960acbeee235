"""Column-major numeric dataset with optional binary labels, plus CSV I/O."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    CsvFormatError,
    InvalidParameterError,
    MissingLabelColumnError,
    NonBinaryLabelError,
)

__all__ = ["Dataset", "load_csv", "save_csv"]


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Dataset:
    """Equal-length numeric feature columns, optional {0,1} labels, names.

    Columns are stored read-only; operations that perturb data return new
    datasets. All values must be finite.
    """

    columns: tuple[np.ndarray, ...]
    feature_names: tuple[str, ...]
    labels: np.ndarray | None = field(default=None)

    def __post_init__(self) -> None:
        cols = tuple(
            _readonly(np.asarray(c, dtype=np.float64).ravel()) for c in self.columns
        )
        object.__setattr__(self, "columns", cols)
        object.__setattr__(self, "feature_names", tuple(str(n) for n in self.feature_names))
        if len(cols) == 0:
            raise InvalidParameterError("dataset must have at least one feature column")
        if len(self.feature_names) != len(cols):
            raise InvalidParameterError(
                f"{len(self.feature_names)} feature names for {len(cols)} columns"
            )
        n = cols[0].size
        for i, c in enumerate(cols):
            if c.size != n:
                raise InvalidParameterError(
                    f"column {i} has {c.size} rows, expected {n}"
                )
            if not np.all(np.isfinite(c)):
                raise InvalidParameterError(f"column {i} contains non-finite values")
        if self.labels is not None:
            y = np.asarray(self.labels)
            if y.size != n:
                raise InvalidParameterError(
                    f"labels have {y.size} rows, expected {n}"
                )
            yf = y.astype(np.float64, copy=False)
            if not np.all(np.isfinite(yf)) or not np.all(np.isin(yf, (0.0, 1.0))):
                raise InvalidParameterError("labels must contain only 0 and 1")
            object.__setattr__(self, "labels", _readonly(y.astype(np.int64)))

    @property
    def n_rows(self) -> int:
        return self.columns[0].size

    @property
    def n_features(self) -> int:
        return len(self.columns)

    def column(self, index: int) -> np.ndarray:
        return self.columns[index]

    def matrix(self) -> np.ndarray:
        """Row-major (n_rows, n_features) copy, for estimators that want it."""
        return np.column_stack(self.columns)

    def subset(self, rows) -> "Dataset":
        """New dataset restricted to the given row indices (order kept)."""
        rows = np.asarray(rows, dtype=np.int64)
        return Dataset(
            columns=tuple(c[rows] for c in self.columns),
            feature_names=self.feature_names,
            labels=None if self.labels is None else self.labels[rows],
        )

    def without_labels(self) -> "Dataset":
        return Dataset(columns=self.columns, feature_names=self.feature_names)

    def with_columns(self, replacements: dict[int, np.ndarray]) -> "Dataset":
        """New dataset with the given columns replaced; others shared as-is."""
        cols = list(self.columns)
        for i, c in replacements.items():
            cols[i] = c
        return Dataset(
            columns=tuple(cols), feature_names=self.feature_names, labels=self.labels
        )


def _parse_cell(text: str) -> float | None:
    try:
        return float(text)
    except ValueError:
        return None


def load_csv(
    path,
    label_column: str | int | None = None,
    drop_non_numeric: bool = False,
) -> Dataset:
    """Load a headered CSV into a :class:`Dataset`.

    ``label_column`` selects the label by header name or positional index;
    ``None`` loads an unlabeled dataset. Non-numeric feature columns are
    dropped when ``drop_non_numeric`` is set, otherwise the first offending
    cell is reported with its row/column position. Labels must already be
    {0,1}-valued.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvFormatError(f"{path}: file is empty, expected a header row")
        header = [h.strip() for h in header]
        rows = [[cell.strip() for cell in row] for row in reader]

    if not rows:
        raise CsvFormatError(f"{path}: no data rows after the header")
    n_cols = len(header)
    for r, row in enumerate(rows, start=2):  # 1-based file lines, header is line 1
        if len(row) != n_cols:
            raise CsvFormatError(
                f"{path}: row {r} has {len(row)} fields, expected {n_cols}"
            )

    label_idx: int | None = None
    if label_column is not None:
        if isinstance(label_column, str) and label_column in header:
            label_idx = header.index(label_column)
        else:
            try:
                idx = int(label_column)
            except (TypeError, ValueError):
                raise MissingLabelColumnError(
                    f"{path}: no column named {label_column!r} in header {header}"
                )
            if not 0 <= idx < n_cols:
                raise MissingLabelColumnError(
                    f"{path}: label column index {idx} out of range for {n_cols} columns"
                )
            label_idx = idx

    labels = None
    if label_idx is not None:
        raw = [_parse_cell(row[label_idx]) for row in rows]
        for r, v in enumerate(raw, start=2):
            if v is None:
                raise NonBinaryLabelError(
                    f"{path}: row {r}, column {header[label_idx]!r}: "
                    f"label {rows[r - 2][label_idx]!r} is not numeric"
                )
            if v not in (0.0, 1.0):
                raise NonBinaryLabelError(
                    f"{path}: row {r}, column {header[label_idx]!r}: "
                    f"label {v} is not in {{0, 1}}"
                )
        labels = np.array(raw, dtype=np.int64)

    columns: list[np.ndarray] = []
    names: list[str] = []
    for j in range(n_cols):
        if j == label_idx:
            continue
        parsed = [_parse_cell(row[j]) for row in rows]
        bad = next((r for r, v in enumerate(parsed, start=2) if v is None), None)
        if bad is not None:
            if drop_non_numeric:
                continue
            raise CsvFormatError(
                f"{path}: row {bad}, column {header[j]!r}: "
                f"value {rows[bad - 2][j]!r} is not numeric"
            )
        columns.append(np.array(parsed, dtype=np.float64))
        names.append(header[j])

    if not columns:
        raise CsvFormatError(f"{path}: no numeric feature columns remain")
    return Dataset(columns=tuple(columns), feature_names=tuple(names), labels=labels)


def save_csv(data: Dataset, path, label_name: str = "label") -> None:
    """Write a dataset back out as a headered CSV (label column last)."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        header = list(data.feature_names)
        if data.labels is not None:
            header.append(label_name)
        writer.writerow(header)
        for i in range(data.n_rows):
            row = [repr(float(c[i])) for c in data.columns]
            if data.labels is not None:
                row.append(str(int(data.labels[i])))
            writer.writerow(row)
