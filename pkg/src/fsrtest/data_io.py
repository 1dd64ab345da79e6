"""CSV panels in, aligned ``PanelData`` out.

Inputs must already be transformed to stationarity; no dataset-specific
transformation codes are applied here. Missing values are rejected.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .factor_model import DataError, PanelData

__all__ = ["CsvPanel", "lag_align", "load_panel", "read_csv_panel", "standardize", "write_csv_panel"]


@dataclass(frozen=True)
class CsvPanel:
    columns: tuple[str, ...]
    values: np.ndarray
    labels: tuple[str, ...] | None = None

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]


def read_csv_panel(path, *, date_column: bool = False) -> CsvPanel:
    """Parse a comma-separated file with a header row.

    With ``date_column`` the first column is kept as string labels and every
    other cell must parse as a finite float.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DataError(f"{path}: empty file")
    header, body = rows[0], [r for r in rows[1:] if r]
    start = 1 if date_column else 0
    columns = tuple(h.strip() for h in header[start:])
    if not columns:
        raise DataError(f"{path}: no data columns")
    values = np.empty((len(body), len(columns)))
    labels = []
    for i, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise DataError(f"{path}: line {i} has {len(row)} fields, header has {len(header)}")
        if date_column:
            labels.append(row[0].strip())
        for j, cell in enumerate(row[start:]):
            try:
                v = float(cell)
            except ValueError:
                raise DataError(
                    f"{path}: line {i}, column {columns[j]!r}: cannot parse {cell!r} as a number"
                ) from None
            if not np.isfinite(v):
                raise DataError(f"{path}: line {i}, column {columns[j]!r}: non-finite value {cell!r}")
            values[i - 2, j] = v
    return CsvPanel(columns, values, tuple(labels) if date_column else None)


def write_csv_panel(path, panel: CsvPanel) -> None:
    """Write with 17 significant digits so that re-reading is exact."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        lead = ["date"] if panel.labels is not None else []
        w.writerow(lead + list(panel.columns))
        for i, row in enumerate(panel.values):
            lab = [panel.labels[i]] if panel.labels is not None else []
            w.writerow(lab + [f"{v:.17g}" for v in row])


def standardize(values: np.ndarray, columns) -> np.ndarray:
    """Column z-scores using the sample (ddof=1) standard deviation."""
    values = np.asarray(values, dtype=np.float64)
    if values.shape[0] < 2:
        raise DataError("standardization needs at least two rows")
    sd = values.std(axis=0, ddof=1)
    const = np.flatnonzero(sd == 0)
    if const.size:
        names = ", ".join(repr(columns[j]) for j in const)
        raise DataError(f"cannot standardize constant column(s): {names}")
    return (values - values.mean(axis=0)) / sd


def load_panel(
    y_path,
    x_path,
    w_path=None,
    *,
    date_column: bool = False,
    standardize_data: bool = False,
    lag: int = 0,
) -> PanelData:
    """Load outcome, regressors and optional extra regressors from CSV files.

    ``y_path`` must hold exactly one numeric column. With ``lag=1`` the outcome
    at ``t + 1`` is paired with regressors at ``t`` (see :func:`lag_align`).
    Standardization, when requested, is applied after alignment.
    """
    yp = read_csv_panel(y_path, date_column=date_column)
    xp = read_csv_panel(x_path, date_column=date_column)
    if yp.values.shape[1] != 1:
        raise DataError(f"{y_path}: expected one outcome column, found {yp.values.shape[1]}")
    wp = read_csv_panel(w_path, date_column=date_column) if w_path is not None else None
    for name, other in (("X", xp), ("W", wp)):
        if other is not None and other.n_rows != yp.n_rows:
            raise DataError(f"row count mismatch: Y has {yp.n_rows} rows, {name} has {other.n_rows}")
    Y, X = yp.values[:, 0], xp.values
    W = wp.values if wp is not None else None
    labels = yp.labels
    if lag:
        if lag != 1:
            raise ValueError("only lag=1 is supported")
        Y, X, W = _shift(Y, X, W)
        labels = labels[:-1] if labels is not None else None
    if standardize_data:
        Y = standardize(Y[:, None], yp.columns)[:, 0]
        X = standardize(X, xp.columns)
        if W is not None:
            W = standardize(W, wp.columns)
    return PanelData(Y, X, W, x_names=xp.columns, w_names=wp.columns if wp is not None else None, labels=labels)


def _shift(y, X, W=None):
    if y.shape[0] < 3:
        raise DataError(f"lag alignment needs T >= 3, got {y.shape[0]}")
    return y[1:], X[:-1], (W[:-1] if W is not None else None)


def lag_align(y_series, x_matrix, lags: int = 1) -> PanelData:
    """Pair ``y[t + 1]`` with ``X[t]``; the result has ``T - 1`` rows."""
    if lags != 1:
        raise ValueError("only lags=1 is supported")
    y = np.asarray(y_series, dtype=np.float64)
    X = np.asarray(x_matrix, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] != y.shape[0]:
        raise DataError(f"y has {y.shape[0]} rows but X has {X.shape[0]}")
    y1, X0, _ = _shift(y, X)
    return PanelData(y1, X0)
