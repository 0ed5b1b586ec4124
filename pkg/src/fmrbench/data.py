"""Loading, imputing, standardizing and partitioning grouped tabular data.

A :class:`Dataset` keeps its numeric values NaN-free: missing cells are
stored as ``0.0`` and flagged in the boolean ``observed`` mask, which covers
the feature columns followed by the response columns.
"""
from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .kernels import jacobi_svd


class DataError(ValueError):
    """Malformed or unusable input data."""


class ConvergenceWarning(UserWarning):
    """An iterative routine hit its iteration limit."""


@dataclass(frozen=True)
class Dataset:
    X: np.ndarray
    Y: np.ndarray
    group_of: tuple
    feature_names: tuple
    response_names: tuple
    observed: np.ndarray | None = None
    standardization: dict | None = None

    def __post_init__(self):
        n = self.X.shape[0]
        if self.Y.shape[0] != n or len(self.group_of) != n:
            raise DataError("X, responses and group_of must have the same number of rows")
        if self.X.shape[1] != len(self.feature_names):
            raise DataError("feature_names does not match X")
        if self.Y.shape[1] != len(self.response_names):
            raise DataError("response_names does not match responses")
        for arr in (self.X, self.Y):
            arr.setflags(write=False)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @property
    def has_missing(self) -> bool:
        return self.observed is not None and not bool(self.observed.all())

    def response(self, name: str | None = None) -> np.ndarray:
        if name is None:
            return self.Y[:, 0]
        try:
            return self.Y[:, self.response_names.index(name)]
        except ValueError:
            raise DataError(f"unknown response column {name!r}") from None

    def values(self) -> np.ndarray:
        """Features then responses as one ``n x (p + r)`` matrix."""
        return np.hstack([self.X, self.Y])

    @property
    def column_names(self) -> tuple:
        return self.feature_names + self.response_names


@dataclass(frozen=True)
class GroupIndex:
    group_ids: tuple
    rows: tuple

    @property
    def M(self) -> int:
        return len(self.group_ids)

    @property
    def sizes(self) -> np.ndarray:
        return np.array([len(r) for r in self.rows])

    @property
    def n(self) -> int:
        return int(sum(len(r) for r in self.rows))

    def row_group(self) -> np.ndarray:
        """Group position (0..M-1) of every row."""
        out = np.empty(self.n, dtype=np.intp)
        for i, r in enumerate(self.rows):
            out[r] = i
        return out

    @classmethod
    def from_labels(cls, group_of: Sequence) -> "GroupIndex":
        order: dict = {}
        buckets: list[list[int]] = []
        for row, g in enumerate(group_of):
            if g not in order:
                order[g] = len(buckets)
                buckets.append([])
            buckets[order[g]].append(row)
        if not buckets:
            raise DataError("no groups: dataset is empty")
        return cls(tuple(order), tuple(np.array(b, dtype=np.intp) for b in buckets))


@dataclass(frozen=True)
class HoldoutSplit:
    train_rows: tuple
    test_rows: tuple
    holdout_fraction: float

    def eval_rows(self, i: int) -> np.ndarray:
        """Rows used to score group ``i``: its test rows, or all rows when it has none."""
        test = self.test_rows[i]
        if len(test):
            return test
        return self.train_rows[i]

    def all_train(self) -> np.ndarray:
        return np.sort(np.concatenate(self.train_rows))

    def all_test(self) -> np.ndarray:
        if not self.test_rows:
            return np.empty(0, dtype=np.intp)
        return np.sort(np.concatenate(self.test_rows))


# --------------------------------------------------------------------------
# CSV


@dataclass
class Table:
    """Raw CSV contents: header plus string cells."""

    header: list
    rows: list = field(default_factory=list)

    def column(self, name: str) -> list:
        j = self.header.index(name)
        return [r[j] for r in self.rows]


def read_table(path) -> Table:
    path = Path(path)
    if not path.exists():
        raise DataError(f"{path}: no such file")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file (no header row)") from None
        except csv.Error as exc:
            raise DataError(f"{path}: malformed CSV: {exc}") from None
        header = [h.strip() for h in header]
        seen = set()
        for h in header:
            if h in seen:
                raise DataError(f"{path}: duplicate header column {h!r}")
            seen.add(h)
        rows = []
        try:
            for line_no, row in enumerate(reader, start=2):
                if not row or all(not c.strip() for c in row):
                    continue
                if len(row) != len(header):
                    raise DataError(
                        f"{path}: row {line_no} has {len(row)} fields, expected {len(header)}")
                rows.append(row)
        except csv.Error as exc:
            raise DataError(f"{path}: malformed CSV: {exc}") from None
    if not rows:
        raise DataError(f"{path}: zero data rows")
    return Table(header, rows)


def _parse_cell(text: str, line_no: int, col: str):
    s = text.strip()
    if s == "":
        return None
    try:
        v = float(s)
    except ValueError:
        raise DataError(f"row {line_no}, column {col!r}: non-numeric value {text!r}") from None
    if not math.isfinite(v):
        raise DataError(f"row {line_no}, column {col!r}: non-finite value {text!r}")
    return v


def parse_numeric(table: Table, columns: Sequence[str]) -> tuple[np.ndarray, np.ndarray]:
    """Parse ``columns`` into a value matrix (missing -> 0.0) and an observed mask."""
    idx = []
    for c in columns:
        if c not in table.header:
            raise DataError(f"column {c!r} not found in header")
        idx.append(table.header.index(c))
    vals = np.zeros((len(table.rows), len(columns)))
    mask = np.ones(vals.shape, dtype=bool)
    for i, row in enumerate(table.rows):
        for k, j in enumerate(idx):
            v = _parse_cell(row[j], i + 2, columns[k])
            if v is None:
                mask[i, k] = False
            else:
                vals[i, k] = v
    return vals, mask


def load_csv(path, group_col: str, response_cols: Sequence[str],
             feature_cols: Sequence[str] | None = None,
             ignore_cols: Sequence[str] = ()) -> tuple[Dataset, GroupIndex]:
    """Read a grouped regression dataset.

    Rows keep file order and groups are indexed in order of first appearance.
    When ``feature_cols`` is omitted every column that is not the group
    column, a response, or listed in ``ignore_cols`` becomes a feature.
    A sidecar ``<stem>.standardization.json`` next to the file is attached
    as the standardization record when present.
    """
    table = read_table(path)
    response_cols = list(response_cols)
    if group_col not in table.header:
        raise DataError(f"group column {group_col!r} not found in header")
    if not response_cols:
        raise DataError("at least one response column is required")
    if feature_cols is None:
        skip = {group_col, *response_cols, *ignore_cols}
        feature_cols = [h for h in table.header if h not in skip]
    feature_cols = list(feature_cols)
    if not feature_cols:
        raise DataError("at least one feature column is required")
    overlap = set(feature_cols) & set(response_cols)
    if group_col in feature_cols or group_col in response_cols or overlap:
        raise DataError("group, response and feature columns must be distinct")

    vals, mask = parse_numeric(table, feature_cols + response_cols)
    p = len(feature_cols)
    groups = tuple(g.strip() for g in table.column(group_col))
    for i, g in enumerate(groups):
        if g == "":
            raise DataError(f"row {i + 2}: empty group identifier")
    ds = Dataset(
        X=vals[:, :p].copy(), Y=vals[:, p:].copy(), group_of=groups,
        feature_names=tuple(feature_cols), response_names=tuple(response_cols),
        observed=None if mask.all() else mask,
        standardization=read_standardization(sidecar_path(path)),
    )
    return ds, GroupIndex.from_labels(groups)


def sidecar_path(csv_path) -> Path:
    p = Path(csv_path)
    return p.with_name(p.stem + ".standardization.json")


def read_standardization(path) -> dict | None:
    path = Path(path)
    if not path.exists():
        return None
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    return {k: (float(v["mean"]), float(v["sd"])) for k, v in raw.items()}


# --------------------------------------------------------------------------
# Imputation


def _objective(X, mask, Z, lam, s):
    resid = np.where(mask, X - Z, 0.0)
    return 0.5 * float(np.sum(resid * resid)) + lam * float(np.sum(s))


def soft_impute(X, mask=None, lambda_svd: float = 0.0, tol: float = 1e-7,
                max_iter: int = 500, max_rank: int | None = None,
                return_info: bool = False):
    """Complete a matrix by iterated soft-thresholded SVD.

    Parameters
    ----------
    X : (n, p) array
        Values; entries where ``mask`` is False are ignored. NaNs are
        treated as missing when ``mask`` is None.
    mask : (n, p) bool array, optional
        True where observed.
    lambda_svd : float
        Soft threshold applied to singular values.
    tol : float
        Stop when ``||Z_new - Z||_F / ||Z||_F < tol``.
    max_iter : int
    max_rank : int, optional
        Keep at most this many singular values after thresholding. With
        ``lambda_svd=0`` and no rank cap the iteration is a fixed point of
        the column-mean fill.
    return_info : bool
        Also return ``{"iterations", "converged", "objective"}``.

    Returns
    -------
    completed : (n, p) array
        Observed entries are copied unchanged from ``X``.
    """
    X = np.array(X, dtype=np.float64)
    if mask is None:
        mask = ~np.isnan(X)
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != X.shape:
        raise DataError("mask shape does not match X")
    if lambda_svd < 0:
        raise DataError("lambda_svd must be non-negative")
    counts = mask.sum(axis=0)
    if np.any(counts == 0):
        j = int(np.flatnonzero(counts == 0)[0])
        raise DataError(f"column {j} has no observed entries")
    X = np.where(mask, X, 0.0)
    info = {"iterations": 0, "converged": True, "objective": []}
    if mask.all():
        return (X, info) if return_info else X

    col_means = X.sum(axis=0) / counts
    Z = np.where(mask, X, col_means)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        filled = np.where(mask, X, Z)
        U, s, Vt = jacobi_svd(filled)
        s = np.maximum(s - lambda_svd, 0.0)
        if max_rank is not None:
            s[max_rank:] = 0.0
        Z_new = (U * s) @ Vt
        info["objective"].append(_objective(X, mask, Z_new, lambda_svd, s))
        denom = max(np.linalg.norm(Z), 1e-300)
        change = np.linalg.norm(Z_new - Z) / denom
        Z = Z_new
        if change < tol:
            converged = True
            break
    info["iterations"] = it
    info["converged"] = converged
    if not converged:
        warnings.warn(f"soft_impute did not converge after {it} iterations",
                      ConvergenceWarning, stacklevel=2)
    out = np.where(mask, X, Z)
    return (out, info) if return_info else out


def impute_dataset(ds: Dataset, lambda_svd: float = 0.0, tol: float = 1e-7,
                   max_iter: int = 500, max_rank: int | None = None) -> Dataset:
    if not ds.has_missing:
        return replace(ds, observed=None)
    full = soft_impute(ds.values(), ds.observed, lambda_svd, tol, max_iter, max_rank)
    p = ds.p
    return replace(ds, X=full[:, :p].copy(), Y=full[:, p:].copy(), observed=None)


# --------------------------------------------------------------------------
# Standardization


def column_moments(values: np.ndarray, names: Sequence[str]) -> dict:
    if values.shape[0] < 2:
        raise DataError("standardization needs at least two rows")
    mean = values.mean(axis=0)
    sd = values.std(axis=0, ddof=1)
    for j, name in enumerate(names):
        if not sd[j] > 0:
            raise DataError(f"column {name!r} has zero variance and cannot be standardized")
    return {name: (float(mean[j]), float(sd[j])) for j, name in enumerate(names)}


def standardize_matrix(values: np.ndarray, names: Sequence[str]) -> tuple[np.ndarray, dict]:
    record = column_moments(values, names)
    mean = np.array([record[n][0] for n in names])
    sd = np.array([record[n][1] for n in names])
    return (values - mean) / sd, record


def standardize(ds: Dataset) -> Dataset:
    """Scale every feature and response column to mean 0, sd 1 (ddof=1)."""
    if ds.has_missing:
        raise DataError("standardize requires a complete dataset; impute first")
    Z, record = standardize_matrix(ds.values(), ds.column_names)
    p = ds.p
    return replace(ds, X=Z[:, :p].copy(), Y=Z[:, p:].copy(), observed=None,
                   standardization=record)


def destandardize(vector, record: Mapping | None, names: Sequence[str]) -> np.ndarray:
    """Map standardized values of columns ``names`` back to raw units."""
    if record is None:
        raise DataError("no standardization record available")
    v = np.asarray(vector, dtype=np.float64)
    try:
        mean = np.array([record[n][0] for n in names])
        sd = np.array([record[n][1] for n in names])
    except KeyError as exc:
        raise DataError(f"standardization record has no entry for {exc.args[0]!r}") from None
    return v * sd + mean


def standardization_json(record: Mapping) -> str:
    return json.dumps({k: {"mean": m, "sd": s} for k, (m, s) in record.items()},
                      indent=2, sort_keys=False) + "\n"


# --------------------------------------------------------------------------
# Train/test partition


def grouped_holdout(gi: GroupIndex, fraction: float, seed: int) -> HoldoutSplit:
    """Hold out ``floor(fraction * n_i)`` rows of every group for testing."""
    if not 0 <= fraction < 1:
        raise ValueError("holdout fraction must lie in [0, 1)")
    rng = np.random.default_rng(seed)
    train, test = [], []
    for rows in gi.rows:
        n_i = len(rows)
        n_test = min(int(math.floor(fraction * n_i)), n_i - 1)
        if n_test > 0:
            pick = np.sort(rng.choice(n_i, size=n_test, replace=False))
            keep = np.ones(n_i, dtype=bool)
            keep[pick] = False
            test.append(rows[pick])
            train.append(rows[keep])
        else:
            test.append(rows[:0])
            train.append(rows.copy())
    return HoldoutSplit(tuple(train), tuple(test), float(fraction))
