"""Row-major sparse matrix (CSR) on raw numpy arrays.

Invariants enforced by validate():
  - len(indptr) == n_rows + 1, indptr[0] == 0, nondecreasing,
    indptr[-1] == len(indices) == len(values);
  - column indices in [0, n_cols), strictly increasing within each row;
  - values are float64 and finite (no explicit zeros are stored by the
    constructors in this package, so a stored entry is always meaningful).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import FeatureError


@dataclass
class SparseMatrix:
    n_rows: int
    n_cols: int
    indptr: np.ndarray
    indices: np.ndarray
    values: np.ndarray

    def validate(self) -> "SparseMatrix":
        if self.indptr.shape != (self.n_rows + 1,):
            raise FeatureError("CSR indptr length must be n_rows + 1")
        if self.indptr[0] != 0 or self.indptr[-1] != self.indices.shape[0]:
            raise FeatureError("CSR indptr endpoints inconsistent with indices")
        if self.indices.shape != self.values.shape:
            raise FeatureError("CSR indices and values lengths differ")
        if np.any(np.diff(self.indptr) < 0):
            raise FeatureError("CSR indptr must be nondecreasing")
        if self.indices.size:
            if self.indices.min() < 0 or self.indices.max() >= self.n_cols:
                raise FeatureError("CSR column index out of range")
            row_of = np.repeat(np.arange(self.n_rows), np.diff(self.indptr))
            within_row = row_of[1:] == row_of[:-1]
            if np.any(np.diff(self.indices)[within_row] <= 0):
                raise FeatureError("CSR column indices must strictly increase within a row")
        if not np.all(np.isfinite(self.values)):
            raise FeatureError("CSR values must be finite")
        return self

    @property
    def nnz(self) -> int:
        return int(self.indices.shape[0])

    @classmethod
    def from_dense(cls, arr) -> "SparseMatrix":
        arr = np.asarray(arr, dtype=np.float64)
        if arr.ndim != 2:
            raise FeatureError("from_dense expects a 2-D array")
        rows, cols = np.nonzero(arr)
        indptr = np.zeros(arr.shape[0] + 1, dtype=np.int64)
        np.add.at(indptr, rows + 1, 1)
        np.cumsum(indptr, out=indptr)
        return cls(
            n_rows=arr.shape[0],
            n_cols=arr.shape[1],
            indptr=indptr,
            indices=cols.astype(np.int64),
            values=arr[rows, cols],
        ).validate()

    @classmethod
    def from_rows(cls, rows: list, n_cols: int) -> "SparseMatrix":
        """Build from per-row lists of (col, value) pairs, sorted by col, zeros dropped."""
        indptr = np.zeros(len(rows) + 1, dtype=np.int64)
        all_cols: list[int] = []
        all_vals: list[float] = []
        for r, pairs in enumerate(rows):
            kept = [(c, v) for c, v in pairs if v != 0.0]
            indptr[r + 1] = indptr[r] + len(kept)
            all_cols.extend(c for c, _ in kept)
            all_vals.extend(v for _, v in kept)
        return cls(
            n_rows=len(rows),
            n_cols=n_cols,
            indptr=indptr,
            indices=np.asarray(all_cols, dtype=np.int64),
            values=np.asarray(all_vals, dtype=np.float64),
        ).validate()

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.n_rows, self.n_cols), dtype=np.float64)
        row_of = np.repeat(np.arange(self.n_rows), np.diff(self.indptr))
        out[row_of, self.indices] = self.values
        return out

    def row_sums(self) -> np.ndarray:
        row_of = np.repeat(np.arange(self.n_rows), np.diff(self.indptr))
        return np.bincount(row_of, weights=self.values, minlength=self.n_rows)

    def copy(self) -> "SparseMatrix":
        return SparseMatrix(
            self.n_rows,
            self.n_cols,
            self.indptr.copy(),
            self.indices.copy(),
            self.values.copy(),
        )

    def to_columnar(self):
        """Column-major view (col_indptr, col_rows, col_vals), entries sorted
        by (value, row) within each column; the layout the split kernels expect."""
        row_of = np.repeat(np.arange(self.n_rows, dtype=np.int64), np.diff(self.indptr))
        order = np.lexsort((row_of, self.values, self.indices))
        col_rows = row_of[order]
        col_vals = self.values[order]
        counts = np.bincount(self.indices, minlength=self.n_cols)
        col_indptr = np.zeros(self.n_cols + 1, dtype=np.int64)
        np.cumsum(counts, out=col_indptr[1:])
        return col_indptr, col_rows, col_vals


def hstack(left: SparseMatrix, right: SparseMatrix) -> SparseMatrix:
    """Concatenate two CSR matrices column-wise (same row count)."""
    if left.n_rows != right.n_rows:
        raise FeatureError("hstack row counts differ")
    n_rows = left.n_rows
    indptr = np.zeros(n_rows + 1, dtype=np.int64)
    nnz = left.nnz + right.nnz
    indices = np.empty(nnz, dtype=np.int64)
    values = np.empty(nnz, dtype=np.float64)
    pos = 0
    for r in range(n_rows):
        ls, le = left.indptr[r], left.indptr[r + 1]
        rs, re = right.indptr[r], right.indptr[r + 1]
        k = (le - ls) + (re - rs)
        indices[pos : pos + (le - ls)] = left.indices[ls:le]
        values[pos : pos + (le - ls)] = left.values[ls:le]
        indices[pos + (le - ls) : pos + k] = right.indices[rs:re] + left.n_cols
        values[pos + (le - ls) : pos + k] = right.values[rs:re]
        pos += k
        indptr[r + 1] = pos
    return SparseMatrix(n_rows, left.n_cols + right.n_cols, indptr, indices, values).validate()
