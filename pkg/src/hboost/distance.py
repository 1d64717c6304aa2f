"""Condensed pairwise-distance storage, the Euclidean metric, and Pearson correlation.

A condensed matrix stores the strict upper triangle of a symmetric n x n
dissimilarity matrix row-major in a flat vector of length n(n-1)/2.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from .dataset import DataMatrix


@dataclass(frozen=True)
class CondensedMatrix:
    """Upper-triangle pairwise dissimilarity store over ``n`` items.

    Pair (i, j) with i < j lives at flat index i*n - i(i+1)/2 + (j-i-1).
    Entries must be finite and nonnegative. Immutable after construction.
    """

    n: int
    data: np.ndarray

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"item count must be >= 1, got {self.n}")
        data = np.ascontiguousarray(self.data, dtype=np.float64)
        expected = self.n * (self.n - 1) // 2
        if data.ndim != 1 or data.shape[0] != expected:
            raise ValueError(
                f"condensed data for n={self.n} must have length {expected}, "
                f"got shape {np.shape(self.data)}"
            )
        if not np.all(np.isfinite(data)):
            raise ValueError("condensed data contains non-finite entries")
        if data.size and data.min() < 0.0:
            raise ValueError("condensed data contains negative entries")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    def __getitem__(self, pair):
        i, j = pair
        return float(self.data[condensed_index(min(i, j), max(i, j), self.n)])


def condensed_index(i: int, j: int, n: int) -> int:
    """Flat index of pair (i, j), requiring 0 <= i < j < n."""
    if not 0 <= i < j < n:
        raise ValueError(f"need 0 <= i < j < n, got i={i}, j={j}, n={n}")
    return i * n - i * (i + 1) // 2 + (j - i - 1)


def pair_index(i, j, n):
    """Vectorized condensed_index over arrays; assumes i < j elementwise."""
    i = np.asarray(i, dtype=np.int64)
    j = np.asarray(j, dtype=np.int64)
    return i * n - i * (i + 1) // 2 + (j - i - 1)


def decode_index(k, n):
    """Inverse of condensed_index: flat index (scalar or array) -> (i, j)."""
    k = np.asarray(k, dtype=np.int64)
    # row starts: offset of pair (i, i+1) for each i
    starts = np.arange(n - 1, dtype=np.int64) * n - (
        np.arange(n - 1, dtype=np.int64) * (np.arange(n - 1) + 1) // 2
    )
    i = np.searchsorted(starts, k, side="right") - 1
    j = k - starts[i] + i + 1
    return i, j


def pairwise_euclidean(d: DataMatrix | np.ndarray) -> CondensedMatrix:
    """Condensed L2 distances between all row pairs of ``d``.

    Accepts a DataMatrix or a plain (N, F) array. Computed with the plain
    difference formula sqrt(sum((x - y)^2)) in double precision, row block by
    row block, for deterministic results.
    """
    x = np.asarray(getattr(d, "values", d), dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValueError(f"need a 2-D array with at least 2 rows, got shape {x.shape}")
    n = x.shape[0]
    out = np.empty(n * (n - 1) // 2, dtype=np.float64)
    pos = 0
    for i in range(n - 1):
        diff = x[i + 1 :] - x[i]
        block = n - 1 - i
        np.sqrt(np.einsum("ij,ij->i", diff, diff), out=out[pos : pos + block])
        pos += block
    return CondensedMatrix(n, out)


def subsample_distances(full: CondensedMatrix, indices) -> CondensedMatrix:
    """Condensed distances among ``indices``, gathered from the full matrix.

    Item p of the result corresponds to indices[p]; gathering is exactly
    equivalent to recomputing distances on the selected rows.
    """
    idx = np.asarray(indices, dtype=np.int64)
    m = idx.shape[0]
    pi, pj = np.triu_indices(m, 1)
    a, b = idx[pi], idx[pj]
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    if lo.size and (lo == hi).any():
        raise ValueError("subsample indices must be distinct")
    return CondensedMatrix(m, full.data[pair_index(lo, hi, full.n)])


def to_square(m: CondensedMatrix) -> np.ndarray:
    """Dense symmetric n x n matrix with zero diagonal."""
    n = m.n
    sq = np.zeros((n, n), dtype=np.float64)
    i, j = np.triu_indices(n, 1)
    sq[i, j] = m.data
    sq[j, i] = m.data
    return sq


def pearson(x, y) -> float:
    """Sample Pearson correlation of two equal-length vectors, clamped to [-1, 1].

    Returns 0.0 when either vector is constant (or shorter than 2); raises on
    length mismatch.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"length mismatch: {x.shape} vs {y.shape}")
    if x.size < 2 or x.min() == x.max() or y.min() == y.max():
        return 0.0
    xc = x - x.mean()
    yc = y - y.mean()
    denom = np.sqrt((xc @ xc) * (yc @ yc))
    if denom == 0.0:
        return 0.0
    return float(min(1.0, max(-1.0, (xc @ yc) / denom)))


def write_condensed(m: CondensedMatrix, path) -> None:
    """Binary dump: n as little-endian uint64, then the data as little-endian f64."""
    with open(path, "wb") as fh:
        fh.write(struct.pack("<Q", m.n))
        fh.write(m.data.astype("<f8").tobytes())


def read_condensed(path) -> CondensedMatrix:
    """Restore a matrix written by write_condensed."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 8:
        raise ValueError(f"{path}: truncated condensed matrix file")
    n = struct.unpack("<Q", raw[:8])[0]
    data = np.frombuffer(raw[8:], dtype="<f8")
    expected = n * (n - 1) // 2
    if data.shape[0] != expected:
        raise ValueError(
            f"{path}: expected {expected} entries for n={n}, found {data.shape[0]}"
        )
    return CondensedMatrix(int(n), data.astype(np.float64))
