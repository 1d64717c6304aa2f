"""Agglomerative hierarchical clustering via the Lance-Williams recurrence.

Supports the seven classical linkage methods (single, complete, average,
weighted, centroid, median, ward), cophenetic distance extraction, and the
cophenetic correlation coefficient (CPCC).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distance import CondensedMatrix, decode_index, pair_index, pearson

CLUSTERER_METHODS = ("single", "complete", "average", "weighted", "centroid", "median", "ward")
#: methods used to recover a dendrogram from a consensus matrix in grid runs
RECOVERY_METHODS = ("single", "complete", "average", "centroid", "median", "ward")
#: methods guaranteed to produce nondecreasing merge heights
MONOTONE_METHODS = ("single", "complete", "average", "weighted", "ward")

# these run the recurrence on squared dissimilarities and report sqrt heights
_SQUARED_METHODS = frozenset(("centroid", "median", "ward"))


def lw_coefficients(method: str, size_i, size_j, size_k):
    """Lance-Williams coefficients (alpha_i, alpha_j, beta, gamma).

    d(k, i+j) = alpha_i*d(k,i) + alpha_j*d(k,j) + beta*d(i,j)
                + gamma*|d(k,i) - d(k,j)|

    Sizes may be scalars or arrays (broadcast); for centroid/median/ward the
    recurrence operates on squared dissimilarities.
    """
    ni = np.asarray(size_i, dtype=np.float64)
    nj = np.asarray(size_j, dtype=np.float64)
    nk = np.asarray(size_k, dtype=np.float64)
    if method == "single":
        return 0.5, 0.5, 0.0, -0.5
    if method == "complete":
        return 0.5, 0.5, 0.0, 0.5
    if method == "average":
        s = ni + nj
        return ni / s, nj / s, 0.0, 0.0
    if method == "weighted":
        return 0.5, 0.5, 0.0, 0.0
    if method == "centroid":
        s = ni + nj
        return ni / s, nj / s, -(ni * nj) / (s * s), 0.0
    if method == "median":
        return 0.5, 0.5, -0.25, 0.0
    if method == "ward":
        t = ni + nj + nk
        return (ni + nk) / t, (nj + nk) / t, -nk / t, 0.0
    raise ValueError(f"unknown linkage method {method!r}")


@dataclass(frozen=True)
class Dendrogram:
    """Ordered merge list over ``n_leaves`` items.

    Leaves carry ids 0..n-1; merge t creates cluster id n+t. ``left`` is the
    child containing the lowest-numbered leaf. Heights are nonnegative but may
    contain inversions for centroid/median linkage.
    """

    n_leaves: int
    left: np.ndarray
    right: np.ndarray
    height: np.ndarray
    size: np.ndarray

    def __post_init__(self):
        n = self.n_leaves
        if n < 2:
            raise ValueError(f"dendrogram needs at least 2 leaves, got {n}")
        left = np.ascontiguousarray(self.left, dtype=np.int64)
        right = np.ascontiguousarray(self.right, dtype=np.int64)
        height = np.ascontiguousarray(self.height, dtype=np.float64)
        size = np.ascontiguousarray(self.size, dtype=np.int64)
        if not (left.shape == right.shape == height.shape == size.shape == (n - 1,)):
            raise ValueError(f"dendrogram over {n} leaves needs exactly {n - 1} merges")
        if not np.all(np.isfinite(height)) or (height < 0).any():
            raise ValueError("merge heights must be finite and nonnegative")
        children = np.concatenate([left, right])
        if np.unique(children).shape[0] != children.shape[0]:
            raise ValueError("a cluster id is consumed more than once")
        if children.min() < 0 or children.max() > 2 * n - 3:
            raise ValueError("merge references an id that does not exist yet")
        all_sizes = np.concatenate([np.ones(n, dtype=np.int64), size])
        for t in range(n - 1):
            if left[t] >= n + t or right[t] >= n + t:
                raise ValueError(f"merge {t} references a not-yet-created cluster")
            if size[t] != all_sizes[left[t]] + all_sizes[right[t]]:
                raise ValueError(f"merge {t} has inconsistent size")
        if size[-1] != n:
            raise ValueError("root size must equal the leaf count")
        for arr in (left, right, height, size):
            arr.setflags(write=False)
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "right", right)
        object.__setattr__(self, "height", height)
        object.__setattr__(self, "size", size)

    @property
    def merges(self) -> list[tuple[int, int, float, int]]:
        """Merge records as (left_id, right_id, height, size) tuples."""
        return [
            (int(l), int(r), float(h), int(s))
            for l, r, h, s in zip(self.left, self.right, self.height, self.size)
        ]


def format_dendrogram(d: Dendrogram) -> str:
    """Dump format: one merge per line, ``left right height size``."""
    lines = [
        f"{int(l)} {int(r)} {h:.17g} {int(s)}"
        for l, r, h, s in zip(d.left, d.right, d.height, d.size)
    ]
    return "\n".join(lines) + "\n"


def agglomerate(dist: CondensedMatrix, method: str) -> Dendrogram:
    """Cluster a condensed dissimilarity matrix into a dendrogram.

    At each step the active pair with minimal current dissimilarity is merged;
    exact ties are broken by the lexicographically smallest (min_id, max_id)
    cluster-id pair. Remaining dissimilarities are updated with the
    Lance-Williams recurrence; centroid/median/ward run on squared
    dissimilarities and report square-rooted heights.

    Parameters
    ----------
    dist : CondensedMatrix
        Pairwise dissimilarities over n >= 2 items.
    method : str
        One of CLUSTERER_METHODS.

    Returns
    -------
    Dendrogram
        Exactly n - 1 merges in execution order.
    """
    if method not in CLUSTERER_METHODS:
        raise ValueError(f"unknown linkage method {method!r}")
    n = dist.n
    if n < 2:
        raise ValueError(f"need at least 2 items to cluster, got {n}")
    squared = method in _SQUARED_METHODS
    work = dist.data.astype(np.float64, copy=True)
    if squared:
        work *= work

    cluster_id = np.arange(n, dtype=np.int64)
    sizes = np.ones(n, dtype=np.int64)
    min_member = np.arange(n, dtype=np.int64)
    active = np.ones(n, dtype=bool)

    out_left = np.empty(n - 1, dtype=np.int64)
    out_right = np.empty(n - 1, dtype=np.int64)
    out_height = np.empty(n - 1, dtype=np.float64)
    out_size = np.empty(n - 1, dtype=np.int64)

    for t in range(n - 1):
        value = work.min()
        ties = np.flatnonzero(work == value)
        if ties.shape[0] == 1:
            x, y = decode_index(int(ties[0]), n)
            x, y = int(x), int(y)
        else:
            ti, tj = decode_index(ties, n)
            ida = np.minimum(cluster_id[ti], cluster_id[tj])
            idb = np.maximum(cluster_id[ti], cluster_id[tj])
            best = np.lexsort((idb, ida))[0]
            x, y = int(ti[best]), int(tj[best])

        id_x, id_y = int(cluster_id[x]), int(cluster_id[y])
        nx, ny = int(sizes[x]), int(sizes[y])
        if min_member[x] <= min_member[y]:
            out_left[t], out_right[t] = id_x, id_y
        else:
            out_left[t], out_right[t] = id_y, id_x
        out_height[t] = np.sqrt(max(value, 0.0)) if squared else max(value, 0.0)
        out_size[t] = nx + ny

        others = np.flatnonzero(active)
        others = others[(others != x) & (others != y)]
        if others.shape[0]:
            kx = pair_index(np.minimum(others, x), np.maximum(others, x), n)
            ky = pair_index(np.minimum(others, y), np.maximum(others, y), n)
            dki = work[kx]
            dkj = work[ky]
            ai, aj, beta, gamma = lw_coefficients(method, nx, ny, sizes[others])
            work[ky] = ai * dki + aj * dkj + beta * value + gamma * np.abs(dki - dkj)
            work[kx] = np.inf
        work[pair_index(x, y, n)] = np.inf

        # merged cluster takes slot y; slot x retires
        active[x] = False
        cluster_id[y] = n + t
        sizes[y] = nx + ny
        min_member[y] = min(min_member[x], min_member[y])

    return Dendrogram(n, out_left, out_right, out_height, out_size)


def cophenetic(d: Dendrogram) -> CondensedMatrix:
    """Cophenetic distances: entry (i, j) is the height of the merge where
    leaves i and j first join (the height of their lowest common ancestor).
    """
    n = d.n_leaves
    out = np.empty(n * (n - 1) // 2, dtype=np.float64)
    members: list[np.ndarray | None] = [np.array([i], dtype=np.int64) for i in range(n)]
    for t in range(n - 1):
        a = members[d.left[t]]
        b = members[d.right[t]]
        ga = np.repeat(a, b.shape[0])
        gb = np.tile(b, a.shape[0])
        lo = np.minimum(ga, gb)
        hi = np.maximum(ga, gb)
        out[pair_index(lo, hi, n)] = d.height[t]
        members.append(np.concatenate([a, b]))
        members[d.left[t]] = None
        members[d.right[t]] = None
    return CondensedMatrix(n, out)


def cpcc(a: CondensedMatrix, b: CondensedMatrix) -> float:
    """Cophenetic correlation coefficient: Pearson correlation of two condensed
    matrices over the same items. Values near 1 mean close agreement.
    """
    if a.n != b.n:
        raise ValueError(f"size mismatch: {a.n} vs {b.n}")
    return pearson(a.data, b.data)
