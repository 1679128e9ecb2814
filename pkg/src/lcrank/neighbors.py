"""Exact k-nearest-neighbor structure over the input features.

Each point's neighbor list starts with the point itself and continues with
the remaining nearest points under squared Euclidean distance, ties broken
by smaller index. The lists are the sparse realization of the per-point
0/1 selection matrices used by the ranking regularizer: column j of the
dense selector for point i is the standard basis vector of its j-th
neighbor, so selecting entries from a score vector (or columns from a code
matrix) equals multiplying by that selector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .io import DataSet


@dataclass
class NeighborhoodIndex:
    """Ordered neighbor lists, one row per point, each of length k."""

    k: int
    neighbor_ids: np.ndarray  # shape (n, k), integer indices

    def __post_init__(self):
        self.neighbor_ids = np.asarray(self.neighbor_ids, dtype=np.int64)
        n, k = self.neighbor_ids.shape
        if k != self.k:
            raise ValueError(f"lists have width {k}, expected k={self.k}")
        for i in range(n):
            row = self.neighbor_ids[i]
            if row[0] != i:
                raise ValueError(f"list {i} must start with the point itself")
            if len(set(row.tolist())) != k:
                raise ValueError(f"list {i} contains repeated indices")
            if row.min() < 0 or row.max() >= n:
                raise ValueError(f"list {i} has out-of-range indices")

    @property
    def n(self) -> int:
        return self.neighbor_ids.shape[0]

    def dense_selector(self, i: int) -> np.ndarray:
        """Materialize the (n, k) 0/1 selection matrix of point i."""
        H = np.zeros((self.n, self.k))
        H[self.neighbor_ids[i], np.arange(self.k)] = 1.0
        return H

    def memberships(self) -> list[list[int]]:
        """For each point, the neighborhoods that contain it.

        Entry p lists every i with p in the neighbor list of i; the coding
        step uses it to collect the local predictors that constrain p.
        """
        owners: list[list[int]] = [[] for _ in range(self.n)]
        for i in range(self.n):
            for p in self.neighbor_ids[i]:
                owners[p].append(i)
        return owners


def build_knn(data: DataSet, k: int) -> NeighborhoodIndex:
    """Brute-force exact kNN under squared Euclidean distance.

    List i starts with i itself; the remaining k-1 slots hold the nearest
    other points ordered by non-decreasing distance, ties broken by smaller
    index (stable, deterministic).
    """
    n = data.n
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    X = data.points
    sq_norms = np.einsum("ij,ij->i", X, X)
    lists = np.empty((n, k), dtype=np.int64)
    for i in range(n):
        dist = sq_norms - 2.0 * (X @ X[i]) + sq_norms[i]
        order = np.argsort(dist, kind="stable")
        order = order[order != i]
        lists[i, 0] = i
        lists[i, 1:] = order[: k - 1]
    return NeighborhoodIndex(k=k, neighbor_ids=lists)


def gather_local_scores(f: np.ndarray, index: NeighborhoodIndex, i: int) -> np.ndarray:
    """Scores of point i's neighbors, in neighbor order (length k)."""
    f = np.asarray(f, dtype=float)
    if f.shape != (index.n,):
        raise ValueError(f"score vector has shape {f.shape}, expected ({index.n},)")
    if not 0 <= i < index.n:
        raise IndexError(f"point index {i} out of range")
    return f[index.neighbor_ids[i]]


def gather_local_codes(S: np.ndarray, index: NeighborhoodIndex, i: int) -> np.ndarray:
    """Code columns of point i's neighbors, in neighbor order (m, k)."""
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[1] != index.n:
        raise ValueError(f"code matrix has shape {S.shape}, expected (m, {index.n})")
    if not 0 <= i < index.n:
        raise IndexError(f"point index {i} out of range")
    return S[:, index.neighbor_ids[i]]
