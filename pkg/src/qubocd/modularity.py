"""Modularity matrix construction, labeling scores and thresholding."""
from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .graph_io import Graph, degree_vector

__all__ = [
    "CommunityLabeling",
    "ModularityMatrix",
    "canonicalize",
    "make_labeling",
    "matrix_to_csv",
    "matrix_to_triples",
    "modularity_matrix",
    "modularity_score",
    "threshold_matrix",
    "two_community_score",
]


@dataclass(frozen=True, eq=False)
class ModularityMatrix:
    """Dense symmetric ``B = A - g g^T / 2m`` together with its ``2m``."""

    B: np.ndarray
    two_m: float

    def __post_init__(self):
        self.B.setflags(write=False)

    @property
    def n(self) -> int:
        return self.B.shape[0]


@dataclass(frozen=True)
class CommunityLabeling:
    """Canonical node -> community map and its modularity.

    ``repairs`` counts nodes whose community had to be chosen by the
    decoder because the raw bit vector did not select exactly one.
    """

    labels: tuple[int, ...]
    k_used: int
    score: float
    repairs: int = 0

    def communities(self) -> list[list[int]]:
        groups: list[list[int]] = [[] for _ in range(self.k_used)]
        for node, c in enumerate(self.labels):
            groups[c].append(node)
        return groups


def modularity_matrix(g: Graph) -> ModularityMatrix:
    deg = degree_vector(g)
    two_m = float(deg.sum())
    if two_m <= 0:
        raise ValueError("modularity undefined for 2m = 0 (graph has no edges)")
    B = g.adjacency() - np.outer(deg, deg) / two_m
    return ModularityMatrix(B=B, two_m=two_m)


def _as_labels(bm: ModularityMatrix, labels: Sequence[int]) -> np.ndarray:
    arr = np.asarray(labels)
    if arr.ndim != 1 or arr.shape[0] != bm.n:
        raise ValueError(f"expected {bm.n} labels, got shape {arr.shape}")
    return arr


def modularity_score(bm: ModularityMatrix, labels: Sequence[int]) -> float:
    """``(1/2m) * sum_{i,j} B_ij [c_i == c_j]`` over all ordered pairs, diagonal included."""
    arr = _as_labels(bm, labels)
    same = arr[:, None] == arr[None, :]
    return float(np.where(same, bm.B, 0.0).sum() / bm.two_m)


def two_community_score(bm: ModularityMatrix, spins: Sequence[int]) -> float:
    s = _as_labels(bm, spins)
    if not np.all(np.isin(s, (-1, 1))):
        raise ValueError("spins must be -1 or +1")
    return modularity_score(bm, s > 0)


def canonicalize(labels: Sequence[int]) -> tuple[int, ...]:
    """Renumber community ids ``0..k-1`` by first appearance."""
    mapping: dict = {}
    return tuple(mapping.setdefault(c, len(mapping)) for c in np.asarray(labels).tolist())


def make_labeling(bm: ModularityMatrix, labels: Sequence[int], repairs: int = 0) -> CommunityLabeling:
    canon = canonicalize(labels)
    return CommunityLabeling(
        labels=canon,
        k_used=len(set(canon)),
        score=modularity_score(bm, canon),
        repairs=repairs,
    )


def threshold_matrix(bm: ModularityMatrix, t: float) -> tuple[ModularityMatrix, int]:
    """Zero off-diagonal entries with ``|B_ij| < t``.

    Returns the thresholded matrix (same ``2m``) and the number of nonzero
    upper-triangle off-diagonal entries it keeps. Solutions found on the
    thresholded problem should still be scored with the original matrix.
    """
    if t < 0:
        raise ValueError("threshold must be >= 0")
    B = bm.B.copy()
    off = ~np.eye(bm.n, dtype=bool)
    B[off & (np.abs(B) < t)] = 0.0
    kept = int(np.count_nonzero(B[np.triu_indices(bm.n, 1)]))
    return ModularityMatrix(B=B, two_m=bm.two_m), kept


def matrix_to_csv(bm: ModularityMatrix) -> str:
    buf = io.StringIO()
    np.savetxt(buf, bm.B, fmt="%.17g", delimiter=",")
    return buf.getvalue()


def matrix_to_triples(bm: ModularityMatrix) -> str:
    """Nonzero upper-triangle entries as ``i j value`` lines, ``2m`` in a header comment."""
    rows, cols = np.nonzero(np.triu(bm.B))
    lines = [f"# n={bm.n} two_m={bm.two_m:.17g}"]
    lines += [f"{i} {j} {bm.B[i, j]:.17g}" for i, j in zip(rows.tolist(), cols.tolist())]
    return "\n".join(lines) + "\n"
