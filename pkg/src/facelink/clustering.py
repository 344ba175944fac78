"""Per-profile single-linkage clustering with a flat distance cut.

Cutting a single-linkage dendrogram at ``threshold`` gives the connected
components of the graph joining every pair of faces at distance
``<= threshold``; that is how the partition is computed here.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial.distance import pdist, squareform

from ._validation import check_positive
from .core import FaceRecord

DEFAULT_CLUSTER_THRESHOLD = 0.8


@dataclass(frozen=True)
class ClusterSet:
    """Partition of input indices, largest cluster first.

    Clusters of equal size are ordered by their smallest member index.
    """

    clusters: Tuple[Tuple[int, ...], ...]
    threshold: float

    def __len__(self):
        return len(self.clusters)

    def __iter__(self):
        return iter(self.clusters)

    def __getitem__(self, i):
        return self.clusters[i]

    @property
    def sizes(self) -> List[int]:
        return [len(c) for c in self.clusters]

    def labels(self, n: int) -> np.ndarray:
        out = np.full(n, -1, dtype=np.intp)
        for label, members in enumerate(self.clusters):
            out[list(members)] = label
        return out


def _as_matrix(items) -> np.ndarray:
    if isinstance(items, np.ndarray):
        return np.asarray(items, dtype=np.float64)
    items = list(items)
    if not items:
        return np.empty((0, 0))
    if isinstance(items[0], FaceRecord):
        return np.vstack([r.embedding for r in items])
    return np.asarray(items, dtype=np.float64)


def components_from_labels(labels: np.ndarray) -> Tuple[Tuple[int, ...], ...]:
    """Group indices by label and sort groups by (size desc, smallest index asc)."""
    groups = {}
    for idx, lab in enumerate(labels.tolist()):
        groups.setdefault(lab, []).append(idx)
    ordered = sorted(groups.values(), key=lambda g: (-len(g), g[0]))
    return tuple(tuple(g) for g in ordered)


def cluster_single_linkage(records: Sequence, threshold: float = DEFAULT_CLUSTER_THRESHOLD
                           ) -> ClusterSet:
    """Single-linkage flat clustering of ``records`` at ``threshold``.

    ``records`` may be a list of :class:`FaceRecord`, a list of vectors, or an
    ``(n, d)`` array. Pairs at distance exactly ``threshold`` are merged.
    """
    check_positive(threshold, "threshold")
    X = _as_matrix(records)
    n = X.shape[0]
    if n == 0:
        return ClusterSet((), float(threshold))
    if n == 1:
        return ClusterSet(((0,),), float(threshold))
    adjacency = squareform(pdist(X) <= threshold)
    _, labels = connected_components(csr_matrix(adjacency), directed=False)
    return ClusterSet(components_from_labels(labels), float(threshold))
