"""Domain types and exact vector arithmetic shared across the package.

Embeddings are kept as read-only float64 numpy arrays. They are never
re-normalized: the distance thresholds used downstream are expressed in the
embedder's native scale.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

DEFAULT_DIMENSION = 512


class DimensionMismatchError(ValueError):
    """Raised when two embeddings (or an embedding and a dataset) disagree in length."""

    def __init__(self, left: int, right: int, context: str = ""):
        self.left = left
        self.right = right
        prefix = f"{context}: " if context else ""
        super().__init__(f"{prefix}dimension mismatch ({left} != {right})")


def as_embedding(values, dimension: Optional[int] = None) -> np.ndarray:
    """Convert ``values`` to a read-only 1-D float64 embedding.

    Raises ``ValueError`` for non-finite entries and
    :class:`DimensionMismatchError` when ``dimension`` is given and differs.
    """
    arr = np.array(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"embedding must be one-dimensional, got shape {arr.shape}")
    if dimension is not None and arr.shape[0] != dimension:
        raise DimensionMismatchError(arr.shape[0], dimension)
    if not np.all(np.isfinite(arr)):
        raise ValueError("embedding contains non-finite values")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class FaceRecord:
    """One detected face on one photo of one profile."""

    profile_id: str
    photo_id: str
    embedding: np.ndarray
    pixel_count: int = 0
    is_avatar: bool = False

    def __post_init__(self):
        if not self.profile_id:
            raise ValueError("profile_id must be non-empty")
        if not self.photo_id:
            raise ValueError("photo_id must be non-empty")
        if self.pixel_count < 0:
            raise ValueError(f"pixel_count must be >= 0, got {self.pixel_count}")
        emb = self.embedding
        if not (isinstance(emb, np.ndarray) and not emb.flags.writeable
                and emb.dtype == np.float64):
            object.__setattr__(self, "embedding", as_embedding(emb))

    @property
    def dimension(self) -> int:
        return int(self.embedding.shape[0])

    def sort_key(self):
        return (self.photo_id, self.pixel_count, self.is_avatar, self.embedding.tobytes())

    def __eq__(self, other):
        if not isinstance(other, FaceRecord):
            return NotImplemented
        return (self.profile_id == other.profile_id
                and self.photo_id == other.photo_id
                and self.pixel_count == other.pixel_count
                and self.is_avatar == other.is_avatar
                and np.array_equal(self.embedding, other.embedding))

    def __hash__(self):
        return hash((self.profile_id, self.photo_id, self.pixel_count,
                     self.is_avatar, self.embedding.tobytes()))


@dataclass(frozen=True, eq=False)
class DefiningVector:
    """Owner representation of one profile.

    ``vector is None`` is the "unable to set the owner" marker; in that case
    ``support_count`` is 0.
    """

    profile_id: str
    vector: Optional[np.ndarray] = None
    support_count: int = 0

    def __post_init__(self):
        if self.vector is None:
            if self.support_count != 0:
                raise ValueError("a NO_OWNER defining vector must have support_count 0")
        else:
            if self.support_count < 1:
                raise ValueError("a defining vector needs support_count >= 1")
            if self.vector.flags.writeable:
                object.__setattr__(self, "vector", as_embedding(self.vector))

    @classmethod
    def no_owner(cls, profile_id: str) -> "DefiningVector":
        return cls(profile_id, None, 0)

    @property
    def has_owner(self) -> bool:
        return self.vector is not None

    def __eq__(self, other):
        if not isinstance(other, DefiningVector):
            return NotImplemented
        if self.profile_id != other.profile_id or self.support_count != other.support_count:
            return False
        if self.vector is None or other.vector is None:
            return self.vector is None and other.vector is None
        return np.array_equal(self.vector, other.vector)

    def __repr__(self):
        if self.vector is None:
            return f"DefiningVector({self.profile_id!r}, NO_OWNER)"
        return (f"DefiningVector({self.profile_id!r}, dim={self.vector.shape[0]}, "
                f"n={self.support_count})")


def _check_pair(a: np.ndarray, b: np.ndarray):
    if a.shape[-1] != b.shape[-1]:
        raise DimensionMismatchError(a.shape[-1], b.shape[-1], "l2_distance")


def l2_distance(a, b) -> float:
    """Euclidean distance between two embeddings."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    _check_pair(a, b)
    return float(distances_to(a, b[None, :])[0])


def distances_to(point, matrix) -> np.ndarray:
    """Euclidean distances from ``point`` to every row of ``matrix``.

    Uses the same difference-then-square evaluation as :func:`l2_distance`, so
    equal inputs give bit-identical distances regardless of row position.
    """
    point = np.asarray(point, dtype=np.float64)
    matrix = np.asarray(matrix, dtype=np.float64)
    _check_pair(point, matrix)
    diff = matrix - point
    return np.sqrt(np.einsum("ij,ij->i", diff, diff))


def mean_vector(vectors: Iterable) -> np.ndarray:
    """Element-wise mean of a non-empty collection of equal-length embeddings."""
    if isinstance(vectors, np.ndarray):
        stack = vectors
        if stack.ndim != 2:
            raise ValueError("expected a 2-D array of embeddings")
    else:
        vectors = list(vectors)
        if not vectors:
            raise ValueError("mean_vector of an empty set is undefined")
        dims = {len(v) for v in vectors}
        if len(dims) > 1:
            lo, hi = sorted(dims)[0], sorted(dims)[-1]
            raise DimensionMismatchError(lo, hi, "mean_vector")
        stack = np.asarray(vectors, dtype=np.float64)
    if stack.shape[0] == 0:
        raise ValueError("mean_vector of an empty set is undefined")
    # summing rows in lexicographic order makes the result independent of input order
    order = np.lexsort(stack.T[::-1])
    out = stack[order].sum(axis=0) / stack.shape[0]
    out.flags.writeable = False
    return out


__all__ = [
    "DEFAULT_DIMENSION",
    "DefiningVector",
    "DimensionMismatchError",
    "FaceRecord",
    "as_embedding",
    "distances_to",
    "l2_distance",
    "mean_vector",
]
