"""Quality and anchor filters applied to face records before clustering."""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, List, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from ._validation import check_non_negative, check_positive
from .core import DimensionMismatchError, FaceRecord, as_embedding, distances_to, mean_vector

DEFAULT_ANCHOR_RADIUS = 0.8


@dataclass(frozen=True, eq=False)
class Anchor:
    """A point in embedding space standing for a group of faces to discard.

    Records within ``radius`` (inclusive) of ``vector`` are removed.
    """

    vector: np.ndarray
    radius: float = DEFAULT_ANCHOR_RADIUS
    label: str = "children"

    def __post_init__(self):
        check_positive(self.radius, "radius")
        object.__setattr__(self, "vector", as_embedding(self.vector))
        object.__setattr__(self, "radius", float(self.radius))

    def __eq__(self, other):
        if not isinstance(other, Anchor):
            return NotImplemented
        return (self.label == other.label and self.radius == other.radius
                and np.array_equal(self.vector, other.vector))

    def __hash__(self):
        return hash((self.label, self.radius, self.vector.tobytes()))

    def to_json(self) -> dict:
        return {"label": self.label, "radius": self.radius, "vector": self.vector.tolist()}


def build_anchor(child_faces, radius: float = DEFAULT_ANCHOR_RADIUS,
                 label: str = "children") -> Anchor:
    """Anchor at the element-wise mean of ``child_faces``."""
    faces = [f.embedding if isinstance(f, FaceRecord) else f for f in child_faces]
    if len(faces) == 0:
        raise ValueError("cannot build an anchor from an empty set of faces")
    return Anchor(mean_vector(faces), radius, label)


def load_anchor(path) -> Anchor:
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    missing = [k for k in ("label", "radius", "vector") if k not in obj]
    if missing:
        raise ValueError(f"{path}: anchor file missing key(s): {', '.join(missing)}")
    return Anchor(obj["vector"], obj["radius"], obj["label"])


def write_anchor(anchor: Anchor, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(anchor.to_json(), fh)
        fh.write("\n")


def filter_quality(records: Iterable[FaceRecord], q: int) -> List[FaceRecord]:
    """Keep faces whose crop has at least ``q * q`` pixels.

    ``q`` is the minimum side length, so ``q=80`` keeps crops of 6400 pixels
    and up.
    """
    check_non_negative(q, "q", integer=True)
    min_pixels = q * q
    return [r for r in records if r.pixel_count >= min_pixels]


def anchor_mask(embeddings: np.ndarray, anchors: Sequence[Anchor]) -> np.ndarray:
    """Boolean mask of rows lying outside every anchor's closed ball."""
    keep = np.ones(embeddings.shape[0], dtype=bool)
    for anchor in anchors:
        if embeddings.shape[0] and embeddings.shape[1] != anchor.vector.shape[0]:
            raise DimensionMismatchError(embeddings.shape[1], anchor.vector.shape[0],
                                         f"anchor {anchor.label!r}")
        if embeddings.shape[0]:
            keep &= distances_to(anchor.vector, embeddings) > anchor.radius
    return keep


def filter_anchor(records: Iterable[FaceRecord], anchors: Sequence[Anchor]) -> List[FaceRecord]:
    records = list(records)
    if not records or not anchors:
        return records
    emb = np.vstack([r.embedding for r in records])
    keep = anchor_mask(emb, anchors)
    return [r for r, k in zip(records, keep) if k]


class FaceFilter(TransformerMixin, BaseEstimator):
    """Stateless transformer chaining the quality and anchor filters.

    Parameters
    ----------
    quality : int, default=80
        Minimum face side length in pixels; faces need ``quality**2`` pixels.
    anchors : sequence of Anchor, default=()
        Faces inside any anchor's radius are dropped.
    """

    def __init__(self, quality=80, anchors=()):
        self.quality = quality
        self.anchors = anchors

    def fit(self, X=None, y=None):
        check_non_negative(self.quality, "quality", integer=True)
        return self

    def transform(self, X):
        return filter_anchor(filter_quality(X, self.quality), tuple(self.anchors))
