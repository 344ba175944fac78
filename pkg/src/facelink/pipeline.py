"""Estimators composing filter -> cluster -> owner -> match.

``DefiningVectorBuilder`` is a transformer from a :class:`ProfileCollection`
to one :class:`DefiningVector` per profile. ``FaceProfileMatcher`` fits on the
target network and predicts links for a source network. Both follow the
scikit-learn parameter conventions, so ``clone``/``set_params`` work for
parameter sweeps.
"""
from __future__ import annotations

from typing import List, Sequence, Union

from joblib import Parallel, delayed
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_non_negative, check_positive
from .clustering import DEFAULT_CLUSTER_THRESHOLD, cluster_single_linkage
from .core import DefiningVector, FaceRecord
from .filtering import filter_anchor, filter_quality
from .ingest import GroundTruth, ProfileCollection
from .matching import DEFAULT_THRESHOLD_DISTANCE, MatchResult, match_networks
from .owner import OwnerConfig, avatar_defining_vector, identify_owner

ProfilesOrVectors = Union[ProfileCollection, Sequence[DefiningVector]]

_BUILDER_PARAMS = ("quality", "anchors", "cluster_threshold", "k_clusters",
                   "min_cluster_size", "avatars_only", "n_jobs")


class DefiningVectorBuilder(TransformerMixin, BaseEstimator):
    """Build the defining vector of every profile in a collection.

    Parameters
    ----------
    quality : int, default=80
        Minimum face side length; faces with fewer than ``quality**2`` pixels
        are discarded.
    anchors : sequence of Anchor, default=()
        Faces within an anchor's radius are discarded.
    cluster_threshold : float, default=0.8
        Single-linkage cut distance.
    k_clusters : int, default=2
        Number of largest clusters averaged into the defining vector.
    min_cluster_size : int, default=2
        Profiles whose largest cluster is smaller get no owner.
    avatars_only : bool, default=False
        Average avatar faces only, skipping clustering.
    n_jobs : int, default=1
        Worker threads; the output does not depend on it.
    """

    def __init__(self, quality=80, anchors=(), cluster_threshold=DEFAULT_CLUSTER_THRESHOLD,
                 k_clusters=2, min_cluster_size=2, avatars_only=False, n_jobs=1):
        self.quality = quality
        self.anchors = anchors
        self.cluster_threshold = cluster_threshold
        self.k_clusters = k_clusters
        self.min_cluster_size = min_cluster_size
        self.avatars_only = avatars_only
        self.n_jobs = n_jobs

    def _validate(self) -> OwnerConfig:
        check_non_negative(self.quality, "quality", integer=True)
        check_positive(self.cluster_threshold, "cluster_threshold")
        return OwnerConfig(self.k_clusters, self.min_cluster_size, bool(self.avatars_only))

    def fit(self, X=None, y=None):
        self._validate()
        return self

    def filter(self, records: Sequence[FaceRecord]) -> List[FaceRecord]:
        return filter_anchor(filter_quality(records, self.quality), tuple(self.anchors))

    def defining_vector(self, records: Sequence[FaceRecord], profile_id: str,
                        cfg: OwnerConfig = None) -> DefiningVector:
        cfg = cfg or self._validate()
        # canonical order keeps cluster tie-breaks independent of input order
        kept = self.filter(sorted(records, key=FaceRecord.sort_key))
        if cfg.avatars_only:
            return avatar_defining_vector(kept, profile_id)
        clusters = cluster_single_linkage(kept, self.cluster_threshold)
        return identify_owner(kept, clusters, cfg, profile_id)

    def transform(self, X: ProfileCollection) -> List[DefiningVector]:
        if not isinstance(X, ProfileCollection):
            raise TypeError(f"expected a ProfileCollection, got {type(X).__name__}")
        cfg = self._validate()
        items = list(X.records.items())
        if self.n_jobs == 1 or len(items) < 2:
            return [self.defining_vector(recs, pid, cfg) for pid, recs in items]
        return Parallel(n_jobs=self.n_jobs, prefer="threads")(
            delayed(self.defining_vector)(recs, pid, cfg) for pid, recs in items)


def _as_vectors(X: ProfilesOrVectors, builder: DefiningVectorBuilder) -> List[DefiningVector]:
    if isinstance(X, ProfileCollection):
        return builder.transform(X)
    vectors = list(X)
    if not all(isinstance(v, DefiningVector) for v in vectors):
        raise TypeError("expected a ProfileCollection or a sequence of DefiningVector")
    return vectors


class FaceProfileMatcher(DefiningVectorBuilder):
    """Link source profiles to target profiles by defining-vector distance.

    Accepts every :class:`DefiningVectorBuilder` parameter, plus

    threshold_distance : float, default=0.65
        Largest accepted distance between linked defining vectors.
    unique : bool, default=False
        Greedy one-to-one assignment instead of independent per-source argmin.

    ``fit`` and ``predict`` take either a :class:`ProfileCollection` or a
    precomputed list of :class:`DefiningVector`.
    """

    def __init__(self, quality=80, anchors=(), cluster_threshold=DEFAULT_CLUSTER_THRESHOLD,
                 k_clusters=2, min_cluster_size=2, avatars_only=False,
                 threshold_distance=DEFAULT_THRESHOLD_DISTANCE, unique=False, n_jobs=1):
        super().__init__(quality=quality, anchors=anchors, cluster_threshold=cluster_threshold,
                         k_clusters=k_clusters, min_cluster_size=min_cluster_size,
                         avatars_only=avatars_only, n_jobs=n_jobs)
        self.threshold_distance = threshold_distance
        self.unique = unique

    def builder(self) -> DefiningVectorBuilder:
        return DefiningVectorBuilder(**{k: getattr(self, k) for k in _BUILDER_PARAMS})

    def fit(self, X: ProfilesOrVectors, y=None):
        check_positive(self.threshold_distance, "threshold_distance")
        self._validate()
        self.target_vectors_ = _as_vectors(X, self)
        return self

    def predict(self, X: ProfilesOrVectors) -> List[MatchResult]:
        check_is_fitted(self, "target_vectors_")
        return match_networks(_as_vectors(X, self), self.target_vectors_,
                              self.threshold_distance, unique=bool(self.unique),
                              n_jobs=self.n_jobs)

    def score(self, X: ProfilesOrVectors, y: GroundTruth) -> float:
        """F1 of the predicted links against ``y``."""
        from .evaluation import compute_metrics

        return compute_metrics(self.predict(X), y).f1
