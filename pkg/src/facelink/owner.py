"""Owner identification: turn a profile's clusters into its defining vector."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._validation import check_positive
from .clustering import ClusterSet
from .core import DefiningVector, FaceRecord, mean_vector


@dataclass(frozen=True)
class OwnerConfig:
    k_clusters: int = 2
    min_cluster_size: int = 2
    avatars_only: bool = False

    def __post_init__(self):
        check_positive(self.k_clusters, "k_clusters", integer=True)
        check_positive(self.min_cluster_size, "min_cluster_size", integer=True)


def _profile_id(records, fallback):
    return records[0].profile_id if records else fallback


def identify_owner(records: Sequence[FaceRecord], clusters: ClusterSet,
                   cfg: OwnerConfig = OwnerConfig(), profile_id: str = "") -> DefiningVector:
    """Defining vector from the ``k_clusters`` largest clusters.

    Rules, applied in order:

    * no clusters: no owner;
    * a single cluster: average every face of the profile;
    * every cluster is a singleton: no owner;
    * largest cluster smaller than ``min_cluster_size``: no owner;
    * otherwise average the union of the ``k_clusters`` largest clusters,
      each face weighted equally.
    """
    pid = _profile_id(records, profile_id)
    sizes = clusters.sizes
    if not sizes:
        return DefiningVector.no_owner(pid)
    if len(sizes) == 1:
        chosen = list(range(len(records)))
    elif sizes[0] == 1:
        # sizes are sorted descending, so a singleton head means all singletons
        return DefiningVector.no_owner(pid)
    elif sizes[0] < cfg.min_cluster_size:
        return DefiningVector.no_owner(pid)
    else:
        chosen = [i for members in clusters.clusters[:cfg.k_clusters] for i in members]
    emb = np.vstack([records[i].embedding for i in chosen])
    return DefiningVector(pid, mean_vector(emb), len(chosen))


def avatar_defining_vector(records: Sequence[FaceRecord], profile_id: str = "") -> DefiningVector:
    """Mean of the avatar faces, skipping owner identification altogether."""
    pid = _profile_id(records, profile_id)
    avatars = [r.embedding for r in records if r.is_avatar]
    if not avatars:
        return DefiningVector.no_owner(pid)
    return DefiningVector(pid, mean_vector(np.vstack(avatars)), len(avatars))
