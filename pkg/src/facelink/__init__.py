"""Match user profiles across two social networks by the faces in their photos."""

__version__ = "0.1.0"

from .clustering import ClusterSet, cluster_single_linkage
from .core import DefiningVector, DimensionMismatchError, FaceRecord, l2_distance, mean_vector
from .evaluation import (MetricsReport, compute_metrics, run_alignment_experiment, run_grid,
                         run_sampling_experiment)
from .filtering import Anchor, FaceFilter, build_anchor, filter_anchor, filter_quality
from .ingest import (GroundTruth, ProfileCollection, load_collection, load_face_records,
                     load_ground_truth)
from .matching import MatchResult, NoPairReason, match_networks
from .names import NameMatcher, levenshtein, match_by_name, normalize_name
from .owner import OwnerConfig, avatar_defining_vector, identify_owner
from .pipeline import DefiningVectorBuilder, FaceProfileMatcher
from .synthgen import SynthConfig, generate_dataset

__all__ = [
    "Anchor", "ClusterSet", "DefiningVector", "DefiningVectorBuilder", "DimensionMismatchError",
    "FaceFilter", "FaceProfileMatcher", "FaceRecord", "GroundTruth", "MatchResult",
    "MetricsReport", "NameMatcher", "NoPairReason", "OwnerConfig", "ProfileCollection",
    "SynthConfig", "avatar_defining_vector", "build_anchor", "cluster_single_linkage",
    "compute_metrics", "filter_anchor", "filter_quality", "generate_dataset", "identify_owner",
    "l2_distance", "levenshtein", "load_collection", "load_face_records", "load_ground_truth", "match_by_name",
    "match_networks", "mean_vector", "normalize_name", "run_alignment_experiment", "run_grid",
    "run_sampling_experiment",
]
