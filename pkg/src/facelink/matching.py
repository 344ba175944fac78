"""Cross-network linking by nearest defining vector."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence

import numpy as np
from joblib import Parallel, delayed

from ._validation import check_positive
from .core import DefiningVector, DimensionMismatchError, distances_to

DEFAULT_THRESHOLD_DISTANCE = 0.65
_CHUNK = 256


class NoPairReason(str, enum.Enum):
    NO_OWNER_SOURCE = "NO_OWNER_SOURCE"
    NO_CANDIDATE = "NO_CANDIDATE"
    ABOVE_THRESHOLD = "ABOVE_THRESHOLD"
    # only produced by one-to-one matching
    TARGET_TAKEN = "TARGET_TAKEN"


@dataclass(frozen=True)
class MatchResult:
    """Decision for one source profile: a linked target or a reason for none."""

    source_profile_id: str
    target_profile_id: Optional[str] = None
    distance: Optional[float] = None
    reason: Optional[NoPairReason] = None

    def __post_init__(self):
        if (self.target_profile_id is None) == (self.reason is None):
            raise ValueError("a MatchResult is either matched or carries a no-pair reason")

    @property
    def matched(self) -> bool:
        return self.target_profile_id is not None

    @classmethod
    def no_pair(cls, source_id: str, reason: NoPairReason) -> "MatchResult":
        return cls(source_id, None, None, NoPairReason(reason))


class _TargetTable:
    """Targets with an owner, sorted by profile id, as one contiguous matrix."""

    def __init__(self, targets: Iterable[DefiningVector]):
        present = sorted((t for t in targets if t.has_owner), key=lambda t: t.profile_id)
        self.ids = [t.profile_id for t in present]
        if present:
            self.matrix = np.ascontiguousarray(np.vstack([t.vector for t in present]))
        else:
            self.matrix = np.empty((0, 0))
        self.sq_norms = np.einsum("ij,ij->i", self.matrix, self.matrix)

    def __len__(self):
        return len(self.ids)

    @property
    def dimension(self):
        return self.matrix.shape[1] if len(self) else None


def _approx_sq_distances(S: np.ndarray, table: _TargetTable):
    s_sq = np.einsum("ij,ij->i", S, S)
    d2 = s_sq[:, None] + table.sq_norms[None, :] - 2.0 * (S @ table.matrix.T)
    np.maximum(d2, 0.0, out=d2)
    # bound on the rounding error of the expansion above, per row
    tol = 1e-9 * (s_sq[:, None] + table.sq_norms.max()) + 1e-12
    return d2, tol


def _nearest_chunk(S: np.ndarray, table: _TargetTable):
    """Exact argmin over targets for every row of ``S``.

    The BLAS expansion only screens candidates; distances are then recomputed
    exactly for every target within rounding error of the row minimum, so the
    winner (and lexicographic tie-break) matches a brute-force scan.
    """
    d2, tol = _approx_sq_distances(S, table)
    row_min = d2.min(axis=1)
    out = []
    for i in range(S.shape[0]):
        cand = np.flatnonzero(d2[i] <= row_min[i] + tol[i, 0])
        exact = distances_to(S[i], table.matrix[cand])
        best = int(np.argmin(exact))  # first minimum = smallest target id
        out.append((int(cand[best]), float(exact[best])))
    return out


def _within_chunk(S: np.ndarray, table: _TargetTable, threshold: float):
    """All (row, target index, exact distance) with distance <= threshold."""
    d2, tol = _approx_sq_distances(S, table)
    pairs = []
    for i in range(S.shape[0]):
        cand = np.flatnonzero(d2[i] <= threshold * threshold + tol[i, 0])
        if cand.size:
            exact = distances_to(S[i], table.matrix[cand])
            for j, d in zip(cand.tolist(), exact.tolist()):
                if d <= threshold:
                    pairs.append((i, j, d))
    return pairs


def _check_dims(sources: List[DefiningVector], table: _TargetTable):
    if not len(table):
        return
    for s in sources:
        if s.vector.shape[0] != table.dimension:
            raise DimensionMismatchError(s.vector.shape[0], table.dimension,
                                         f"source profile {s.profile_id!r}")


def _chunks(n):
    return [(lo, min(lo + _CHUNK, n)) for lo in range(0, n, _CHUNK)]


def match_networks(source: Sequence[DefiningVector], target: Sequence[DefiningVector],
                   threshold_distance: float = DEFAULT_THRESHOLD_DISTANCE,
                   unique: bool = False, n_jobs: int = 1) -> List[MatchResult]:
    """Link every source profile to its nearest target defining vector.

    Each source is decided independently: the closest target (ties broken by
    the smallest target id) is accepted when its distance is at most
    ``threshold_distance``. Several sources may pick the same target unless
    ``unique`` is set, in which case pairs are assigned greedily by ascending
    distance and each target is used once.
    """
    check_positive(threshold_distance, "threshold_distance")
    table = _TargetTable(target)
    active = [s for s in source if s.has_owner]
    _check_dims(active, table)

    decided = {}
    if active and len(table):
        S = np.ascontiguousarray(np.vstack([s.vector for s in active]))
        spans = _chunks(len(active))
        if unique:
            parts = Parallel(n_jobs=n_jobs, prefer="threads")(
                delayed(_within_chunk)(S[lo:hi], table, threshold_distance) for lo, hi in spans)
            decided = _greedy_assign(active, table, spans, parts)
        else:
            parts = Parallel(n_jobs=n_jobs, prefer="threads")(
                delayed(_nearest_chunk)(S[lo:hi], table) for lo, hi in spans)
            for (lo, _), part in zip(spans, parts):
                for offset, (j, dist) in enumerate(part):
                    sid = active[lo + offset].profile_id
                    if dist <= threshold_distance:
                        decided[sid] = MatchResult(sid, table.ids[j], dist)
                    else:
                        decided[sid] = MatchResult.no_pair(sid, NoPairReason.ABOVE_THRESHOLD)

    results = []
    for s in source:
        if not s.has_owner:
            results.append(MatchResult.no_pair(s.profile_id, NoPairReason.NO_OWNER_SOURCE))
        elif not len(table):
            results.append(MatchResult.no_pair(s.profile_id, NoPairReason.NO_CANDIDATE))
        else:
            results.append(decided[s.profile_id])
    return results


def _greedy_assign(active, table, spans, parts):
    pairs = []
    for (lo, _), part in zip(spans, parts):
        for i, j, d in part:
            pairs.append((d, active[lo + i].profile_id, table.ids[j]))
    pairs.sort()
    had_candidate = {sid for _, sid, _ in pairs}
    taken_targets, decided = set(), {}
    for d, sid, tid in pairs:
        if sid in decided or tid in taken_targets:
            continue
        decided[sid] = MatchResult(sid, tid, d)
        taken_targets.add(tid)
    for s in active:
        if s.profile_id not in decided:
            reason = (NoPairReason.TARGET_TAKEN if s.profile_id in had_candidate
                      else NoPairReason.ABOVE_THRESHOLD)
            decided[s.profile_id] = MatchResult.no_pair(s.profile_id, reason)
    return decided


def write_matches(results: Sequence[MatchResult], path) -> None:
    """Tab-separated: source id, target id or ``-``, distance or ``-``, reason."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for r in results:
            if r.matched:
                fh.write(f"{r.source_profile_id}\t{r.target_profile_id}\t{r.distance!r}\tMATCHED\n")
            else:
                fh.write(f"{r.source_profile_id}\t-\t-\t{r.reason.value}\n")


def read_matches(path) -> List[MatchResult]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\r\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 4:
                raise ValueError(f"{path}:{lineno}: expected 4 tab-separated columns")
            sid, tid, dist, reason = parts
            if reason == "MATCHED":
                out.append(MatchResult(sid, tid, float(dist)))
            else:
                out.append(MatchResult.no_pair(sid, NoPairReason(reason)))
    return out
