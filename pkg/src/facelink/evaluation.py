"""Precision/recall/F1 over match decisions and the experiment drivers.

Precision is the share of emitted links that are correct and recall the share
of true pairs that were found. All counts are taken per source profile.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable, List, NamedTuple, Optional, Sequence

import numpy as np
from joblib import Parallel, delayed
from sklearn.base import clone

from ._validation import check_fraction, check_positive
from .ingest import GroundTruth, ProfileCollection
from .matching import MatchResult, match_networks
from .pipeline import FaceProfileMatcher

REPORT_COLUMNS = ["experiment", "fraction_or_rate_or_cell", "repetition",
                  "K", "K_p", "V", "precision", "recall", "f1"]


@dataclass(frozen=True)
class MetricsReport:
    K: int
    K_p: int
    V: int
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_counts(cls, K: int, K_p: int, V: int) -> "MetricsReport":
        if not 0 <= K_p <= K or K_p > V:
            raise ValueError(f"inconsistent counts K={K}, K_p={K_p}, V={V}")
        precision = K_p / K if K else 0.0
        recall = K_p / V if V else 0.0
        f1 = 2 * K_p / (K + V) if K_p else 0.0
        return cls(K, K_p, V, precision, recall, f1)


def compute_metrics(results: Iterable[MatchResult], truth: GroundTruth) -> MetricsReport:
    """Score match decisions against the ground-truth pairs."""
    seen = set()
    K = K_p = 0
    for r in results:
        if r.source_profile_id in seen:
            raise ValueError(f"duplicate source id {r.source_profile_id!r} in results")
        seen.add(r.source_profile_id)
        if r.matched:
            K += 1
            if (r.source_profile_id, r.target_profile_id) in truth.pairs:
                K_p += 1
    return MetricsReport.from_counts(K, K_p, truth.V)


class ReportRow(NamedTuple):
    experiment: str
    key: str
    repetition: int
    report: MetricsReport


class GridCell(NamedTuple):
    quality: int
    threshold_distance: float
    report: MetricsReport


def _matcher(matcher: Optional[FaceProfileMatcher]) -> FaceProfileMatcher:
    return FaceProfileMatcher() if matcher is None else matcher


def evaluate(source: ProfileCollection, target: ProfileCollection, truth: GroundTruth,
             matcher: Optional[FaceProfileMatcher] = None) -> MetricsReport:
    """One full pipeline run scored against ``truth``."""
    m = clone(_matcher(matcher)).fit(target)
    return compute_metrics(m.predict(source), truth)


def run_grid(source: ProfileCollection, target: ProfileCollection, truth: GroundTruth,
             qualities: Sequence[int], thresholds: Sequence[float],
             matcher: Optional[FaceProfileMatcher] = None) -> List[GridCell]:
    """Quality x threshold-distance sweep, one report per cell.

    Defining vectors depend only on the quality axis, so they are built once
    per quality and reused across thresholds; every cell is still the result
    of a complete pipeline run at its settings.
    """
    if not qualities or not thresholds:
        raise ValueError("grid axes must be non-empty")
    base = _matcher(matcher)
    cells = []
    for q in qualities:
        builder = clone(base).set_params(quality=int(q))
        src_dv = builder.transform(source)
        tgt_dv = builder.transform(target)
        for t in thresholds:
            check_positive(t, "threshold_distance")
            results = match_networks(src_dv, tgt_dv, float(t), unique=bool(base.unique),
                                     n_jobs=base.n_jobs)
            cells.append(GridCell(int(q), float(t), compute_metrics(results, truth)))
    return cells


def _robust_ceil(x: float) -> int:
    # 0.1 * 30 evaluates to 3.0000000000000004
    return math.ceil(round(x, 9))


def _robust_floor(x: float) -> int:
    return math.floor(round(x, 9))


def sample_photos(collection: ProfileCollection, fraction: float,
                  rng: np.random.Generator) -> ProfileCollection:
    """Keep ``ceil(fraction * n_photos)`` random photos (at least one) per profile.

    Every face on a kept photo is kept.
    """
    fraction = check_fraction(fraction, "fraction")
    sampled = {}
    for pid, recs in collection.records.items():
        photos = sorted({r.photo_id for r in recs})
        if not photos:
            sampled[pid] = []
            continue
        size = max(1, _robust_ceil(fraction * len(photos)))
        if size >= len(photos):
            sampled[pid] = list(recs)
            continue
        idx = rng.choice(len(photos), size=size, replace=False)
        keep = {photos[i] for i in idx.tolist()}
        sampled[pid] = [r for r in recs if r.photo_id in keep]
    return collection.replace_records(sampled)


def _sampling_job(source, target, truth, matcher, seed, fi, fraction, rep):
    rng = np.random.default_rng([seed, fi, rep])
    src = sample_photos(source, fraction, rng)
    tgt = sample_photos(target, fraction, rng)
    return evaluate(src, tgt, truth, matcher)


def run_sampling_experiment(source: ProfileCollection, target: ProfileCollection,
                            truth: GroundTruth, fractions: Sequence[float],
                            repetitions: int = 10, seed: int = 0,
                            matcher: Optional[FaceProfileMatcher] = None,
                            n_jobs: int = 1) -> List[ReportRow]:
    """Rerun the pipeline on random photo subsets of both networks.

    Each (fraction, repetition) draws from its own generator seeded by
    ``(seed, fraction index, repetition)``, so results do not depend on
    ``n_jobs`` or on which other fractions are requested before it.
    """
    fractions = [check_fraction(f, "fraction") for f in fractions]
    check_positive(repetitions, "repetitions", integer=True)
    base = _matcher(matcher)
    jobs = [(fi, f, rep) for fi, f in enumerate(fractions) for rep in range(repetitions)]
    reports = Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(_sampling_job)(source, target, truth, base, seed, fi, f, rep)
        for fi, f, rep in jobs)
    return [ReportRow("sample", _fmt(f), rep, r) for (fi, f, rep), r in zip(jobs, reports)]


def reduce_alignment(target: ProfileCollection, truth: GroundTruth, rate: float,
                     rng: np.random.Generator):
    """Keep ``floor(rate * V)`` random true pairs; drop the targets of the others."""
    rate = check_fraction(rate, "rate")
    pairs = sorted(truth.pairs)
    n_keep = _robust_floor(rate * len(pairs))
    if n_keep >= len(pairs):
        return target, truth
    idx = rng.choice(len(pairs), size=n_keep, replace=False)
    kept = [pairs[i] for i in sorted(idx.tolist())]
    dropped_targets = {t for _, t in pairs} - {t for _, t in kept}
    reduced = target.subset(pid for pid in target.profile_ids if pid not in dropped_targets)
    return reduced, GroundTruth(frozenset(kept))


def run_alignment_experiment(source: ProfileCollection, target: ProfileCollection,
                             truth: GroundTruth, alignment_rates: Sequence[float],
                             seed: int = 0, matcher: Optional[FaceProfileMatcher] = None,
                             repetitions: int = 1) -> List[ReportRow]:
    """Synthetically shrink the overlap between the networks and re-score.

    Defining vectors do not depend on which profiles are present, so both
    networks are processed once and only the matching step is repeated.
    """
    rates = [check_fraction(r, "rate") for r in alignment_rates]
    check_positive(repetitions, "repetitions", integer=True)
    base = _matcher(matcher)
    builder = clone(base)
    src_dv = builder.transform(source)
    tgt_dv = {dv.profile_id: dv for dv in builder.transform(target)}
    rows = []
    for ri, rate in enumerate(rates):
        for rep in range(repetitions):
            rng = np.random.default_rng([seed, ri, rep])
            reduced, sub_truth = reduce_alignment(target, truth, rate, rng)
            candidates = [tgt_dv[pid] for pid in reduced.profile_ids]
            results = match_networks(src_dv, candidates, base.threshold_distance,
                                     unique=bool(base.unique), n_jobs=base.n_jobs)
            rows.append(ReportRow("align", _fmt(rate), rep, compute_metrics(results, sub_truth)))
    return rows


def _fmt(x) -> str:
    return repr(float(x)) if isinstance(x, float) else str(x)


def grid_rows(cells: Sequence[GridCell]) -> List[ReportRow]:
    return [ReportRow("grid", f"q={c.quality};t={_fmt(c.threshold_distance)}", 0, c.report)
            for c in cells]


def write_report_csv(rows: Sequence[ReportRow], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPORT_COLUMNS)
        for row in rows:
            r = row.report
            w.writerow([row.experiment, row.key, row.repetition, r.K, r.K_p, r.V,
                        repr(r.precision), repr(r.recall), repr(r.f1)])


def read_report_csv(path) -> List[dict]:
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def write_heatmap(cells: Sequence[GridCell], path) -> None:
    """Long-form heat-map data: one (quality, threshold, P, R, F1) line per cell."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["quality", "threshold_distance", "precision", "recall", "f1"])
        for c in cells:
            w.writerow([c.quality, repr(c.threshold_distance), repr(c.report.precision),
                        repr(c.report.recall), repr(c.report.f1)])
