import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from facelink.evaluation import (MetricsReport, compute_metrics, evaluate, reduce_alignment,
                                 run_alignment_experiment, run_grid, run_sampling_experiment,
                                 sample_photos, write_heatmap, write_report_csv, grid_rows,
                                 read_report_csv)
from facelink.ingest import GroundTruth
from facelink.matching import MatchResult, NoPairReason
from facelink.pipeline import FaceProfileMatcher
from facelink.synthgen import SynthConfig, generate_dataset
from oracles import exact_prf


def _results(pairs, unmatched=()):
    return [MatchResult(s, t, 0.1) for s, t in pairs] + \
        [MatchResult.no_pair(s, NoPairReason.ABOVE_THRESHOLD) for s in unmatched]


def test_all_correct():
    truth = GroundTruth(frozenset({("a", "x"), ("b", "y")}))
    r = compute_metrics(_results([("a", "x"), ("b", "y")]), truth)
    assert (r.precision, r.recall, r.f1) == (1.0, 1.0, 1.0)


def test_zero_matches():
    truth = GroundTruth(frozenset({("a", "x")}))
    r = compute_metrics(_results([], ["a", "b"]), truth)
    assert (r.K, r.precision, r.recall, r.f1) == (0, 0.0, 0.0, 0.0)


def test_large_count_arithmetic():
    r = MetricsReport.from_counts(100, 76, 3193)
    assert r.precision == pytest.approx(0.76, abs=1e-12)
    assert r.recall == pytest.approx(76 / 3193, abs=1e-12)
    assert r.recall == pytest.approx(0.0238, abs=5e-5)


def test_duplicate_sources_rejected():
    with pytest.raises(ValueError):
        compute_metrics(_results([("a", "x"), ("a", "y")]), GroundTruth())


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 30), st.integers(0, 30), st.integers(0, 30), st.randoms(use_true_random=False))
def test_metric_invariants(n_correct, n_wrong, n_missed, rnd):
    truth = GroundTruth(frozenset((f"s{i}", f"t{i}") for i in range(n_correct + n_missed)))
    results = _results([(f"s{i}", f"t{i}") for i in range(n_correct)] +
                       [(f"w{i}", f"t{i}") for i in range(n_wrong)],
                       [f"s{i}" for i in range(n_correct, n_correct + n_missed)])
    r = compute_metrics(results, truth)
    rnd.shuffle(results)
    assert compute_metrics(results, truth) == r
    assert 0 <= r.precision <= 1 and 0 <= r.recall <= 1 and 0 <= r.f1 <= 1
    assert (r.f1 == 0) == (r.K_p == 0)
    if r.V:
        assert (r.f1 == 1) == (r.K == r.K_p == r.V)
    p, rec, f = exact_prf(r.K, r.K_p, r.V)
    assert abs(r.precision - float(p)) <= 1e-12
    assert abs(r.recall - float(rec)) <= 1e-12
    assert abs(r.f1 - float(f)) <= 1e-12


@pytest.fixture(scope="module")
def small_ds():
    return generate_dataset(SynthConfig(n_persons=30, photos_per_profile=(8, 20), seed=5,
                                        n_distractors=5, owner_face_fraction=0.6))


def test_grid_shape_and_single_cell(small_ds):
    ds = small_ds
    cells = run_grid(ds.source, ds.target, ds.truth, [0, 30, 60, 80, 100, 150],
                     [0.35, 0.45, 0.55, 0.65, 0.75])
    assert len(cells) == 30
    (one,) = run_grid(ds.source, ds.target, ds.truth, [80], [0.65])
    assert one.report == evaluate(ds.source, ds.target, ds.truth, FaceProfileMatcher())


def test_grid_rejects_empty_axes(small_ds):
    with pytest.raises(ValueError):
        run_grid(small_ds.source, small_ds.target, small_ds.truth, [], [0.5])


def test_sampling_counts_and_full_fraction(small_ds):
    ds = small_ds
    rows = run_sampling_experiment(ds.source, ds.target, ds.truth, [0.1], repetitions=10, seed=3)
    assert len(rows) == 10 and all(r.key == "0.1" for r in rows)
    full = evaluate(ds.source, ds.target, ds.truth)
    rows = run_sampling_experiment(ds.source, ds.target, ds.truth, [1.0], repetitions=3)
    assert all(r.report == full for r in rows)


def test_sampling_reproducible_and_jobs_independent(small_ds):
    ds = small_ds
    a = run_sampling_experiment(ds.source, ds.target, ds.truth, [0.3, 0.6], 3, seed=9)
    b = run_sampling_experiment(ds.source, ds.target, ds.truth, [0.3, 0.6], 3, seed=9, n_jobs=4)
    assert a == b


def test_sampling_rejects_bad_fraction(small_ds):
    with pytest.raises(ValueError):
        run_sampling_experiment(small_ds.source, small_ds.target, small_ds.truth, [0.0], 1)
    with pytest.raises(ValueError):
        run_sampling_experiment(small_ds.source, small_ds.target, small_ds.truth, [1.5], 1)


def test_sample_photos_keeps_whole_photos(small_ds):
    rng = np.random.default_rng(0)
    sampled = sample_photos(small_ds.source, 0.25, rng)
    for pid, recs in small_ds.source.records.items():
        photos = {r.photo_id for r in recs}
        kept = {r.photo_id for r in sampled[pid]}
        assert len(kept) == max(1, int(np.ceil(round(0.25 * len(photos), 9))))
        assert sorted(sampled[pid], key=lambda r: r.sort_key()) == \
            [r for r in recs if r.photo_id in kept]


def test_sample_size_rounding():
    # ceil(0.1 * 30) must be 3, not 4 from the float product 3.0000000000000004
    from facelink.evaluation import _robust_ceil
    assert _robust_ceil(0.1 * 30) == 3 and _robust_ceil(0.05 * 3) == 1


def test_alignment_reduction(small_ds):
    ds = small_ds
    rng = np.random.default_rng(1)
    reduced, truth = reduce_alignment(ds.target, ds.truth, 0.5, rng)
    assert truth.V == ds.truth.V // 2
    assert truth.pairs <= ds.truth.pairs
    dropped = {t for _, t in ds.truth.pairs} - {t for _, t in truth.pairs}
    assert not dropped & set(reduced.profile_ids)
    assert len(reduced) == len(ds.target) - len(dropped)


def test_alignment_full_rate_is_baseline(small_ds):
    ds = small_ds
    (row,) = run_alignment_experiment(ds.source, ds.target, ds.truth, [1.0])
    assert row.report == evaluate(ds.source, ds.target, ds.truth)


def test_report_csv(tmp_path, small_ds):
    ds = small_ds
    cells = run_grid(ds.source, ds.target, ds.truth, [0, 80], [0.5, 0.65])
    write_report_csv(grid_rows(cells), tmp_path / "g.csv")
    rows = read_report_csv(tmp_path / "g.csv")
    assert list(rows[0]) == ["experiment", "fraction_or_rate_or_cell", "repetition", "K", "K_p",
                             "V", "precision", "recall", "f1"]
    assert rows[3]["fraction_or_rate_or_cell"] == "q=80;t=0.65"
    assert float(rows[3]["f1"]) == cells[3].report.f1
    write_heatmap(cells, tmp_path / "h.csv")
    assert (tmp_path / "h.csv").read_text().splitlines()[0] == \
        "quality,threshold_distance,precision,recall,f1"
