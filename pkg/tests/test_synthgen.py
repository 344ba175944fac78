import filecmp

import numpy as np
import pytest

from facelink.clustering import cluster_single_linkage
from facelink.core import l2_distance
from facelink.evaluation import evaluate
from facelink.filtering import build_anchor
from facelink.pipeline import FaceProfileMatcher
from facelink.synthgen import (CHILD, OWNER, SynthConfig, SynthesisError, generate_dataset,
                               write_dataset)

SMALL = dict(n_persons=40, photos_per_profile=(10, 30))


def _dir_files(d):
    return sorted(p.relative_to(d) for p in d.rglob("*") if p.is_file())


def test_same_seed_same_bytes(tmp_path):
    cfg = SynthConfig(**SMALL, child_face_fraction=0.1, seed=4)
    a, b = generate_dataset(cfg), generate_dataset(cfg)
    assert a.source == b.source and a.target == b.target and a.truth == b.truth
    write_dataset(a, tmp_path / "a", cfg)
    write_dataset(b, tmp_path / "b", cfg)
    files = _dir_files(tmp_path / "a")
    assert files == _dir_files(tmp_path / "b")
    match, mismatch, errors = filecmp.cmpfiles(tmp_path / "a", tmp_path / "b",
                                               [str(f) for f in files], shallow=False)
    assert not mismatch and not errors


def test_different_seed_differs():
    a = generate_dataset(SynthConfig(**SMALL, seed=1))
    b = generate_dataset(SynthConfig(**SMALL, seed=2))
    assert a.source != b.source


def test_noiseless_pipeline_is_perfect():
    cfg = SynthConfig(**SMALL, intra_identity_noise=0.0, alignment_rate=1.0,
                      owner_face_fraction=1.0, child_face_fraction=0.0, seed=8)
    ds = generate_dataset(cfg)
    r = evaluate(ds.source, ds.target, ds.truth, FaceProfileMatcher(quality=0))
    assert (r.precision, r.recall) == (1.0, 1.0)


@pytest.mark.parametrize("rate, n", [(0.66, 300), (1.0, 17), (0.5, 31), (0.03, 100)])
def test_pair_count(rate, n):
    cfg = SynthConfig(n_persons=n, alignment_rate=rate, photos_per_profile=(1, 2))
    assert generate_dataset(cfg).truth.V == int(np.floor(round(rate * n, 9)))


def test_anchor_covers_child_faces():
    ds = generate_dataset(SynthConfig(**SMALL, child_face_fraction=0.2, seed=3))
    anchor = build_anchor(ds.child_faces(), 0.8)
    inside = [l2_distance(r.embedding, anchor.vector) <= anchor.radius for r in ds.child_records]
    assert len(inside) > 100
    assert np.mean(inside) >= 0.95


def test_owner_noise_per_axis():
    sigma = 0.07
    ds = generate_dataset(SynthConfig(n_persons=30, photos_per_profile=(100, 150),
                                      intra_identity_noise=sigma, seed=6))
    resid = np.vstack([r.embedding - ds.centers[r.profile_id]
                       for net, coll in (("source", ds.source), ("target", ds.target))
                       for r in coll.iter_records() if ds.roles[net][r] == OWNER])
    assert resid.shape[0] > 5000
    np.testing.assert_allclose(resid.std(axis=0), sigma, rtol=0.1)
    assert abs(resid.mean()) < 0.01 * sigma * 10


def test_largest_cluster_is_owner_only():
    ds = generate_dataset(SynthConfig(n_persons=150, photos_per_profile=(30, 80),
                                      intra_identity_noise=0.05, identity_separation=1.0,
                                      owner_face_fraction=0.5, seed=12))
    clean = total = 0
    for net, coll in (("source", ds.source), ("target", ds.target)):
        for recs in coll.records.values():
            cs = cluster_single_linkage(recs, 0.8)
            clean += all(ds.roles[net][recs[i]] == OWNER for i in cs[0])
            total += 1
    assert clean / total >= 0.99


def test_children_marked():
    ds = generate_dataset(SynthConfig(**SMALL, child_face_fraction=0.2, seed=2))
    roles = {**ds.roles["source"], **ds.roles["target"]}
    assert ds.child_records == {r for r, role in roles.items() if role == CHILD}


def test_infeasible_separation():
    cfg = SynthConfig(n_persons=200, dimension=2, identity_separation=1.0, friend_pool_size=1,
                      intra_identity_noise=0.01, photos_per_profile=(1, 1))
    with pytest.raises(SynthesisError):
        generate_dataset(cfg)


@pytest.mark.parametrize("bad", [
    dict(alignment_rate=0.0), dict(alignment_rate=1.2), dict(owner_face_fraction=0.0),
    dict(child_face_fraction=1.0), dict(owner_face_fraction=0.9, child_face_fraction=0.2),
    dict(identity_separation=0.1, intra_identity_noise=0.05), dict(photos_per_profile=(5, 2)),
    dict(n_persons=0),
])
def test_config_validation(bad):
    with pytest.raises(ValueError):
        SynthConfig(**bad)


def test_from_dict():
    cfg = SynthConfig.from_dict({"n_persons": 5, "photos_per_profile": [1, 3]})
    assert cfg.photos_per_profile == (1, 3)
    with pytest.raises(ValueError, match="unknown"):
        SynthConfig.from_dict({"n_people": 5})


def test_tuple_unpacking():
    source, target, truth, children = generate_dataset(SynthConfig(**SMALL))
    assert len(source) == 40 and truth.V == len(target)
