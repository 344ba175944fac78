import json
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from facelink.core import FaceRecord
from facelink.ingest import (GroundTruth, IngestError, ProfileCollection, load_collection,
                             load_face_records, load_ground_truth, load_names,
                             write_collection, write_face_records, write_ground_truth)


def _write_lines(path, lines):
    path.write_text("".join(json.dumps(x) + "\n" for x in lines), encoding="utf-8")


def _face(pid, photo, vec, px=100, avatar=False):
    return {"profile_id": pid, "photo_id": photo, "embedding": vec,
            "pixel_count": px, "is_avatar": avatar}


def test_two_lines_one_profile(tmp_path):
    p = tmp_path / "faces.jsonl"
    _write_lines(p, [{"dimension": 2}, _face("a", "p1", [0, 1]), _face("a", "p2", [1, 0])])
    coll = load_face_records(p, 2)
    assert len(coll["a"]) == 2
    assert coll.dimension == 2


def test_empty_file(tmp_path):
    p = tmp_path / "faces.jsonl"
    p.write_text("")
    assert len(load_face_records(p, 512)) == 0


def test_dimension_mismatch_names_line_and_lengths(tmp_path):
    p = tmp_path / "faces.jsonl"
    _write_lines(p, [{"dimension": 512}, _face("a", "p1", [0.0] * 512),
                     _face("a", "p2", [0.0] * 511)])
    with pytest.raises(IngestError, match=r":3: .*511.*512"):
        load_face_records(p, 512)


def test_header_disagreeing_with_expected_dim(tmp_path):
    p = tmp_path / "faces.jsonl"
    _write_lines(p, [{"dimension": 4}])
    with pytest.raises(IngestError, match="expected 8"):
        load_face_records(p, 8)


@pytest.mark.parametrize("line, message", [
    ("{not json", "malformed JSON"),
    (json.dumps({"profile_id": "a", "photo_id": "p"}), "missing key"),
    (json.dumps(_face("a", "p", [0.0, None])), "bad embedding"),
    (json.dumps(_face("a", "p", [0.0, 1.0], px=-3)), "pixel_count"),
    (json.dumps(_face("", "p", [0.0, 1.0])), "profile_id"),
])
def test_malformed_lines_report_line_number(tmp_path, line, message):
    p = tmp_path / "faces.jsonl"
    p.write_text(json.dumps({"dimension": 2}) + "\n" + line + "\n")
    with pytest.raises(IngestError, match=rf":2: .*{message}"):
        load_face_records(p)


def test_non_finite_value_rejected(tmp_path):
    p = tmp_path / "faces.jsonl"
    p.write_text('{"dimension": 2}\n{"profile_id": "a", "photo_id": "p", "embedding": [NaN, 1]}\n')
    with pytest.raises(IngestError, match="non-finite"):
        load_face_records(p)


def test_is_avatar_defaults_false(tmp_path):
    p = tmp_path / "faces.jsonl"
    _write_lines(p, [{"dimension": 1}, {"profile_id": "a", "photo_id": "p", "embedding": [1]}])
    assert load_face_records(p)["a"][0].is_avatar is False


def test_ground_truth(tmp_path):
    p = tmp_path / "truth.tsv"
    p.write_text("a\tx\nb\ty\nc\tz\n")
    assert load_ground_truth(p).V == 3
    p.write_text("a\tx\na\ty\n")
    with pytest.raises(IngestError, match="duplicate source id 'a'"):
        load_ground_truth(p)
    p.write_text("a\tx\nb\tx\n")
    with pytest.raises(IngestError, match="duplicate target id 'x'"):
        load_ground_truth(p)


def test_ground_truth_type_rejects_duplicates():
    with pytest.raises(ValueError):
        GroundTruth(frozenset({("a", "x"), ("a", "y")}))


def test_names_and_empty_profiles(tmp_path):
    (tmp_path / "net").mkdir()
    _write_lines(tmp_path / "net" / "faces.jsonl", [{"dimension": 1}, _face("a", "p", [1.0])])
    (tmp_path / "net" / "names.tsv").write_text("a\tAnna K\nb\tBoris\n", encoding="utf-8")
    coll = load_collection(tmp_path / "net")
    assert coll.names == {"a": "Anna K", "b": "Boris"}
    assert coll["b"] == []
    assert coll.network_id == "net"


def test_profile_without_faces_needs_a_name():
    with pytest.raises(ValueError):
        ProfileCollection("n", {"a": []}, {}, 2)


records_strategy = st.lists(
    st.tuples(st.sampled_from(["a", "b", "c", "dd"]), st.sampled_from(["p1", "p2", "p3"]),
              st.lists(st.floats(-5, 5, allow_nan=False, width=32), min_size=3, max_size=3),
              st.integers(0, 10_000), st.booleans()),
    max_size=25)


@settings(max_examples=60, deadline=None)
@given(records_strategy, st.randoms(use_true_random=False))
def test_round_trip_and_order_insensitivity(tmp_path_factory, rows, rnd):
    recs = [FaceRecord(pid, ph, vec, px, av) for pid, ph, vec, px, av in rows]
    coll = ProfileCollection.from_records("net", recs, dimension=3)
    d = tmp_path_factory.mktemp("rt")
    write_face_records(coll, d / "faces.jsonl")
    assert load_face_records(d / "faces.jsonl", 3, network_id="net") == coll
    lines = (d / "faces.jsonl").read_text().splitlines()
    body = lines[1:]
    rnd.shuffle(body)
    (d / "shuffled.jsonl").write_text("\n".join([lines[0]] + body) + "\n")
    assert load_face_records(d / "shuffled.jsonl", 3, network_id="net") == coll


def test_collection_directory_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    recs = [FaceRecord(f"u{i % 4}", f"p{i}", rng.normal(size=5), int(rng.integers(0, 9000)))
            for i in range(20)]
    coll = ProfileCollection.from_records("net", recs, {"u0": "Иван", "u9": "no faces"}, 5)
    write_collection(coll, tmp_path / "net")
    assert load_collection(tmp_path / "net") == coll
    truth = GroundTruth(frozenset({("u0", "x"), ("u1", "y")}))
    write_ground_truth(truth, tmp_path / "t.tsv")
    assert load_ground_truth(tmp_path / "t.tsv") == truth
    assert load_names(tmp_path / "net" / "names.tsv")["u0"] == "Иван"


def test_missing_directory_message_names_path(tmp_path):
    with pytest.raises(FileNotFoundError, match="nowhere"):
        load_collection(tmp_path / "nowhere")
