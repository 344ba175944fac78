"""Reading and writing face records, names and ground-truth pairs.

File formats
------------
Face records (JSON Lines)::

    {"dimension": 512}
    {"profile_id": "a", "photo_id": "p1", "embedding": [...], "pixel_count": 6400, "is_avatar": false}

One face per line; a photo with several faces yields several lines sharing
``photo_id``. Names and ground truth are UTF-8, tab separated, one record per
line (``profile_id<TAB>raw name`` and ``source_id<TAB>target_id``).
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional

from .core import DEFAULT_DIMENSION, DimensionMismatchError, FaceRecord, as_embedding

FACES_FILE = "faces.jsonl"
NAMES_FILE = "names.tsv"


class IngestError(ValueError):
    """A malformed input file; carries the path and 1-based line number."""

    def __init__(self, path, line: Optional[int], message: str):
        self.path = str(path)
        self.line = line
        where = f"{self.path}:{line}" if line is not None else self.path
        super().__init__(f"{where}: {message}")


class ProfileCollection:
    """All face and name records of one network, keyed by profile id.

    Record lists are stored in a canonical order (photo id, then the remaining
    fields) so that two collections built from permuted inputs compare equal.
    """

    def __init__(self, network_id: str, records: Mapping[str, Iterable[FaceRecord]] = None,
                 names: Mapping[str, str] = None, dimension: int = DEFAULT_DIMENSION):
        self.network_id = network_id
        self.dimension = int(dimension)
        names = dict(names or {})
        canonical: Dict[str, List[FaceRecord]] = {}
        for pid, recs in (records or {}).items():
            recs = list(recs)
            for rec in recs:
                if rec.profile_id != pid:
                    raise ValueError(f"record of profile {rec.profile_id!r} filed under {pid!r}")
                if rec.dimension != self.dimension:
                    raise DimensionMismatchError(rec.dimension, self.dimension,
                                                 f"profile {pid!r}")
            if not recs and pid not in names:
                raise ValueError(f"profile {pid!r} has neither face records nor a name")
            canonical[pid] = sorted(recs, key=FaceRecord.sort_key)
        for pid in names:
            canonical.setdefault(pid, [])
        self.records = {pid: canonical[pid] for pid in sorted(canonical)}
        self.names = {pid: names[pid] for pid in sorted(names)}

    @classmethod
    def from_records(cls, network_id: str, records: Iterable[FaceRecord],
                     names: Mapping[str, str] = None,
                     dimension: Optional[int] = None) -> "ProfileCollection":
        grouped: Dict[str, List[FaceRecord]] = {}
        for rec in records:
            grouped.setdefault(rec.profile_id, []).append(rec)
            if dimension is None:
                dimension = rec.dimension
        return cls(network_id, grouped, names,
                   DEFAULT_DIMENSION if dimension is None else dimension)

    @property
    def profile_ids(self) -> List[str]:
        return list(self.records)

    def __len__(self):
        return len(self.records)

    def __contains__(self, profile_id):
        return profile_id in self.records

    def __getitem__(self, profile_id) -> List[FaceRecord]:
        return self.records[profile_id]

    def iter_records(self):
        for recs in self.records.values():
            yield from recs

    @property
    def n_records(self) -> int:
        return sum(len(r) for r in self.records.values())

    def subset(self, profile_ids: Iterable[str]) -> "ProfileCollection":
        """Collection restricted to ``profile_ids`` (unknown ids are ignored)."""
        keep = set(profile_ids)
        return ProfileCollection(
            self.network_id,
            {pid: recs for pid, recs in self.records.items() if pid in keep},
            {pid: n for pid, n in self.names.items() if pid in keep},
            self.dimension,
        )

    def replace_records(self, records: Mapping[str, List[FaceRecord]]) -> "ProfileCollection":
        """Same profiles and names with each profile's records swapped out.

        Profiles whose new list is empty are kept (with an empty list) so that
        every original profile still gets a decision downstream.
        """
        out = ProfileCollection.__new__(ProfileCollection)
        out.network_id = self.network_id
        out.dimension = self.dimension
        out.names = dict(self.names)
        out.records = {pid: sorted(records.get(pid, []), key=FaceRecord.sort_key)
                       for pid in self.records}
        return out

    def __eq__(self, other):
        if not isinstance(other, ProfileCollection):
            return NotImplemented
        return (self.network_id == other.network_id
                and self.dimension == other.dimension
                and self.names == other.names
                and self.records == other.records)

    def __repr__(self):
        return (f"ProfileCollection({self.network_id!r}, profiles={len(self.records)}, "
                f"faces={self.n_records}, dimension={self.dimension})")


@dataclass(frozen=True)
class GroundTruth:
    """Known (source, target) profile pairs; each id appears at most once per side."""

    pairs: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "pairs", frozenset(self.pairs))
        sources, targets = set(), set()
        for src, tgt in sorted(self.pairs):
            if src in sources:
                raise ValueError(f"duplicate source id {src!r} in ground truth")
            if tgt in targets:
                raise ValueError(f"duplicate target id {tgt!r} in ground truth")
            sources.add(src)
            targets.add(tgt)

    @property
    def V(self) -> int:
        return len(self.pairs)

    def target_of(self) -> Dict[str, str]:
        return dict(self.pairs)

    def __contains__(self, pair):
        return pair in self.pairs

    def __len__(self):
        return len(self.pairs)


def _parse_record(obj, path, lineno, dimension) -> FaceRecord:
    if not isinstance(obj, dict):
        raise IngestError(path, lineno, "expected a JSON object")
    missing = [k for k in ("profile_id", "photo_id", "embedding") if k not in obj]
    if missing:
        raise IngestError(path, lineno, f"missing key(s): {', '.join(missing)}")
    emb = obj["embedding"]
    if not isinstance(emb, list):
        raise IngestError(path, lineno, "embedding must be an array of numbers")
    if len(emb) != dimension:
        raise IngestError(path, lineno,
                          f"embedding has {len(emb)} values, expected {dimension}")
    try:
        vec = as_embedding(emb)
    except (TypeError, ValueError) as exc:
        raise IngestError(path, lineno, f"bad embedding: {exc}") from None
    pixel_count = obj.get("pixel_count", 0)
    if not isinstance(pixel_count, int) or isinstance(pixel_count, bool):
        raise IngestError(path, lineno, "pixel_count must be an integer")
    is_avatar = obj.get("is_avatar", False)
    if not isinstance(is_avatar, bool):
        raise IngestError(path, lineno, "is_avatar must be a boolean")
    try:
        return FaceRecord(str(obj["profile_id"]), str(obj["photo_id"]), vec,
                          pixel_count, is_avatar)
    except ValueError as exc:
        raise IngestError(path, lineno, str(exc)) from None


def load_face_records(path, expected_dim: Optional[int] = None, network_id: Optional[str] = None,
                      names: Mapping[str, str] = None) -> ProfileCollection:
    """Load and validate a JSON-Lines face-record file.

    The dimension comes from the header line; ``expected_dim``, when given,
    must agree with it. Without a header the dimension is ``expected_dim`` or,
    failing that, the length of the first embedding.
    """
    path = Path(path)
    if network_id is None:
        network_id = path.parent.name or path.stem
    dimension = expected_dim
    records: List[FaceRecord] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise IngestError(path, lineno, f"malformed JSON: {exc.msg}") from None
            if isinstance(obj, dict) and "dimension" in obj and "embedding" not in obj:
                if records:
                    raise IngestError(path, lineno, "header must be the first line")
                declared = obj["dimension"]
                if not isinstance(declared, int) or declared <= 0:
                    raise IngestError(path, lineno, "dimension must be a positive integer")
                if expected_dim is not None and declared != expected_dim:
                    raise IngestError(path, lineno,
                                      f"header declares dimension {declared}, "
                                      f"expected {expected_dim}")
                dimension = declared
                continue
            if dimension is None:
                emb = obj.get("embedding") if isinstance(obj, dict) else None
                dimension = len(emb) if isinstance(emb, list) else DEFAULT_DIMENSION
            records.append(_parse_record(obj, path, lineno, dimension))
    if dimension is None:
        dimension = DEFAULT_DIMENSION
    return ProfileCollection.from_records(network_id, records, names, dimension)


def write_face_records(collection: ProfileCollection, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps({"dimension": collection.dimension}) + "\n")
        for rec in collection.iter_records():
            fh.write(json.dumps({
                "profile_id": rec.profile_id,
                "photo_id": rec.photo_id,
                "embedding": rec.embedding.tolist(),
                "pixel_count": int(rec.pixel_count),
                "is_avatar": bool(rec.is_avatar),
            }) + "\n")


def _read_tsv(path, ncols_min=2):
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\r\n")
            if not line.strip():
                continue
            parts = line.split("\t", 1)
            if len(parts) < ncols_min or not parts[0]:
                raise IngestError(path, lineno, "expected two tab-separated columns")
            yield lineno, parts


def load_names(path) -> Dict[str, str]:
    names: Dict[str, str] = {}
    for lineno, (pid, raw) in _read_tsv(path):
        if pid in names:
            raise IngestError(path, lineno, f"duplicate profile id {pid!r}")
        names[pid] = raw
    return names


def write_names(names: Mapping[str, str], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for pid in sorted(names):
            fh.write(f"{pid}\t{names[pid]}\n")


def load_ground_truth(path) -> GroundTruth:
    pairs = []
    seen_src: Dict[str, int] = {}
    seen_tgt: Dict[str, int] = {}
    for lineno, (src, tgt) in _read_tsv(path):
        tgt = tgt.strip()
        if not tgt or "\t" in tgt:
            raise IngestError(path, lineno, "expected exactly two tab-separated columns")
        if src in seen_src:
            raise IngestError(path, lineno,
                              f"duplicate source id {src!r} (first on line {seen_src[src]})")
        if tgt in seen_tgt:
            raise IngestError(path, lineno,
                              f"duplicate target id {tgt!r} (first on line {seen_tgt[tgt]})")
        seen_src[src] = lineno
        seen_tgt[tgt] = lineno
        pairs.append((src, tgt))
    return GroundTruth(frozenset(pairs))


def write_ground_truth(truth: GroundTruth, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for src, tgt in sorted(truth.pairs):
            fh.write(f"{src}\t{tgt}\n")


def load_collection(directory, expected_dim: Optional[int] = None,
                    network_id: Optional[str] = None) -> ProfileCollection:
    """Load ``faces.jsonl`` and the optional ``names.tsv`` from a network directory."""
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"network directory not found: {directory}")
    faces = directory / FACES_FILE
    if not faces.exists():
        raise FileNotFoundError(f"face-record file not found: {faces}")
    names_path = directory / NAMES_FILE
    names = load_names(names_path) if names_path.exists() else None
    return load_face_records(faces, expected_dim,
                             network_id or directory.name, names=names)


def write_collection(collection: ProfileCollection, directory) -> None:
    os.makedirs(directory, exist_ok=True)
    write_face_records(collection, Path(directory) / FACES_FILE)
    if collection.names:
        write_names(collection.names, Path(directory) / NAMES_FILE)
