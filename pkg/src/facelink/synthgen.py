"""Seeded synthetic two-network dataset with known ground truth.

Every person has an identity center; their faces are the center plus
isotropic Gaussian noise. A profile's photos mix owner faces with faces of a
few friends and, optionally, child faces drawn tightly around one shared
child center. Aligned persons get a profile in both networks, with
independently drawn photos. Everything is a function of ``SynthConfig.seed``.
"""
from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Dict, FrozenSet, List, Optional, Tuple

import numpy as np

from .core import FaceRecord
from .filtering import DEFAULT_ANCHOR_RADIUS, build_anchor, write_anchor
from .ingest import GroundTruth, ProfileCollection, write_collection, write_face_records, write_ground_truth

OWNER, FRIEND, CHILD = "owner", "friend", "child"

_FIRST = ["Иван", "Анна", "Петр", "Мария", "Олег", "Ольга", "Юрий", "Елена", "Денис", "Нина",
          "Артем", "Дарья", "Максим", "Софья", "Илья", "Вера", "Никита", "Алиса", "Тимур", "Яна"]
_SYLLABLES = ["ка", "ло", "ми", "ро", "ва", "ше", "ку", "те", "ни", "за", "бо", "гу", "да", "ль",
              "ре", "со", "жа", "хо", "цы", "че", "щу", "ю", "ря", "пе", "фи"]
_SURNAME_END = ["ов", "ев", "ин", "ский", "ко", "ук"]


class SynthesisError(RuntimeError):
    pass


@dataclass(frozen=True)
class SynthConfig:
    n_persons: int = 300
    alignment_rate: float = 0.66
    photos_per_profile: Tuple[int, int] = (50, 500)
    dimension: int = 32
    owner_face_fraction: float = 0.6
    friend_pool_size: int = 500
    friends_per_person: int = 8
    child_face_fraction: float = 0.0
    intra_identity_noise: float = 0.05
    child_noise: Optional[float] = None
    identity_separation: float = 1.0
    center_scale: float = 1.0
    quality_distribution: Tuple[int, int] = (1600, 40000)
    faces_per_photo_weights: Tuple[float, ...] = (0.7, 0.2, 0.1)
    n_distractors: int = 0
    name_edit_rate: float = 0.3
    name_mismatch_rate: float = 0.15
    anchor_radius: float = DEFAULT_ANCHOR_RADIUS
    seed: int = 0

    def __post_init__(self):
        for name in ("photos_per_profile", "quality_distribution", "faces_per_photo_weights"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if self.n_persons < 1:
            raise ValueError("n_persons must be >= 1")
        if not 0 < self.alignment_rate <= 1:
            raise ValueError("alignment_rate must lie in (0, 1]")
        lo, hi = self.photos_per_profile
        if not 1 <= lo <= hi:
            raise ValueError("photos_per_profile must be a range 1 <= lo <= hi")
        if not 0 < self.owner_face_fraction <= 1:
            raise ValueError("owner_face_fraction must lie in (0, 1]")
        if not 0 <= self.child_face_fraction < 1:
            raise ValueError("child_face_fraction must lie in [0, 1)")
        if self.owner_face_fraction + self.child_face_fraction > 1 + 1e-12:
            raise ValueError("owner_face_fraction + child_face_fraction exceeds 1")
        if self.intra_identity_noise < 0:
            raise ValueError("intra_identity_noise must be >= 0")
        if not self.identity_separation > 0:
            raise ValueError("identity_separation must be > 0")
        if self.identity_separation <= 2 * self.intra_identity_noise:
            raise ValueError("identity_separation must exceed 2 * intra_identity_noise")
        qlo, qhi = self.quality_distribution
        if not 0 <= qlo <= qhi:
            raise ValueError("quality_distribution must be a range 0 <= lo <= hi")
        friend_share = 1 - self.owner_face_fraction - self.child_face_fraction
        if friend_share > 1e-12 and (self.friend_pool_size < 1 or self.friends_per_person < 1):
            raise ValueError("friend faces requested but the friend pool is empty")

    @property
    def n_aligned(self) -> int:
        return int(np.floor(round(self.alignment_rate * self.n_persons, 9)))

    @classmethod
    def from_dict(cls, data: dict) -> "SynthConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown synth config key(s): {', '.join(sorted(unknown))}")
        return cls(**data)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class SynthDataset:
    source: ProfileCollection
    target: ProfileCollection
    truth: GroundTruth
    child_records: FrozenSet[FaceRecord]
    roles: Dict[str, Dict[FaceRecord, str]] = field(repr=False)
    centers: Dict[str, np.ndarray] = field(repr=False)
    child_center: np.ndarray = field(repr=False)

    def __iter__(self):
        # allows ``source, target, truth, children = generate_dataset(cfg)``
        return iter((self.source, self.target, self.truth, self.child_records))

    def child_faces(self) -> List[FaceRecord]:
        return sorted(self.child_records, key=lambda r: (r.profile_id,) + r.sort_key())


def _draw_centers(rng, n, cfg: SynthConfig, max_attempts: int = 200) -> np.ndarray:
    """Uniform points in a hypercube, pairwise at least ``identity_separation`` apart."""
    d, sep = cfg.dimension, cfg.identity_separation
    centers = np.empty((n, d))
    count = 0
    while count < n:
        for _ in range(max_attempts):
            c = rng.uniform(0.0, cfg.center_scale, size=d)
            if count == 0 or np.min(np.linalg.norm(centers[:count] - c, axis=1)) >= sep:
                centers[count] = c
                count += 1
                break
        else:
            raise SynthesisError(
                f"could not place identity {count + 1} of {n} at separation {sep} "
                f"after {max_attempts} attempts; raise center_scale or dimension")
    return centers


def _faces_for_profile(rng, cfg, pid, owner_center, friend_centers, child_center):
    lo, hi = cfg.photos_per_profile
    n_photos = int(rng.integers(lo, hi + 1))
    weights = np.asarray(cfg.faces_per_photo_weights, dtype=float)
    per_photo = rng.choice(np.arange(1, len(weights) + 1), size=n_photos, p=weights / weights.sum())
    n_faces = int(per_photo.sum())
    u = rng.random(n_faces)
    roles = np.where(u < cfg.owner_face_fraction, 0,
                     np.where(u < cfg.owner_face_fraction + cfg.child_face_fraction, 2, 1))
    roles[0] = 0  # the avatar photo always shows the owner first
    sigma = cfg.intra_identity_noise
    child_sigma = sigma / 2 if cfg.child_noise is None else cfg.child_noise
    base = np.empty((n_faces, cfg.dimension))
    noise = np.empty_like(base)
    owner_mask, friend_mask, child_mask = roles == 0, roles == 1, roles == 2
    base[owner_mask] = owner_center
    noise[owner_mask] = sigma
    if friend_mask.any():
        pick = rng.integers(0, len(friend_centers), size=int(friend_mask.sum()))
        base[friend_mask] = friend_centers[pick]
        noise[friend_mask] = sigma
    base[child_mask] = child_center
    noise[child_mask] = child_sigma
    emb = base + rng.standard_normal(base.shape) * noise
    qlo, qhi = cfg.quality_distribution
    pixels = rng.integers(qlo, qhi + 1, size=n_faces)
    photo_of_face = np.repeat(np.arange(n_photos), per_photo)
    records, labels = [], []
    for i in range(n_faces):
        photo = int(photo_of_face[i])
        rec = FaceRecord(pid, f"{pid}-p{photo:04d}", emb[i], int(pixels[i]), photo == 0)
        records.append(rec)
        labels.append((OWNER, FRIEND, CHILD)[int(roles[i])])
    return records, labels


def _make_name(rng) -> str:
    first = _FIRST[int(rng.integers(len(_FIRST)))]
    n_syl = int(rng.integers(1, 3))
    stem = "".join(_SYLLABLES[int(i)] for i in rng.integers(0, len(_SYLLABLES), size=n_syl))
    last = (stem + _SURNAME_END[int(rng.integers(len(_SURNAME_END)))]).capitalize()
    return f"{first} {last}"


_LATIN_TRANSLIT = {"а": "a", "б": "b", "в": "v", "г": "g", "д": "d", "е": "e", "ж": "zh",
                   "з": "z", "и": "i", "й": "y", "к": "k", "л": "l", "м": "m", "н": "n",
                   "о": "o", "п": "p", "р": "r", "с": "s", "т": "t", "у": "u", "ф": "f",
                   "х": "h", "ц": "c", "ч": "ch", "ш": "sh", "щ": "sch", "ь": "", "ы": "y",
                   "ю": "iu", "я": "ia"}


def _target_name(rng, name: str, cfg: SynthConfig) -> str:
    """Latin-script rendering of ``name``, as typed on the second network."""
    if rng.random() < cfg.name_mismatch_rate:
        letters = "abcdefghijklmnopqrstuvwxyz"
        return "".join(letters[int(i)] for i in rng.integers(0, 26, size=int(rng.integers(5, 12))))
    # a different romanization from the normalizer's table, so exact hits are not free
    out = "".join(_LATIN_TRANSLIT.get(c, c) for c in name.lower())
    if rng.random() < cfg.name_edit_rate:
        pos = int(rng.integers(len(out)))
        out = out[:pos] + "abcdefghijklmnopqrstuvwxyz"[int(rng.integers(26))] + out[pos + 1:]
    if rng.random() < 0.3:
        out = out.replace(" ", "_") + str(int(rng.integers(10, 100)))
    return out.title()


def generate_dataset(cfg: SynthConfig) -> SynthDataset:
    rng = np.random.default_rng(cfg.seed)
    n_aligned = cfg.n_aligned
    n_people = cfg.n_persons + cfg.n_distractors
    friend_share = 1 - cfg.owner_face_fraction - cfg.child_face_fraction
    n_friends = cfg.friend_pool_size if friend_share > 1e-12 else 0
    # one shared pool keeps persons, friends and the child center mutually separated
    centers = _draw_centers(rng, n_people + n_friends + 1, cfg)
    person_centers = centers[:n_people]
    friend_pool = centers[n_people:n_people + n_friends]
    child_center = centers[-1]

    aligned = set(rng.choice(cfg.n_persons, size=n_aligned, replace=False).tolist())
    target_people = sorted(aligned) + list(range(cfg.n_persons, n_people))
    target_labels = rng.permutation(len(target_people))
    target_id = {p: f"t{int(lab):05d}" for p, lab in zip(target_people, target_labels)}

    src_records, tgt_records = [], []
    src_names, tgt_names = {}, {}
    roles = {"source": {}, "target": {}}
    children = set()
    center_of = {}
    for person in range(n_people):
        friends = friend_pool[rng.choice(n_friends, size=min(cfg.friends_per_person, n_friends),
                                         replace=False)] if n_friends else np.empty((0, cfg.dimension))
        name = _make_name(rng)
        sides = []
        if person < cfg.n_persons:
            sides.append(("source", f"s{person:05d}", src_records, src_names))
        if person in target_id:
            sides.append(("target", target_id[person], tgt_records, tgt_names))
        for network, pid, bucket, names in sides:
            recs, labels = _faces_for_profile(rng, cfg, pid, person_centers[person],
                                              friends, child_center)
            bucket.extend(recs)
            names[pid] = name if network == "source" else _target_name(rng, name, cfg)
            center_of[pid] = person_centers[person]
            for rec, lab in zip(recs, labels):
                roles[network][rec] = lab
                if lab == CHILD:
                    children.add(rec)

    truth = GroundTruth(frozenset((f"s{p:05d}", target_id[p]) for p in aligned))
    source = ProfileCollection.from_records("source", src_records, src_names, cfg.dimension)
    target = ProfileCollection.from_records("target", tgt_records, tgt_names, cfg.dimension)
    return SynthDataset(source, target, truth, frozenset(children), roles, center_of, child_center)


def write_dataset(ds: SynthDataset, out_dir, cfg: Optional[SynthConfig] = None) -> Dict[str, Path]:
    """Write both networks, ground truth, role labels and the child anchor.

    Layout::

        out/source/{faces.jsonl,names.tsv}
        out/target/{faces.jsonl,names.tsv}
        out/truth.tsv
        out/roles.tsv          network, 1-based line in faces.jsonl, role
        out/children.jsonl     child faces only (input for ``facelink anchors``)
        out/anchor_children.json
    """
    out = Path(out_dir)
    os.makedirs(out, exist_ok=True)
    write_collection(ds.source, out / "source")
    write_collection(ds.target, out / "target")
    write_ground_truth(ds.truth, out / "truth.tsv")
    paths = {"source": out / "source", "target": out / "target", "truth": out / "truth.tsv",
             "roles": out / "roles.tsv"}
    with open(out / "roles.tsv", "w", encoding="utf-8", newline="\n") as fh:
        for network, coll in (("source", ds.source), ("target", ds.target)):
            for line, rec in enumerate(coll.iter_records(), start=2):
                fh.write(f"{network}\t{line}\t{ds.roles[network][rec]}\n")
    if ds.child_records:
        kids = ProfileCollection.from_records("children", ds.child_faces(),
                                              dimension=ds.source.dimension)
        write_face_records(kids, out / "children.jsonl")
        radius = cfg.anchor_radius if cfg is not None else DEFAULT_ANCHOR_RADIUS
        write_anchor(build_anchor(ds.child_faces(), radius, "children"),
                     out / "anchor_children.json")
        paths["children"] = out / "children.jsonl"
        paths["anchor"] = out / "anchor_children.json"
    if cfg is not None:
        with open(out / "synth_config.json", "w", encoding="utf-8", newline="\n") as fh:
            json.dump(cfg.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
    return paths
