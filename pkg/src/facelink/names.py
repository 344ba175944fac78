"""Real-name baseline: normalize names, then link by Levenshtein distance."""
from __future__ import annotations

from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_non_negative
from .matching import MatchResult, NoPairReason

DEFAULT_NAME_THRESHOLD = 4
_LATIN = frozenset("abcdefghijklmnopqrstuvwxyz")


def read_translit_table(path) -> Dict[str, str]:
    table = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\r\n")
            if not line or line.startswith("#"):
                continue
            src, sep, dst = line.partition("\t")
            if not sep or len(src) != 1:
                raise ValueError(f"{path}:{lineno}: expected one letter, a tab, and its Latin form")
            if any(c not in _LATIN for c in dst):
                raise ValueError(f"{path}:{lineno}: Latin form must be lowercase a-z")
            table[src] = dst
    return table


@lru_cache(maxsize=None)
def default_translit_table() -> Dict[str, str]:
    with resources.as_file(resources.files("facelink") / "data" / "translit_ru.tsv") as p:
        return read_translit_table(p)


def _squash(text: str) -> str:
    return " ".join(text.split())


def normalize_name(raw: str, table: Optional[Mapping[str, str]] = None,
                   keep_spaces: bool = True) -> str:
    """Lowercase, drop non-letters, then transliterate to plain ``a-z``.

    Whitespace runs become single spaces. Letters that are neither Latin
    ``a-z`` nor covered by the transliteration table are dropped.

    >>> normalize_name("John_Smith99")
    'johnsmith'
    >>> normalize_name("Иван Петров")
    'ivan petrov'
    """
    if table is None:
        table = default_translit_table()
    text = raw.lower()
    text = _squash("".join(c if c.isalpha() else " " if c.isspace() else "" for c in text))
    out = []
    for c in text:
        if c == " " or c in _LATIN:
            out.append(c)
        else:
            out.append(table.get(c, ""))
    text = _squash("".join(out))
    return text if keep_spaces else text.replace(" ", "")


def levenshtein(a: str, b: str) -> int:
    """Unit-cost edit distance (insertions, deletions, substitutions)."""
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


class _EncodedNames:
    """Names packed into a padded code matrix for batched distance rows."""

    def __init__(self, names: Sequence[str]):
        self.lengths = np.array([len(n) for n in names], dtype=np.int64)
        width = int(self.lengths.max()) if len(names) else 0
        self.codes = np.full((len(names), width), -1, dtype=np.int64)
        for i, n in enumerate(names):
            self.codes[i, :len(n)] = [ord(c) for c in n]

    def distances(self, a: str) -> np.ndarray:
        n, width = self.codes.shape
        if n == 0:
            return np.empty(0, dtype=np.int64)
        cols = np.arange(width + 1, dtype=np.int64)
        row = np.broadcast_to(cols, (n, width + 1)).copy()
        for i, ca in enumerate(a, start=1):
            best = np.minimum(row[:, :-1] + (self.codes != ord(ca)), row[:, 1:] + 1)
            cand = np.empty_like(row)
            cand[:, 0] = i
            cand[:, 1:] = best
            # insertion chain along the row: D[j] = min_k (cand[k] + j - k)
            row = np.minimum.accumulate(cand - cols, axis=1) + cols
        return row[np.arange(n), self.lengths]


def levenshtein_many(a: str, others: Sequence[str]) -> np.ndarray:
    """Edit distance from ``a`` to each string in ``others``."""
    return _EncodedNames(list(others)).distances(a)


def _match_encoded(source_names: Mapping[str, str], target_ids: List[str],
                   encoded: _EncodedNames, threshold: int) -> List[MatchResult]:
    results = []
    for sid, name in source_names.items():
        if not target_ids:
            results.append(MatchResult.no_pair(sid, NoPairReason.NO_CANDIDATE))
            continue
        dist = encoded.distances(name)
        j = int(np.argmin(dist))  # targets are id-sorted, first minimum wins ties
        if dist[j] <= threshold:
            results.append(MatchResult(sid, target_ids[j], float(dist[j])))
        else:
            results.append(MatchResult.no_pair(sid, NoPairReason.ABOVE_THRESHOLD))
    return results


def match_by_name(source_names: Mapping[str, str], target_names: Mapping[str, str],
                  threshold: int = DEFAULT_NAME_THRESHOLD) -> List[MatchResult]:
    """Nearest target name per source name, accepted when within ``threshold`` edits.

    Both mappings hold already-normalized names. Ties go to the smallest
    target id.
    """
    check_non_negative(threshold, "threshold", integer=True)
    target_ids = sorted(target_names)
    encoded = _EncodedNames([target_names[t] for t in target_ids])
    return _match_encoded(source_names, target_ids, encoded, threshold)


class NameMatcher(BaseEstimator):
    """Name baseline with the estimator interface.

    ``fit`` takes the raw target names (``{profile_id: name}``) and ``predict``
    links raw source names to them.
    """

    def __init__(self, threshold=DEFAULT_NAME_THRESHOLD, keep_spaces=True, translit_table=None):
        self.threshold = threshold
        self.keep_spaces = keep_spaces
        self.translit_table = translit_table

    def _table(self):
        if self.translit_table is None:
            return default_translit_table()
        if isinstance(self.translit_table, (str, Path)):
            return read_translit_table(self.translit_table)
        return dict(self.translit_table)

    def normalize(self, names: Mapping[str, str]) -> Dict[str, str]:
        table = getattr(self, "table_", None) or self._table()
        return {pid: normalize_name(raw, table, self.keep_spaces) for pid, raw in names.items()}

    def fit(self, X: Mapping[str, str], y=None):
        check_non_negative(self.threshold, "threshold", integer=True)
        self.table_ = self._table()
        normalized = self.normalize(X)
        self.target_ids_ = sorted(normalized)
        self.encoded_ = _EncodedNames([normalized[t] for t in self.target_ids_])
        return self

    def predict(self, X: Mapping[str, str], threshold: Optional[int] = None) -> List[MatchResult]:
        check_is_fitted(self, "encoded_")
        thr = self.threshold if threshold is None else threshold
        source = self.normalize(X)
        return _match_encoded({k: source[k] for k in sorted(source)}, self.target_ids_,
                              self.encoded_, thr)
