"""Pretrained word vectors and description centroids."""

from __future__ import annotations

import hashlib
import logging
import re
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .exceptions import DataError

logger = logging.getLogger(__name__)

DEFAULT_DIM = 300

_SPLIT_RE = re.compile(r"[^0-9a-z]+")


def tokenize(text: str) -> list[str]:
    """Lowercase and split on every non-alphanumeric character.

    >>> tokenize("C-3PO!")
    ['c', '3po']
    """
    return [tok for tok in _SPLIT_RE.split(text.lower()) if tok]


@dataclass(frozen=True)
class WordVectorTable:
    dim: int
    vectors: Mapping[str, np.ndarray]
    skipped: int = 0

    def __len__(self):
        return len(self.vectors)

    def __deepcopy__(self, memo):
        return self

    def __contains__(self, token):
        return token in self.vectors

    @classmethod
    def from_dict(cls, vectors, dim=None):
        vectors = {k: np.asarray(v, dtype=np.float64) for k, v in vectors.items()}
        if dim is None:
            dim = len(next(iter(vectors.values()))) if vectors else DEFAULT_DIM
        for tok, vec in vectors.items():
            if vec.shape != (dim,):
                raise DataError(f"vector for {tok!r} has shape {vec.shape}, expected ({dim},)")
            vec.setflags(write=False)
        return cls(dim=dim, vectors=vectors)

    def content_hash(self) -> str:
        h = hashlib.sha256(str(self.dim).encode())
        for tok in sorted(self.vectors):
            h.update(tok.encode("utf-8") + b"\0")
            h.update(self.vectors[tok].astype("<f8").tobytes())
        return h.hexdigest()

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"{len(self.vectors)} {self.dim}\n")
            for tok, vec in self.vectors.items():
                fh.write(tok + " " + " ".join(repr(float(x)) for x in vec) + "\n")


def load_word_vectors(path, dim: int = DEFAULT_DIM) -> WordVectorTable:
    """Read a word2vec-style text file.

    An optional ``count dim`` header line is tolerated. Records with the
    wrong number of values are skipped and counted in ``table.skipped``;
    duplicate tokens keep their first occurrence.
    """
    vectors: dict[str, np.ndarray] = {}
    skipped = 0
    try:
        handle = open(path, encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read word vectors {path}: {exc}") from exc
    with handle:
        for lineno, line in enumerate(handle, start=1):
            parts = line.split()
            if not parts:
                continue
            if lineno == 1 and len(parts) == 2 and all(p.isdigit() for p in parts):
                continue
            if len(parts) != dim + 1:
                skipped += 1
                continue
            tok = parts[0]
            if tok in vectors:
                continue
            try:
                vec = np.array(parts[1:], dtype=np.float64)
            except ValueError:
                skipped += 1
                continue
            if not np.all(np.isfinite(vec)):
                skipped += 1
                continue
            vec.setflags(write=False)
            vectors[tok] = vec
    if not vectors:
        raise DataError(f"no usable {dim}-dimensional records in {path}")
    if skipped:
        logger.warning("%s: skipped %d malformed records", path, skipped)
    return WordVectorTable(dim=dim, vectors=vectors, skipped=skipped)


@dataclass(frozen=True)
class Centroid:
    values: np.ndarray
    coverage: float


def centroid(table: WordVectorTable, tokens) -> Centroid:
    """Mean vector of the in-vocabulary tokens, counted with multiplicity.

    Out-of-vocabulary tokens are left out of the denominator. With nothing
    in vocabulary the result is the zero vector with coverage 0.
    """
    tokens = list(tokens)
    found = [table.vectors[t] for t in tokens if t in table.vectors]
    if not found:
        return Centroid(np.zeros(table.dim), 0.0)
    values = np.mean(np.stack(found), axis=0)
    return Centroid(values, len(found) / len(tokens))
