"""Per-entity input components A, B, C and their assembly into model inputs.

A is the centroid of the entity's own description, B the mean of its related
entities' description centroids, and C the type-frequency vector of its
related entities over the taxonomy's type order.
"""

from __future__ import annotations

import hashlib
import os
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .embeddings import WordVectorTable, centroid, tokenize
from .exceptions import ConfigError, DataError, FeatureError
from .kb import KnowledgeBase

CACHE_MAGIC = b"NTFC"
CACHE_FORMAT_VERSION = 1


@dataclass(frozen=True)
class InputMask:
    has_a: bool = False
    has_b: bool = False
    has_c: bool = False

    @classmethod
    def parse(cls, spec) -> "InputMask":
        """Accept ``"a"``, ``"A+B"``, ``"abc"``, an int bit mask or an InputMask."""
        if isinstance(spec, InputMask):
            return spec
        if isinstance(spec, (int, np.integer)):
            if not 0 < spec < 8:
                raise ConfigError(f"input mask bits out of range: {spec}")
            return cls(bool(spec & 1), bool(spec & 2), bool(spec & 4))
        letters = str(spec).lower().replace("+", "").replace(",", "").replace(" ", "")
        if not letters or set(letters) - set("abc"):
            raise ConfigError(f"invalid input mask {spec!r}; use letters from a, b, c")
        return cls("a" in letters, "b" in letters, "c" in letters)

    @property
    def bits(self) -> int:
        return int(self.has_a) | int(self.has_b) << 1 | int(self.has_c) << 2

    @property
    def active(self) -> tuple[str, ...]:
        return tuple(n for n, on in zip("abc", (self.has_a, self.has_b, self.has_c)) if on)

    def __bool__(self):
        return self.bits != 0

    def __str__(self):
        return "+".join(self.active).upper() or "(empty)"


ALL_MASKS = tuple(InputMask.parse(bits) for bits in range(1, 8))


@dataclass(frozen=True)
class FeatureBundle:
    entity: str
    mask: InputMask
    a: np.ndarray | None = None
    b: np.ndarray | None = None
    c: np.ndarray | None = None

    def parts(self) -> list[np.ndarray]:
        return [getattr(self, name) for name in self.mask.active]

    def vector(self) -> np.ndarray:
        return np.concatenate(self.parts())


def _description_centroid(kb, table, e, cache=None):
    if cache is not None and e in cache:
        return cache[e]
    desc = kb.entities[e].description if e in kb.entities else None
    vec = None if desc is None else centroid(table, tokenize(desc)).values
    if cache is not None:
        cache[e] = vec
    return vec


def input_a(kb: KnowledgeBase, table: WordVectorTable, e: str, _cache=None) -> np.ndarray:
    record = kb.record(e)
    if record.description is None:
        raise FeatureError(f"entity {e} has no description; input A unavailable")
    return _description_centroid(kb, table, e, _cache)


def input_b(kb: KnowledgeBase, table: WordVectorTable, e: str, _cache=None) -> np.ndarray:
    """Mean of the related entities' description centroids.

    Related entities without a description do not count in the mean.
    """
    vecs = []
    for other in kb.record(e).related:
        vec = _description_centroid(kb, table, other, _cache)
        if vec is not None:
            vecs.append(vec)
    if not vecs:
        return np.zeros(table.dim)
    return np.mean(np.stack(vecs), axis=0)


def input_c(kb: KnowledgeBase, e: str, normalize: bool = False) -> np.ndarray:
    """Counts of asserted types among the related entities of ``e``.

    Only the neighbours' assignments are read, never those of ``e`` itself.
    """
    taxonomy = kb.taxonomy
    if not len(taxonomy):
        raise FeatureError("input C needs a non-empty taxonomy")
    counts = np.zeros(len(taxonomy))
    for other in kb.record(e).related:
        for t in kb.types_of(other):
            counts[taxonomy.index(t)] += 1
    if normalize and counts.sum() > 0:
        counts /= counts.sum()
    return counts


def assemble_bundle(kb, table, e, mask, normalize_c=False, _cache=None) -> FeatureBundle:
    mask = InputMask.parse(mask)
    if not mask:
        raise ConfigError("input mask must select at least one of A, B, C")
    return FeatureBundle(
        entity=e,
        mask=mask,
        a=input_a(kb, table, e, _cache) if mask.has_a else None,
        b=input_b(kb, table, e, _cache) if mask.has_b else None,
        c=input_c(kb, e, normalize_c) if mask.has_c else None,
    )


def input_dims(mask, embedding_dim, n_types) -> tuple[int, ...]:
    sizes = {"a": embedding_dim, "b": embedding_dim, "c": n_types}
    return tuple(sizes[n] for n in InputMask.parse(mask).active)


def bundles_to_matrix(bundles) -> np.ndarray:
    return np.stack([b.vector() for b in bundles])


class EntityFeaturizer(TransformerMixin, BaseEstimator):
    """Map entity IRIs to the concatenated [A | B | C] feature matrix.

    Parameters
    ----------
    kb : KnowledgeBase
    table : WordVectorTable
    inputs : str
        Which components to build, e.g. ``"a"``, ``"a+b"`` or ``"abc"``.
    normalize_c : bool
        L1-normalize the type-count vector.

    Once fitted, ``input_dims_`` gives the width of each active block, which
    is what :class:`neutype.nn.NeuTypeClassifier` needs to split the matrix.
    """

    def __init__(self, kb=None, table=None, inputs="a", normalize_c=False):
        self.kb = kb
        self.table = table
        self.inputs = inputs
        self.normalize_c = normalize_c

    def fit(self, X=None, y=None):
        if self.kb is None or self.table is None:
            raise ConfigError("EntityFeaturizer needs both kb and table")
        self.mask_ = InputMask.parse(self.inputs)
        if not self.mask_:
            raise ConfigError("input mask must select at least one of A, B, C")
        self.input_dims_ = input_dims(self.mask_, self.table.dim, len(self.kb.taxonomy))
        self._centroids = {}
        return self

    def bundles(self, entities) -> list[FeatureBundle]:
        if not hasattr(self, "mask_"):
            self.fit()
        return [assemble_bundle(self.kb, self.table, e, self.mask_,
                                self.normalize_c, self._centroids)
                for e in entities]

    def transform(self, X):
        entities = [str(e) for e in np.asarray(X, dtype=object).ravel()]
        if not entities:
            return np.zeros((0, sum(self.input_dims_)))
        return bundles_to_matrix(self.bundles(entities))

    def __sklearn_tags__(self):
        tags = super().__sklearn_tags__()
        tags.input_tags.two_d_array = False
        tags.input_tags.string = True
        return tags


# -- on-disk feature cache ----------------------------------------------------

def cache_dir() -> Path:
    return Path(os.environ.get("NEUTYPE_CACHE_DIR",
                               Path.home() / ".cache" / "neutype"))


def cache_key(kb_hash: str, table_hash: str, mask, normalize_c=False) -> str:
    mask = InputMask.parse(mask)
    raw = f"{kb_hash}\0{table_hash}\0{mask.bits}\0{int(normalize_c)}"
    return hashlib.sha256(raw.encode()).hexdigest()[:24]


def write_feature_cache(path, bundles, dims) -> None:
    """Write bundles in the versioned little-endian float32 cache format.

    ``dims`` is ``(dim_a, dim_b, dim_c)``; each record is a length-prefixed
    entity IRI, a mask byte, then the present vectors in A, B, C order.
    """
    bundles = list(bundles)
    out = bytearray(CACHE_MAGIC)
    out += struct.pack("<H3II", CACHE_FORMAT_VERSION, *dims, len(bundles))
    for b in bundles:
        iri = b.entity.encode("utf-8")
        out += struct.pack("<I", len(iri)) + iri + struct.pack("<B", b.mask.bits)
        for name, dim in zip("abc", dims):
            vec = getattr(b, name)
            if vec is None:
                continue
            if len(vec) != dim:
                raise FeatureError(f"{b.entity}: input {name.upper()} has {len(vec)} "
                                   f"values, cache expects {dim}")
            out += np.asarray(vec, dtype="<f4").tobytes()
    Path(path).write_bytes(bytes(out))


def read_feature_cache(path) -> tuple[list[FeatureBundle], tuple[int, int, int]]:
    data = Path(path).read_bytes()
    if data[:4] != CACHE_MAGIC:
        raise DataError(f"{path}: not a feature cache file")
    version, da, db, dc, count = struct.unpack_from("<H3II", data, 4)
    if version != CACHE_FORMAT_VERSION:
        raise DataError(f"{path}: unsupported feature cache version {version}")
    dims = (da, db, dc)
    pos = 4 + struct.calcsize("<H3II")
    bundles = []
    for _ in range(count):
        (n,) = struct.unpack_from("<I", data, pos)
        pos += 4
        iri = data[pos:pos + n].decode("utf-8")
        pos += n
        mask = InputMask.parse(data[pos])
        pos += 1
        vecs = {}
        for name, dim in zip("abc", dims):
            if name in mask.active:
                vecs[name] = np.frombuffer(data, dtype="<f4", count=dim,
                                           offset=pos).astype(np.float64)
                pos += 4 * dim
        bundles.append(FeatureBundle(entity=iri, mask=mask, **vecs))
    if pos != len(data):
        raise DataError(f"{path}: trailing bytes after {count} records")
    return bundles, dims
