"""Knowledge-base store: N-Triples parsing, type taxonomy and entity records."""

from __future__ import annotations

import hashlib
import json
import logging
import re
import struct
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Mapping, NamedTuple

from .exceptions import DataError, ParseError, UnknownEntityError, UnknownTypeError

logger = logging.getLogger(__name__)

OWL_THING = "http://www.w3.org/2002/07/owl#Thing"
OWL_CLASS = "http://www.w3.org/2002/07/owl#Class"
RDF_TYPE = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type"
RDFS_SUBCLASS_OF = "http://www.w3.org/2000/01/rdf-schema#subClassOf"

ROLES = ("types", "abstracts", "links", "ontology")

KB_MAGIC = b"NTKB"
KB_FORMAT_VERSION = 1


class Literal(str):
    """Lexical form of an RDF literal; compares equal to the plain string."""

    __slots__ = ()

    def __repr__(self):
        return f"Literal({str.__repr__(self)})"


class Triple(NamedTuple):
    subject: str
    predicate: str
    object: str


_IRI = r"<([^<>\"{}|^`\\\s]*)>"
_LITERAL = r"\"((?:[^\"\\]|\\.)*)\"(?:@[A-Za-z]+(?:-[A-Za-z0-9]+)*|\^\^<[^<>\s]*>)?"
_TRIPLE_RE = re.compile(
    rf"^\s*{_IRI}\s+{_IRI}\s+(?:{_IRI}|{_LITERAL})\s*\.\s*$"
)
_ESCAPE_RE = re.compile(r"\\(u[0-9A-Fa-f]{4}|U[0-9A-Fa-f]{8}|[tbnrf\"'\\])")
_SIMPLE_ESCAPES = {"t": "\t", "b": "\b", "n": "\n", "r": "\r", "f": "\f",
                   '"': '"', "'": "'", "\\": "\\"}


def _unescape(text):
    def sub(match):
        code = match.group(1)
        if code[0] in "uU":
            return chr(int(code[1:], 16))
        return _SIMPLE_ESCAPES[code]

    return _ESCAPE_RE.sub(sub, text)


def parse_triple_line(line: str, lineno: int | None = None) -> Triple | None:
    """Parse one physical N-Triples line.

    Returns ``None`` for blank and ``#`` comment lines. IRIs come back
    without angle brackets; literals come back as :class:`Literal` holding
    only the lexical form (language tag and datatype dropped).

    Raises
    ------
    ParseError
        If the line is not a single well-formed statement.
    """
    stripped = line.strip()
    if not stripped or stripped.startswith("#"):
        return None
    match = _TRIPLE_RE.match(stripped)
    if match is None:
        if not stripped.endswith("."):
            reason = 'statement not terminated by " ."'
        elif stripped.count("<") != stripped.count(">"):
            reason = "unbalanced angle brackets"
        elif (stripped.count('"') - stripped.count('\\"')) % 2:
            reason = "unbalanced quotes"
        else:
            reason = "malformed statement"
        raise ParseError(reason, lineno=lineno)
    subj, pred, obj_iri, obj_lit = match.groups()
    obj = obj_iri if obj_iri is not None else Literal(_unescape(obj_lit))
    return Triple(subj, pred, obj)


def local_name(iri: str) -> str:
    """Camel-case label of a type IRI, e.g. ``.../ontology/SoccerPlayer``."""
    for sep in ("#", "/", ":"):
        if sep in iri:
            iri = iri.rsplit(sep, 1)[1]
    return iri


def fnv1a_64(data: bytes) -> int:
    h = 0xCBF29CE484222325
    for byte in data:
        h ^= byte
        h = (h * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return h


@dataclass(frozen=True)
class TypeTaxonomy:
    """Ontology types (root excluded) with a single-parent subclass forest.

    ``depth`` of a parentless type is 1; ``h`` is the maximum depth, 0 for an
    empty taxonomy.
    """

    types: tuple[str, ...]
    parent: Mapping[str, str]
    depth: Mapping[str, int]
    h: int
    root: str = OWL_THING

    @classmethod
    def from_edges(cls, types: Iterable[str], parent: Mapping[str, str],
                   root: str = OWL_THING) -> "TypeTaxonomy":
        type_set = set(types) | set(parent) | set(parent.values())
        type_set.discard(root)
        parent = {c: p for c, p in parent.items() if p != root and c != root}
        depth: dict[str, int] = {}
        for t in sorted(type_set):
            chain = []
            node = t
            while node not in depth:
                if node in chain:
                    raise DataError(f"subclass cycle through {node}")
                chain.append(node)
                if node not in parent:
                    break
                node = parent[node]
            base = depth.get(node, 0) if node not in chain else 0
            for offset, n in enumerate(reversed(chain), start=1):
                depth[n] = base + offset
        ordered = tuple(sorted(type_set))
        return cls(
            types=ordered,
            parent=MappingProxyType(dict(sorted(parent.items()))),
            depth=MappingProxyType({t: depth[t] for t in ordered}),
            h=max(depth.values(), default=0),
            root=root,
        )

    def __len__(self):
        return len(self.types)

    def __contains__(self, t):
        return t in self.depth

    @property
    def _index(self):
        idx = self.__dict__.get("_index_cache")
        if idx is None:
            idx = {t: i for i, t in enumerate(self.types)}
            object.__setattr__(self, "_index_cache", idx)
        return idx

    def index(self, t: str) -> int:
        try:
            return self._index[t]
        except KeyError:
            raise UnknownTypeError(f"unknown type {t}") from None

    def label(self, t: str) -> str:
        return local_name(t)

    def ancestors(self, t: str) -> list[str]:
        """Proper ancestors of ``t``, nearest first."""
        if t not in self:
            raise UnknownTypeError(f"unknown type {t}")
        out = []
        while t in self.parent:
            t = self.parent[t]
            out.append(t)
        return out

    def roots(self) -> list[str]:
        return [t for t in self.types if t not in self.parent]

    def children(self, t: str) -> list[str]:
        return [c for c in self.types if self.parent.get(c) == t]

    def content_hash(self) -> int:
        """64-bit FNV-1a over the canonical type list and parent edges."""
        canon = "\n".join(f"{t}\t{self.parent.get(t, '')}" for t in self.types)
        return fnv1a_64(canon.encode("utf-8"))


@dataclass(frozen=True)
class EntityRecord:
    id: str
    description: str | None
    related: tuple[str, ...]
    gold_type: str | None = None


@dataclass(frozen=True)
class KnowledgeBase:
    """Immutable result of :func:`ingest_dump`.

    ``links`` keeps the predicate-labelled statements for the SDType baseline;
    :attr:`EntityRecord.related` discards the predicate.
    """

    taxonomy: TypeTaxonomy
    entities: Mapping[str, EntityRecord]
    type_assignments: Mapping[str, frozenset]
    links: tuple[Triple, ...] = ()
    ingest_stats: Mapping[str, Mapping[str, int]] = field(
        default_factory=dict, compare=False, repr=False)

    def __deepcopy__(self, memo):
        return self

    def record(self, e: str) -> EntityRecord:
        try:
            return self.entities[e]
        except KeyError:
            raise UnknownEntityError(f"unknown entity {e}") from None

    def types_of(self, e: str) -> frozenset:
        return self.type_assignments.get(e, frozenset())

    def typed_entities(self) -> list[str]:
        return sorted(e for e, ts in self.type_assignments.items() if ts)

    def descriptions(self) -> dict[str, str]:
        return {e: r.description for e, r in self.entities.items()
                if r.description is not None}

    # -- serialization ---------------------------------------------------
    def _body(self) -> bytes:
        payload = {
            "taxonomy": {
                "root": self.taxonomy.root,
                "types": list(self.taxonomy.types),
                "parent": dict(self.taxonomy.parent),
            },
            "entities": [
                [r.id, r.description, sorted(self.type_assignments.get(r.id, ()))]
                for _, r in sorted(self.entities.items())
            ],
            "links": [list(t) for t in self.links],
        }
        return json.dumps(payload, ensure_ascii=False, separators=(",", ":"),
                          sort_keys=True).encode("utf-8")

    def content_hash(self) -> str:
        return hashlib.sha256(self._body()).hexdigest()

    def to_bytes(self) -> bytes:
        return KB_MAGIC + struct.pack("<H", KB_FORMAT_VERSION) + self._body()

    def save(self, path) -> str:
        Path(path).write_bytes(self.to_bytes())
        return self.content_hash()

    @classmethod
    def from_bytes(cls, data: bytes) -> "KnowledgeBase":
        if data[:4] != KB_MAGIC:
            raise DataError("not a serialized knowledge base (bad magic)")
        (version,) = struct.unpack("<H", data[4:6])
        if version != KB_FORMAT_VERSION:
            raise DataError(f"unsupported knowledge base format version {version}")
        payload = json.loads(data[6:].decode("utf-8"))
        tax = payload["taxonomy"]
        builder = KBBuilder(root=tax["root"])
        for t in tax["types"]:
            builder.add_class(t)
        for c, p in tax["parent"].items():
            builder.add_subclass(c, p)
        for e, desc, types in payload["entities"]:
            builder.add_entity(e)
            if desc is not None:
                builder.add_description(e, desc)
            for t in types:
                builder.add_type_assignment(e, t)
        for s, p, o in payload["links"]:
            builder.add_link(s, p, o)
        return builder.build()

    @classmethod
    def load(cls, path) -> "KnowledgeBase":
        try:
            data = Path(path).read_bytes()
        except OSError as exc:
            raise DataError(f"cannot read knowledge base {path}: {exc}") from exc
        return cls.from_bytes(data)


class KBBuilder:
    """Single-writer accumulator; :meth:`build` freezes it into a KnowledgeBase."""

    def __init__(self, root: str = OWL_THING):
        self.root = root
        self._classes: set[str] = set()
        self._parent: dict[str, str] = {}
        self._assignments: dict[str, set[str]] = defaultdict(set)
        self._descriptions: dict[str, str] = {}
        self._links: list[Triple] = []
        self._entities: set[str] = set()

    def add_entity(self, e):
        self._entities.add(e)

    def add_class(self, t):
        if t != self.root:
            self._classes.add(t)

    def add_subclass(self, child, parent):
        if child == self.root:
            return
        self.add_class(child)
        self.add_class(parent)
        if child in self._parent:
            if self._parent[child] != parent:
                logger.warning("multiple parents for %s; keeping %s, ignoring %s",
                               child, self._parent[child], parent)
            return
        if parent != self.root:
            self._parent[child] = parent

    def add_type_assignment(self, e, t):
        self._entities.add(e)
        if t == self.root:
            return
        self._assignments[e].add(t)

    def add_description(self, e, text):
        self._entities.add(e)
        self._descriptions.setdefault(e, str(text))

    def add_link(self, s, p, o):
        self._entities.update((s, o))
        self._links.append(Triple(s, p, o))

    def build(self, closure: bool = False) -> KnowledgeBase:
        unknown = sorted({t for ts in self._assignments.values() for t in ts}
                         - self._classes)
        if unknown and self._classes:
            logger.warning("%d assigned types missing from the ontology were added "
                           "as top-level types", len(unknown))
        taxonomy = TypeTaxonomy.from_edges(self._classes | set(unknown),
                                           self._parent, root=self.root)

        assignments = {}
        for e, ts in self._assignments.items():
            ts = set(ts)
            if closure:
                for t in list(ts):
                    ts.update(taxonomy.ancestors(t))
            assignments[e] = frozenset(ts)

        neighbours: dict[str, set[str]] = defaultdict(set)
        for s, _, o in self._links:
            if s != o:
                neighbours[s].add(o)
                neighbours[o].add(s)

        entities = {}
        for e in sorted(self._entities):
            gold = _deepest(taxonomy, assignments.get(e, ()))
            entities[e] = EntityRecord(
                id=e,
                description=self._descriptions.get(e),
                related=tuple(sorted(neighbours.get(e, ()))),
                gold_type=gold,
            )
        links = tuple(sorted(set(self._links)))
        return KnowledgeBase(
            taxonomy=taxonomy,
            entities=MappingProxyType(entities),
            type_assignments=MappingProxyType(dict(sorted(assignments.items()))),
            links=links,
        )


def _deepest(taxonomy, types):
    best = None
    for t in sorted(types):
        if best is None or taxonomy.depth[t] > taxonomy.depth[best]:
            best = t
    return best


def _iter_triples(path, stats):
    try:
        handle = open(path, encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    with handle:
        for lineno, line in enumerate(handle, start=1):
            stats["lines"] += 1
            try:
                triple = parse_triple_line(line, lineno)
            except ParseError as exc:
                exc.path = path
                stats["skipped"] += 1
                logger.debug("skipping %s:%d: %s", path, lineno, exc)
                continue
            if triple is None:
                stats["blank_or_comment"] += 1
                continue
            yield triple


def ingest_dump(paths, roles, *, closure: bool = False,
                root: str = OWL_THING) -> KnowledgeBase:
    """Build a :class:`KnowledgeBase` from N-Triples dump files.

    Parameters
    ----------
    paths : list of path-like
    roles : list of str
        One of ``types``, ``abstracts``, ``links`` or ``ontology`` per path.
    closure : bool
        Expand each asserted type with its ancestors.

    Per-file line counts end up in ``kb.ingest_stats``: ``parsed + skipped +
    blank_or_comment == lines``. Statements of the wrong shape for their role
    (e.g. a literal in a links file) count as skipped.
    """
    paths = [str(p) for p in paths]
    roles = list(roles)
    if len(paths) != len(roles):
        raise DataError("paths and roles must have the same length")
    for role in roles:
        if role not in ROLES:
            raise DataError(f"unknown file role {role!r}; expected one of {ROLES}")

    builder = KBBuilder(root=root)
    all_stats = {}
    # Ontology first so multiple-parent warnings do not depend on argument order.
    order = sorted(range(len(paths)), key=lambda i: roles[i] != "ontology")
    for i in order:
        path, role = paths[i], roles[i]
        stats = {"lines": 0, "parsed": 0, "skipped": 0, "blank_or_comment": 0}
        for s, p, o in _iter_triples(path, stats):
            is_literal = isinstance(o, Literal)
            if role == "types":
                ok = not is_literal
                if ok:
                    builder.add_type_assignment(s, o)
            elif role == "abstracts":
                ok = is_literal
                if ok:
                    builder.add_description(s, o)
            elif role == "links":
                ok = not is_literal
                if ok:
                    builder.add_link(s, p, o)
            else:
                ok = True
                if p == RDFS_SUBCLASS_OF and not is_literal:
                    builder.add_subclass(s, o)
                elif p == RDF_TYPE and o == OWL_CLASS:
                    builder.add_class(s)
            stats["parsed" if ok else "skipped"] += 1
        logger.info("%s [%s]: %d parsed, %d skipped, %d blank/comment", path, role,
                    stats["parsed"], stats["skipped"], stats["blank_or_comment"])
        all_stats[path] = MappingProxyType(stats)

    kb = builder.build(closure=closure)
    object.__setattr__(kb, "ingest_stats", MappingProxyType(all_stats))
    return kb


def most_specific_type(kb: KnowledgeBase, e: str) -> str | None:
    """Deepest asserted type of ``e``; ties go to the smallest IRI."""
    kb.record(e)
    return _deepest(kb.taxonomy, kb.types_of(e))


def related_entities(kb: KnowledgeBase, e: str) -> tuple[str, ...]:
    """In- and out-neighbours of ``e`` over any predicate, sorted, self excluded."""
    return kb.record(e).related
