"""Synthetic knowledge bases for desk-scale experiments.

The generated ontology has 12 types over three levels. Entity descriptions
mix words specific to the entity's type, words shared along its branch and
generic filler, all drawn from a 50-word embedding table. Links either
connect entities of the same type densely or are sparse (at most one per
entity) and type-agnostic.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .embeddings import WordVectorTable
from .kb import (OWL_CLASS, OWL_THING, RDF_TYPE, RDFS_SUBCLASS_OF, KBBuilder,
                 KnowledgeBase, Literal, Triple)

ONTOLOGY_NS = "http://synthetic.example/ontology/"
RESOURCE_NS = "http://synthetic.example/resource/"
ABSTRACT = "http://www.w3.org/2000/01/rdf-schema#comment"

# child -> parent; None hangs off owl:Thing
SYNTHETIC_TAXONOMY = {
    "Agent": None,
    "Person": "Agent",
    "Athlete": "Person",
    "Scientist": "Person",
    "Organization": "Agent",
    "Company": "Organization",
    "Place": None,
    "City": "Place",
    "Country": "Place",
    "Work": None,
    "Film": "Work",
    "Book": "Work",
}

# Share of entities per gold type; Agent is never a gold label.
GOLD_WEIGHTS = {
    "Athlete": 12, "Scientist": 10, "Person": 6, "Company": 10, "Organization": 5,
    "City": 12, "Country": 8, "Place": 5, "Film": 12, "Book": 12, "Work": 8,
}

TYPE_WORDS = {
    "Agent": ["known", "member"],
    "Person": ["born", "he", "she", "career"],
    "Athlete": ["footballer", "striker", "olympic", "league"],
    "Scientist": ["physicist", "professor", "research", "theory"],
    "Organization": ["founded", "headquartered", "members"],
    "Company": ["company", "products", "revenue", "brand"],
    "Place": ["located", "region", "area"],
    "City": ["city", "municipality", "population", "mayor"],
    "Country": ["country", "sovereign", "republic", "capital"],
    "Work": ["released", "published", "written"],
    "Film": ["film", "directed", "starring", "drama"],
    "Book": ["novel", "book", "author", "chapters"],
}
FILLER_WORDS = ["the", "a", "is", "was", "of", "in", "and"]

PREDICATES = {
    "Person": "associate", "Athlete": "teammate", "Scientist": "collaborator",
    "Organization": "partner", "Company": "subsidiary", "Place": "near",
    "City": "twinTown", "Country": "borders", "Work": "relatedWork",
    "Film": "sequel", "Book": "series",
}
GENERIC_PREDICATE = "seeAlso"


def vocabulary() -> list[str]:
    words = list(FILLER_WORDS)
    for ws in TYPE_WORDS.values():
        words.extend(ws)
    return words


def type_iri(label: str) -> str:
    return ONTOLOGY_NS + label


@dataclass
class SyntheticData:
    kb: KnowledgeBase
    table: WordVectorTable
    triples: dict       # role -> list of Triple
    gold: dict          # entity -> gold type IRI

    def write(self, directory) -> dict:
        """Write N-Triples dumps (one per role) plus ``vectors.txt``.

        Returns a mapping of role (and ``"vectors"``) to the written path.
        """
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        paths = {}
        for role, triples in self.triples.items():
            path = directory / f"{role}.nt"
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(f"# synthetic {role}\n")
                for t in triples:
                    fh.write(format_triple(t) + "\n")
            paths[role] = path
        paths["vectors"] = directory / "vectors.txt"
        self.table.save(paths["vectors"])
        return paths


def format_triple(t: Triple) -> str:
    if isinstance(t.object, Literal):
        text = t.object.replace("\\", "\\\\").replace('"', '\\"')
        obj = f'"{text}"@en'
    else:
        obj = f"<{t.object}>"
    return f"<{t.subject}> <{t.predicate}> {obj} ."


def _chain(label):
    out = []
    while label is not None:
        out.append(label)
        label = SYNTHETIC_TAXONOMY[label]
    return out


def make_synthetic_kb(n_entities=2000, links="dense", seed=0, dim=300,
                      description_length=(8, 12), p_own=0.4, p_branch=0.2,
                      p_noise=0.03, dense_degree=6, p_cross_link=0.1) -> SyntheticData:
    """Generate a synthetic KB together with its word-vector table.

    Parameters
    ----------
    links : {"dense", "sparse"}
        ``dense`` gives every entity about ``dense_degree`` out-links to
        entities of its own type (plus a ``p_cross_link`` share to random
        entities); ``sparse`` gives each entity at most one link overall,
        to a random partner.
    p_own, p_branch, p_noise
        Per-token probabilities of drawing from the entity's own type words,
        from its ancestors' words, or from a random other type; the
        remainder is filler.
    """
    if links not in ("dense", "sparse"):
        raise ValueError("links must be 'dense' or 'sparse'")
    rng = np.random.default_rng(seed)
    labels = list(GOLD_WEIGHTS)
    weights = np.array([GOLD_WEIGHTS[l] for l in labels], dtype=float)
    gold_labels = rng.choice(labels, size=n_entities, p=weights / weights.sum())

    triples = {"ontology": [], "types": [], "abstracts": [], "links": []}
    for label, parent in SYNTHETIC_TAXONOMY.items():
        triples["ontology"].append(Triple(type_iri(label), RDF_TYPE, OWL_CLASS))
        triples["ontology"].append(Triple(
            type_iri(label), RDFS_SUBCLASS_OF,
            OWL_THING if parent is None else type_iri(parent)))

    all_type_labels = list(SYNTHETIC_TAXONOMY)
    entities = [f"{RESOURCE_NS}E{i:05d}" for i in range(n_entities)]
    gold = {}
    lo, hi = description_length
    for e, label in zip(entities, gold_labels):
        label = str(label)
        gold[e] = type_iri(label)
        for t in _chain(label):
            triples["types"].append(Triple(e, RDF_TYPE, type_iri(t)))
        ancestors = _chain(label)[1:]
        branch_words = [w for a in ancestors for w in TYPE_WORDS[a]]
        words = [e.rsplit("/", 1)[1].lower()]
        for _ in range(int(rng.integers(lo, hi + 1))):
            r = rng.random()
            if r < p_own:
                pool = TYPE_WORDS[label]
            elif r < p_own + p_branch and branch_words:
                pool = branch_words
            elif r < p_own + p_branch + p_noise:
                pool = TYPE_WORDS[all_type_labels[int(rng.integers(len(all_type_labels)))]]
            else:
                pool = FILLER_WORDS
            words.append(pool[int(rng.integers(len(pool)))])
        text = " ".join(words).capitalize() + "."
        triples["abstracts"].append(Triple(e, ABSTRACT, Literal(text)))

    by_label = {}
    for e, label in zip(entities, gold_labels):
        by_label.setdefault(str(label), []).append(e)

    def predicate_for(target):
        label = gold[target].rsplit("/", 1)[1]
        if rng.random() < 0.7:
            return ONTOLOGY_NS + PREDICATES[label]
        return ONTOLOGY_NS + GENERIC_PREDICATE

    if links == "dense":
        for e, label in zip(entities, gold_labels):
            peers = by_label[str(label)]
            for _ in range(dense_degree):
                if rng.random() < p_cross_link:
                    target = entities[int(rng.integers(n_entities))]
                else:
                    target = peers[int(rng.integers(len(peers)))]
                if target != e:
                    triples["links"].append(Triple(e, predicate_for(target), target))
    else:
        order = rng.permutation(n_entities)
        # pair up half of the entities; everyone else stays unlinked
        n_pairs = n_entities // 4
        for k in range(n_pairs):
            a, b = entities[order[2 * k]], entities[order[2 * k + 1]]
            triples["links"].append(Triple(a, predicate_for(b), b))

    builder = KBBuilder()
    for t in triples["ontology"]:
        if t.predicate == RDFS_SUBCLASS_OF:
            builder.add_subclass(t.subject, t.object)
        else:
            builder.add_class(t.subject)
    for t in triples["types"]:
        builder.add_type_assignment(t.subject, t.object)
    for t in triples["abstracts"]:
        builder.add_description(t.subject, t.object)
    for t in triples["links"]:
        builder.add_link(*t)
    kb = builder.build()

    vec_rng = np.random.default_rng([seed, 1])
    table = WordVectorTable.from_dict(
        {w: vec_rng.normal(0.0, 0.15, dim) for w in dict.fromkeys(vocabulary())}, dim)
    return SyntheticData(kb, table, triples, gold)
