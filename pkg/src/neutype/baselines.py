"""Baseline type predictors: link-statistics weighted voting (SDType) and BM25.

SDType learns, for each predicate and link direction, the distribution of
types over the entities found at that end of the link, and weights each
predicate by how far that distribution departs from the overall type prior.
An entity's type confidences are the weight-normalized vote of the
predicates incident to it.

The BM25 ranker treats an entity's description as the single document and
every type label, split from camel case into lowercase words, as a query.
"""

from __future__ import annotations

import math
import re
from collections import Counter, defaultdict
from dataclasses import dataclass, field

from sklearn.base import BaseEstimator

from .embeddings import tokenize
from .exceptions import BaselineError, ConfigError
from .kb import KnowledgeBase, local_name

IN, OUT = "in", "out"


@dataclass(frozen=True)
class PredicateStats:
    """Fitted SDType statistics.

    ``conditional[(p, dir)]`` maps types to P(t | p, dir), ``weights[(p, dir)]``
    holds the predicate weight and ``prior`` is P(t). Distributions are taken
    over (entity, type) assignment pairs, so they sum to one even when an
    entity carries several types.
    """

    conditional: dict
    weights: dict
    prior: dict
    n_typed: int = 0


def _distribution(entities, type_lookup):
    counts = Counter()
    for e in entities:
        counts.update(type_lookup[e])
    total = sum(counts.values())
    return {t: counts[t] / total for t in sorted(counts)}


def incident_predicates(kb: KnowledgeBase, e: str) -> set[tuple[str, str]]:
    """(predicate, direction) pairs at which ``e`` occurs in ``kb.links``.

    ``out`` means ``e`` is the subject, ``in`` that it is the object.
    """
    found = set()
    for s, p, o in kb.links:
        if s == e:
            found.add((p, OUT))
        if o == e:
            found.add((p, IN))
    return found


def _incidence_index(kb):
    index = defaultdict(set)
    for s, p, o in kb.links:
        index[s].add((p, OUT))
        index[o].add((p, IN))
    return index


def sdtype_fit(kb: KnowledgeBase, exclude=()) -> PredicateStats:
    """Fit per-predicate type distributions and weights from ``kb``.

    Entities listed in ``exclude`` contribute neither their types nor any
    evidence (their links still count for the other endpoint).
    """
    exclude = set(exclude)
    typed = {e: ts for e, ts in kb.type_assignments.items()
             if ts and e not in exclude}
    if not typed:
        raise BaselineError("SDType needs at least one typed entity")
    prior = _distribution(typed, typed)

    members = defaultdict(set)
    for s, p, o in kb.links:
        if s in typed:
            members[(p, OUT)].add(s)
        if o in typed:
            members[(p, IN)].add(o)

    conditional, weights = {}, {}
    for key in sorted(members):
        dist = _distribution(members[key], typed)
        conditional[key] = dist
        support = set(prior) | set(dist)
        weights[key] = sum((prior.get(t, 0.0) - dist.get(t, 0.0)) ** 2 for t in support)
    return PredicateStats(conditional, weights, prior, len(typed))


def sdtype_predict(stats: PredicateStats, incident) -> list[tuple[str, float]]:
    """Rank types for an entity given its incident (predicate, direction) set."""
    evidence = [k for k in sorted(set(incident)) if k in stats.conditional]
    total_weight = sum(stats.weights[k] for k in evidence)
    if total_weight <= 0.0:
        return []
    scores = defaultdict(float)
    for key in evidence:
        w = stats.weights[key]
        if w == 0.0:
            continue
        for t, prob in stats.conditional[key].items():
            scores[t] += w * prob
    ranking = [(t, s / total_weight) for t, s in scores.items() if s > 0.0]
    ranking.sort(key=lambda ts: (-ts[1], ts[0]))
    return ranking


class SDTypePredictor(BaseEstimator):
    """Estimator wrapper around :func:`sdtype_fit` / :func:`sdtype_predict`.

    ``fit`` takes the entities to hold out (usually the test set); ``rank``
    and ``predict`` take entity IRIs of ``kb``.
    """

    def __init__(self, kb=None):
        self.kb = kb

    def fit(self, exclude=(), y=None):
        if self.kb is None:
            raise ConfigError("SDTypePredictor needs a knowledge base")
        self.stats_ = sdtype_fit(self.kb, exclude)
        self._incidence = _incidence_index(self.kb)
        return self

    def rank(self, e):
        return sdtype_predict(self.stats_, self._incidence.get(e, ()))

    def predict(self, entities):
        out = []
        for e in entities:
            ranking = self.rank(e)
            out.append(ranking[0][0] if ranking else None)
        return out


# -- BM25 --------------------------------------------------------------------------

_CAMEL_RE = re.compile(r"(?<=[a-z])(?=[A-Z])|(?<=[A-Z])(?=[A-Z][a-z])")


def camel_case_split(label: str) -> str:
    """``"SoccerPlayer"`` -> ``"soccer player"``; ``"USPresident"`` -> ``"us president"``."""
    return " ".join(tokenize(_CAMEL_RE.sub(" ", label)))


@dataclass(frozen=True)
class Bm25Config:
    k1: float = 1.2
    b: float = 0.75

    def __post_init__(self):
        if self.k1 <= 0:
            raise ConfigError("BM25 k1 must be positive")
        if not 0.0 <= self.b <= 1.0:
            raise ConfigError("BM25 b must be in [0, 1]")


@dataclass
class Bm25Index:
    """Collection statistics over a description corpus."""

    docs: dict
    n_docs: int
    avgdl: float
    df: Counter = field(default_factory=Counter)

    @classmethod
    def build(cls, corpus) -> "Bm25Index":
        docs = {e: tokenize(text) for e, text in corpus.items()}
        df = Counter()
        for toks in docs.values():
            df.update(set(toks))
        n = len(docs)
        avgdl = sum(len(t) for t in docs.values()) / n if n else 0.0
        return cls(docs, n, avgdl, df)

    def idf(self, term) -> float:
        n_q = self.df.get(term, 0)
        return math.log(1.0 + (self.n_docs - n_q + 0.5) / (n_q + 0.5))

    def score(self, query_terms, doc_terms, config: Bm25Config = Bm25Config()) -> float:
        tf = Counter(doc_terms)
        dl = len(doc_terms)
        norm = 1.0 - config.b + config.b * (dl / self.avgdl) if self.avgdl else 1.0
        total = 0.0
        for q in query_terms:
            f = tf.get(q, 0)
            if f:
                total += self.idf(q) * f * (config.k1 + 1) / (f + config.k1 * norm)
        return total


def bm25_predict(taxonomy, corpus, e, config: Bm25Config = Bm25Config(), index=None):
    """Rank all taxonomy types by BM25 score of their label against ``e``'s description.

    ``corpus`` maps entity IRIs to descriptions and defines the collection
    statistics. Ties are broken by type IRI.
    """
    if e not in corpus or corpus[e] is None:
        raise BaselineError(f"entity {e} has no description for BM25")
    if index is None:
        index = Bm25Index.build(corpus)
    doc = index.docs[e] if e in index.docs else tokenize(corpus[e])
    ranking = [(t, index.score(camel_case_split(local_name(t)).split(), doc, config))
               for t in taxonomy.types]
    ranking.sort(key=lambda ts: (-ts[1], ts[0]))
    return ranking


class BM25TypeRanker(BaseEstimator):
    def __init__(self, taxonomy=None, k1=1.2, b=0.75):
        self.taxonomy = taxonomy
        self.k1 = k1
        self.b = b

    def fit(self, corpus, y=None):
        """``corpus`` maps entity IRI to description text."""
        self.corpus_ = dict(corpus)
        self.index_ = Bm25Index.build(self.corpus_)
        self.config_ = Bm25Config(self.k1, self.b)
        return self

    def rank(self, e):
        return bm25_predict(self.taxonomy, self.corpus_, e, self.config_, self.index_)

    def predict(self, entities):
        return [self.rank(e)[0][0] for e in entities]
