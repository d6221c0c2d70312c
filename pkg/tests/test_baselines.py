import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from neutype.baselines import (IN, OUT, BM25TypeRanker, Bm25Config, Bm25Index,
                               SDTypePredictor, bm25_predict, camel_case_split,
                               incident_predicates, sdtype_fit, sdtype_predict)
from neutype.exceptions import BaselineError, ConfigError
from neutype.kb import KBBuilder, TypeTaxonomy

from conftest import iri


def typed_kb(types, links):
    b = KBBuilder()
    for e, ts in types.items():
        for t in ts:
            b.add_type_assignment(iri(e), iri(t))
    for s, p, o in links:
        b.add_link(iri(s), iri(p), iri(o))
    return b.build()


def location_kb():
    types = {"P1": ["Person"], "P2": ["Person"], "P3": ["Person"],
             "L1": ["Place"], "L2": ["Place"], "W1": ["Work"]}
    links = [("P1", "location", "L1"), ("P2", "location", "L2"), ("W1", "location", "L1"),
             ("P1", "knows", "P2"), ("W1", "author", "P3")]
    return typed_kb(types, links)


def test_perfectly_predictive_predicate():
    kb = location_kb()
    stats = sdtype_fit(kb)
    assert stats.conditional[(iri("location"), IN)] == {iri("Place"): 1.0}
    # an unseen entity whose only evidence is an incoming location link
    ranking = sdtype_predict(stats, {(iri("location"), IN)})
    assert ranking[0][0] == iri("Place")
    assert abs(ranking[0][1] - 1.0) <= 1e-9


def test_no_links_gives_empty_ranking():
    stats = sdtype_fit(location_kb())
    assert sdtype_predict(stats, set()) == []
    assert sdtype_predict(stats, {(iri("never_seen"), OUT)}) == []


def test_prior_like_predicate_has_zero_weight():
    types = {"A1": ["A"], "B1": ["B"]}
    kb = typed_kb(types, [("A1", "rel", "B1"), ("B1", "rel", "A1")])
    stats = sdtype_fit(kb)
    assert stats.weights[(iri("rel"), OUT)] == 0.0
    assert stats.weights[(iri("rel"), IN)] == 0.0
    assert sdtype_predict(stats, {(iri("rel"), IN)}) == []


def test_three_entity_hand_tally():
    # X: Person; Y: Person; Z: Place.  X -knows-> Y, X -livesIn-> Z, Y -livesIn-> Z
    kb = typed_kb({"X": ["Person"], "Y": ["Person"], "Z": ["Place"]},
                  [("X", "knows", "Y"), ("X", "livesIn", "Z"), ("Y", "livesIn", "Z")])
    stats = sdtype_fit(kb)
    person, place = iri("Person"), iri("Place")
    assert stats.prior == {person: 2 / 3, place: 1 / 3}
    assert stats.conditional == {
        (iri("knows"), OUT): {person: 1.0},
        (iri("knows"), IN): {person: 1.0},
        (iri("livesIn"), OUT): {person: 1.0},
        (iri("livesIn"), IN): {place: 1.0},
    }
    assert stats.weights[(iri("knows"), OUT)] == (2 / 3 - 1) ** 2 + (1 / 3) ** 2
    assert stats.weights[(iri("livesIn"), IN)] == (2 / 3) ** 2 + (1 / 3 - 1) ** 2
    assert stats.n_typed == 3


def test_multi_typed_entities_count_each_assignment():
    kb = typed_kb({"X": ["Person", "Agent"], "Y": ["Place"]}, [("X", "p", "Y")])
    stats = sdtype_fit(kb)
    assert stats.prior == {iri("Agent"): 1 / 3, iri("Person"): 1 / 3, iri("Place"): 1 / 3}
    assert stats.conditional[(iri("p"), OUT)] == {iri("Agent"): 0.5, iri("Person"): 0.5}


def test_equal_weight_disjoint_votes_tie_by_iri():
    types = {"A1": ["A"], "B1": ["B"], "C1": ["C"], "C2": ["C"]}
    kb = typed_kb(types, [("C1", "pa", "A1"), ("C2", "pb", "B1")])
    stats = sdtype_fit(kb)
    assert stats.weights[(iri("pa"), IN)] == stats.weights[(iri("pb"), IN)]
    ranking = sdtype_predict(stats, {(iri("pa"), IN), (iri("pb"), IN)})
    assert ranking == [(iri("A"), 0.5), (iri("B"), 0.5)]


def test_fit_requires_typed_entities():
    with pytest.raises(BaselineError):
        sdtype_fit(typed_kb({}, [("a", "p", "b")]))


def test_excluded_entities_do_not_count():
    kb = location_kb()
    stats = sdtype_fit(kb, exclude=[iri("L1"), iri("L2")])
    assert iri("Place") not in stats.prior
    assert (iri("location"), IN) not in stats.conditional


def test_incident_predicates():
    kb = location_kb()
    assert incident_predicates(kb, iri("P1")) == {(iri("location"), OUT), (iri("knows"), OUT)}
    assert incident_predicates(kb, iri("L1")) == {(iri("location"), IN)}


def test_predictor_wrapper():
    model = SDTypePredictor(location_kb()).fit(exclude=[iri("L2")])
    assert model.predict([iri("L2")]) == [iri("Place")]
    assert model.get_params() == {"kb": model.kb}


kb_shapes = st.tuples(
    st.lists(st.sampled_from("ABCD"), min_size=6, max_size=6),
    st.lists(st.tuples(st.integers(0, 5), st.sampled_from("pqr"), st.integers(0, 5)),
             min_size=1, max_size=20))


@settings(max_examples=80, deadline=None)
@given(kb_shapes, st.sets(st.tuples(st.sampled_from("pqrs"), st.sampled_from([IN, OUT]))))
def test_confidences_are_convex_combination(shape, incident):
    labels, links = shape
    kb = typed_kb({f"E{i}": [t] for i, t in enumerate(labels)},
                  [(f"E{s}", p, f"E{o}") for s, p, o in links])
    stats = sdtype_fit(kb)
    for dist in list(stats.conditional.values()) + [stats.prior]:
        assert abs(sum(dist.values()) - 1.0) <= 1e-9
    evidence = {(iri(p), d) for p, d in incident}
    ranking = sdtype_predict(stats, evidence)
    if ranking:
        assert abs(sum(c for _, c in ranking) - 1.0) <= 1e-9
        assert all(0.0 <= c <= 1.0 + 1e-12 for _, c in ranking)
        zero = {k for k in evidence if stats.weights.get(k) == 0.0}
        assert sdtype_predict(stats, evidence - zero) == ranking


# -- BM25 --------------------------------------------------------------------------

def test_camel_case_split():
    assert camel_case_split("SoccerPlayer") == "soccer player"
    assert camel_case_split("Place") == "place"
    assert camel_case_split("USPresident") == "us president"


def alex_taxonomy():
    return TypeTaxonomy.from_edges(
        [iri("SoccerPlayer"), iri("Scientist"), iri("Place")], {})


def test_alex_morgan_ranks_soccer_player_first():
    corpus = {iri("Alex"): "Alex Morgan is an American soccer player.",
              iri("Curie"): "Marie Curie was a physicist and chemist.",
              iri("Paris"): "Paris is the capital city of France."}
    ranking = bm25_predict(alex_taxonomy(), corpus, iri("Alex"))
    order = [t for t, _ in ranking]
    assert order[0] == iri("SoccerPlayer")
    assert order.index(iri("SoccerPlayer")) < order.index(iri("Scientist"))


def test_no_shared_tokens_ties_by_iri():
    corpus = {iri("E"): "nothing relevant here"}
    ranking = bm25_predict(alex_taxonomy(), corpus, iri("E"))
    assert [s for _, s in ranking] == [0.0, 0.0, 0.0]
    assert [t for t, _ in ranking] == sorted(alex_taxonomy().types)


def test_missing_description_is_an_error():
    with pytest.raises(BaselineError):
        bm25_predict(alex_taxonomy(), {iri("E"): "text"}, iri("Other"))


def test_three_document_hand_corpus():
    # d1 = "soccer player soccer" (3 tokens), d2 = "city player" (2), d3 = "city" (1)
    corpus = {iri("d1"): "soccer player soccer", iri("d2"): "city player",
              iri("d3"): "city"}
    taxonomy = TypeTaxonomy.from_edges([iri("SoccerPlayer"), iri("City")], {})
    k1, b = 1.2, 0.75
    avgdl = 2.0
    idf_soccer = math.log(1 + (3 - 1 + 0.5) / (1 + 0.5))
    idf_player = math.log(1 + (3 - 2 + 0.5) / (2 + 0.5))
    idf_city = math.log(1 + (3 - 2 + 0.5) / (2 + 0.5))

    def term(idf, tf, dl):
        return idf * tf * (k1 + 1) / (tf + k1 * (1 - b + b * dl / avgdl))

    expected = {
        iri("d1"): {iri("SoccerPlayer"): term(idf_soccer, 2, 3) + term(idf_player, 1, 3),
                    iri("City"): 0.0},
        iri("d2"): {iri("SoccerPlayer"): term(idf_player, 1, 2),
                    iri("City"): term(idf_city, 1, 2)},
        iri("d3"): {iri("SoccerPlayer"): 0.0, iri("City"): term(idf_city, 1, 1)},
    }
    index = Bm25Index.build(corpus)
    assert index.avgdl == avgdl
    for doc, scores in expected.items():
        got = dict(bm25_predict(taxonomy, corpus, doc, Bm25Config(k1, b), index))
        for t, value in scores.items():
            assert abs(got[t] - value) <= 1e-9


words = st.lists(st.sampled_from(["soccer", "player", "city", "river", "film"]),
                 min_size=1, max_size=8)


@settings(max_examples=60, deadline=None)
@given(st.lists(words, min_size=2, max_size=5), st.integers(2, 4))
def test_b_zero_length_scaling_keeps_ranking(docs, factor):
    taxonomy = TypeTaxonomy.from_edges(
        [iri(t) for t in ("SoccerPlayer", "City", "RiverFilm", "Player")], {})
    base = {iri(f"d{i}"): " ".join(d) for i, d in enumerate(docs)}
    # pad with a non-query token so every length grows by `factor`, tf unchanged
    scaled = {e: text + " zzz" * (len(text.split()) * (factor - 1))
              for e, text in base.items()}
    cfg = Bm25Config(b=0.0)
    for e in base:
        r1 = bm25_predict(taxonomy, base, e, cfg)
        r2 = bm25_predict(taxonomy, scaled, e, cfg)
        assert all(s >= 0 for _, s in r1)
        assert [t for t, _ in r1] == [t for t, _ in r2]


def test_bm25_config_validation():
    with pytest.raises(ConfigError):
        Bm25Config(k1=0)
    with pytest.raises(ConfigError):
        Bm25Config(b=1.5)


def test_ranker_wrapper():
    corpus = {iri("Alex"): "Alex Morgan is an American soccer player.",
              iri("Paris"): "Paris is a place in France."}
    model = BM25TypeRanker(alex_taxonomy()).fit(corpus)
    assert model.predict([iri("Alex"), iri("Paris")]) == [iri("SoccerPlayer"), iri("Place")]
    assert model.get_params()["k1"] == 1.2
