import pytest

from neutype.exceptions import ConfigError, SamplerError
from neutype.kb import KBBuilder, TypeTaxonomy
from neutype.sampling import (SamplerConfig, branch_of, sample_test_set, top_level_types,
                              training_universe)

from conftest import iri

DBO = "http://dbpedia.org/ontology/"


def dbo(name):
    return DBO + name


def test_top_level_rule():
    tax = TypeTaxonomy.from_edges([dbo("Place"), dbo("Work")],
                                  {dbo("Person"): dbo("Agent"),
                                   dbo("Organization"): dbo("Agent")})
    assert top_level_types(tax) == sorted(dbo(t) for t in
                                          ("Organization", "Person", "Place", "Work"))


def test_top_level_without_agent():
    tax = TypeTaxonomy.from_edges([dbo("Place"), dbo("Work")], {dbo("City"): dbo("Place")})
    assert top_level_types(tax) == [dbo("Place"), dbo("Work")]


def test_top_level_missing_replacement_warns(caplog):
    tax = TypeTaxonomy.from_edges([dbo("Place")], {dbo("Person"): dbo("Agent")})
    assert top_level_types(tax) == [dbo("Person"), dbo("Place")]
    assert "Organization" in caplog.text


def test_dbpedia_shaped_thirty_types():
    edges = {
        "Person": "Agent", "Organization": "Agent", "Family": "Agent",
        "Athlete": "Person", "SoccerPlayer": "Athlete", "Scientist": "Person",
        "Company": "Organization", "SportsTeam": "Organization",
        "City": "PopulatedPlace", "Country": "PopulatedPlace",
        "PopulatedPlace": "Place", "Building": "ArchitecturalStructure",
        "ArchitecturalStructure": "Place", "Film": "Work", "Book": "WrittenWork",
        "WrittenWork": "Work", "Album": "MusicalWork", "MusicalWork": "Work",
        "Mammal": "Animal", "Animal": "Species", "Plant": "Species",
        "Election": "SocietalEvent", "SocietalEvent": "Event",
    }
    roots = ["Agent", "Place", "Work", "Species", "Event", "Disease", "Food"]
    tax = TypeTaxonomy.from_edges([dbo(t) for t in roots],
                                  {dbo(c): dbo(p) for c, p in edges.items()})
    assert len(tax) == 30
    # hand application: depth-1 types, Agent out, Person and Organization in
    expected = ["Disease", "Event", "Food", "Organization", "Person", "Place",
                "Species", "Work"]
    assert top_level_types(tax) == [dbo(t) for t in expected]
    tops = top_level_types(tax)
    assert branch_of(tax, dbo("SoccerPlayer"), tops) == dbo("Person")
    assert branch_of(tax, dbo("Family"), tops) is None


def flat_kb(sizes, with_description=True):
    """One top-level type per entry of ``sizes`` with that many typed entities."""
    b = KBBuilder()
    for k, n in enumerate(sizes):
        t = iri(f"T{k:02d}")
        b.add_class(t)
        for i in range(n):
            e = iri(f"T{k:02d}_e{i:03d}")
            b.add_type_assignment(e, t)
            if with_description:
                b.add_description(e, "text")
    return b.build()


def test_twelve_branches_total_thousand():
    kb = flat_kb([90] * 12)
    result = sample_test_set(kb, SamplerConfig(m=10, total=1000, seed=5))
    assert len(result) == len(set(result.entities)) == 1000
    assert sum(result.branch_counts.values()) == 120
    assert all(n == 10 for n in result.branch_counts.values())
    assert result.reserved_training == []
    for e in result.entities:
        assert result.gold[e] == next(iter(kb.types_of(e)))


def test_small_branch_reservation():
    kb = flat_kb([4, 20])
    result = sample_test_set(kb, SamplerConfig(m=10, total=13, seed=1))
    small = iri("T00")
    assert result.branch_counts[small] == 3
    assert len(result.reserved_training) == 1
    reserved = result.reserved_training[0]
    assert kb.types_of(reserved) == {small}
    assert reserved not in result.entities
    assert reserved in training_universe(kb, [result])


def test_no_reservation_takes_all():
    kb = flat_kb([4, 20])
    result = sample_test_set(kb, SamplerConfig(m=10, total=14, reserve_for_training=False))
    assert result.branch_counts[iri("T00")] == 4
    assert result.reserved_training == []


def test_same_seed_same_sample():
    kb = flat_kb([30] * 5)
    a = sample_test_set(kb, SamplerConfig(m=10, total=100, seed=7))
    b = sample_test_set(kb, SamplerConfig(m=10, total=100, seed=7))
    c = sample_test_set(kb, SamplerConfig(m=10, total=100, seed=8))
    assert a.entities == b.entities and a.gold == b.gold
    assert a.entities != c.entities


def test_shortfall_is_an_error():
    kb = flat_kb([5, 5])
    with pytest.raises(SamplerError, match="short by"):
        sample_test_set(kb, SamplerConfig(m=2, total=50))
    with pytest.raises(ConfigError):
        sample_test_set(kb, SamplerConfig(m=2, total=1))


def test_descriptions_and_required_entities():
    kb = flat_kb([20, 20], with_description=False)
    with pytest.raises(SamplerError):
        sample_test_set(kb, SamplerConfig(m=2, total=4))
    result = sample_test_set(kb, SamplerConfig(m=2, total=4, require_description=False))
    assert len(result) == 4
    allowed = frozenset(e for e in kb.typed_entities() if e.endswith(("001", "002", "003")))
    result = sample_test_set(kb, SamplerConfig(m=2, total=6, require_description=False,
                                               required_entities=allowed))
    assert set(result.entities) == set(allowed)


def test_entity_in_two_branches_claimed_once():
    b = KBBuilder()
    for t in ("A", "B"):
        b.add_class(iri(t))
    for i in range(12):
        e = iri(f"e{i}")
        b.add_type_assignment(e, iri("A"))
        b.add_type_assignment(e, iri("B"))
        b.add_description(e, "x")
    kb = b.build()
    result = sample_test_set(kb, SamplerConfig(m=5, total=12))
    assert result.branch_counts == {iri("A"): 5, iri("B"): 0}
    assert len(set(result.entities)) == 12


def test_second_test_set_is_disjoint():
    kb = flat_kb([40] * 4)
    first = sample_test_set(kb, SamplerConfig(m=5, total=50, seed=0))
    second = sample_test_set(kb, SamplerConfig(m=5, total=50, seed=1),
                             exclude=first.entities)
    assert not set(first.entities) & set(second.entities)
    universe = training_universe(kb, [first, second])
    assert len(universe) == 160 - 100
    assert not universe & set(first.entities)
    assert not universe & set(second.entities)
