import numpy as np
import pytest

from neutype.datasets import make_synthetic_kb
from neutype.embeddings import WordVectorTable
from neutype.kb import KBBuilder

X = "http://x/"


def iri(name):
    return X + name


@pytest.fixture(autouse=True)
def _isolated_cache(tmp_path, monkeypatch):
    monkeypatch.setenv("NEUTYPE_CACHE_DIR", str(tmp_path / "cache"))


@pytest.fixture
def small_kb():
    """Person > Athlete/Scientist, Place > City; a handful of linked entities."""
    b = KBBuilder()
    b.add_subclass(iri("Person"), "http://www.w3.org/2002/07/owl#Thing")
    b.add_subclass(iri("Athlete"), iri("Person"))
    b.add_subclass(iri("Scientist"), iri("Person"))
    b.add_subclass(iri("City"), iri("Place"))
    for e, types, text in [
        ("E1", ["Person", "Athlete"], "soccer player goal"),
        ("E2", ["Person", "Scientist"], "physics lab"),
        ("E3", ["Place", "City"], "river town"),
        ("E4", ["Person"], "unknown words only zzz"),
    ]:
        for t in types:
            b.add_type_assignment(iri(e), iri(t))
        b.add_description(iri(e), text)
    b.add_link(iri("E1"), iri("p"), iri("E2"))
    b.add_link(iri("E3"), iri("q"), iri("E1"))
    b.add_link(iri("E4"), iri("p"), iri("E5"))
    return b.build()


@pytest.fixture
def small_table():
    words = ["soccer", "player", "goal", "physics", "lab", "river", "town"]
    rng = np.random.default_rng(1)
    return WordVectorTable.from_dict({w: rng.normal(size=4) for w in words})


@pytest.fixture(scope="session")
def synthetic_small():
    return make_synthetic_kb(n_entities=400, seed=3, dim=16)


def pytest_configure(config):
    config.neutype_criteria = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "neutype_criteria", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
