import itertools
import json
import math
from collections import defaultdict, deque

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from neutype.evaluation import (GainMode, aggregate_runs, build_report, gain, ndcg_at_1,
                                paired_t_test, t_two_sided_p, type_distance)
from neutype.exceptions import ConfigError, EvaluationError, UnknownTypeError
from neutype.kb import TypeTaxonomy

from conftest import iri

# Agent > Person > {Athlete > SoccerPlayer, Scientist}; Place > City; Work
PARENTS = {"Person": "Agent", "Athlete": "Person", "Scientist": "Person",
           "SoccerPlayer": "Athlete", "City": "Place"}
TAX = TypeTaxonomy.from_edges([iri(t) for t in ("Agent", "Place", "Work")],
                              {iri(c): iri(p) for c, p in PARENTS.items()})


def bfs_distance(taxonomy, a, b):
    """Shortest path in the undirected forest with a virtual root node."""
    adj = defaultdict(set)
    for t in taxonomy.types:
        p = taxonomy.parent.get(t, "<root>")
        adj[t].add(p)
        adj[p].add(t)
    seen, queue = {a: 0}, deque([a])
    while queue:
        node = queue.popleft()
        for nxt in adj[node]:
            if nxt not in seen:
                seen[nxt] = seen[node] + 1
                queue.append(nxt)
    return seen[b]


def test_distance_examples():
    assert type_distance(TAX, iri("Athlete"), iri("Athlete")) == 0
    assert type_distance(TAX, iri("Person"), iri("Athlete")) == 1
    assert type_distance(TAX, iri("Athlete"), iri("Scientist")) == 2
    assert type_distance(TAX, iri("SoccerPlayer"), iri("City")) == 6
    with pytest.raises(UnknownTypeError):
        type_distance(TAX, iri("Athlete"), iri("Nope"))


def test_distance_is_bfs_path_length_and_a_metric():
    types = TAX.types
    for a, b in itertools.product(types, repeat=2):
        d = type_distance(TAX, a, b)
        assert d == bfs_distance(TAX, a, b)
        assert d == type_distance(TAX, b, a)
        assert (d == 0) == (a == b)
    for a, b, c in itertools.product(types, repeat=3):
        assert type_distance(TAX, a, c) <= type_distance(TAX, a, b) + type_distance(TAX, b, c)


def test_gain_values_exact():
    assert gain(GainMode("strict"), 0) == 1
    assert gain(GainMode("strict"), 3) == 0
    assert abs(gain(GainMode("linear", h=6), 1) - 5 / 6) <= 1e-12
    assert gain(GainMode("linear", h=6), 7) == 0
    assert abs(gain(GainMode("exponential"), 2) - 0.25) <= 1e-12
    with pytest.raises(ValueError):
        gain(GainMode("strict"), -1)


def test_gain_mode_validation():
    with pytest.raises(ConfigError):
        GainMode("cubic")
    with pytest.raises(ConfigError):
        GainMode("exponential", base=1.0)


@pytest.mark.parametrize("d", range(0, 7))
def test_strict_le_exponential_le_linear(d):
    s = gain(GainMode("strict"), d)
    e = gain(GainMode("exponential", base=2.0), d)
    lin = gain(GainMode("linear", h=6), d)
    assert s <= e
    if d <= 5:
        assert e <= lin


HAND_GOLD = {f"e{i}": iri(t) for i, t in enumerate(
    ["Athlete", "Athlete", "Scientist", "City", "City", "Work", "SoccerPlayer",
     "Person", "Place", "Scientist"])}
HAND_PRED = {"e0": iri("Athlete"), "e1": iri("Person"), "e2": iri("Athlete"),
             "e3": iri("Place"), "e4": iri("Work"), "e5": iri("Work"),
             "e6": iri("Agent"), "e8": iri("City"), "e9": iri("Scientist")}
# e7 gets no prediction and scores 0


@pytest.mark.parametrize("kind", ["strict", "linear", "exponential"])
def test_ten_entity_hand_set(kind):
    mode = GainMode(kind, h=TAX.h)
    total = 0.0
    for e, g in HAND_GOLD.items():
        if e not in HAND_PRED:
            continue
        d = bfs_distance(TAX, HAND_PRED[e], g)
        total += {"strict": float(d == 0), "linear": max(0.0, 1 - d / TAX.h),
                  "exponential": 2.0 ** -d}[kind]
    assert abs(ndcg_at_1(HAND_PRED, HAND_GOLD, mode, TAX) - total / 10) <= 1e-12


def test_hand_set_frozen_values():
    # distances: 0, 1, 2, 1, 3, 0, 3, -, 1, 0 with h = 4
    assert ndcg_at_1(HAND_PRED, HAND_GOLD, GainMode("strict", 4), TAX) == pytest.approx(0.3)
    lin = (1 + .75 + .5 + .75 + .25 + 1 + .25 + 0 + .75 + 1) / 10
    assert ndcg_at_1(HAND_PRED, HAND_GOLD, GainMode("linear", 4), TAX) == pytest.approx(lin)


def test_ndcg_simple_cases():
    gold = {"a": iri("Athlete"), "b": iri("City")}
    for kind in ("strict", "linear", "exponential"):
        assert ndcg_at_1(gold, gold, GainMode(kind, TAX.h), TAX) == 1.0
    pred = {"a": iri("Athlete"), "b": iri("Work")}
    assert ndcg_at_1(pred, gold, GainMode("strict"), TAX) == 0.5
    with pytest.raises(EvaluationError):
        ndcg_at_1({"zzz": iri("City")}, gold, GainMode("strict"), TAX)


@settings(max_examples=50, deadline=None)
@given(st.randoms())
def test_ndcg_invariant_under_reordering(rnd):
    items = list(HAND_GOLD.items())
    rnd.shuffle(items)
    mode = GainMode("exponential", TAX.h)
    assert ndcg_at_1(HAND_PRED, dict(items), mode, TAX) == pytest.approx(
        ndcg_at_1(HAND_PRED, HAND_GOLD, mode, TAX), abs=1e-15)


def test_aggregate_runs():
    mean, s = aggregate_runs([0.8] * 5)
    assert mean == pytest.approx(0.8) and s == pytest.approx(0.0, abs=1e-15)
    mean, s = aggregate_runs([0.0, 1.0])
    assert mean == 0.5 and s == pytest.approx(math.sqrt(0.5))
    with pytest.warns(UserWarning):
        assert aggregate_runs([0.7]) == (0.7, 0.0)


def oracle_p(t, dof):
    """Two-sided p from the regularized incomplete beta at 50 digits."""
    with mpmath.workdps(50):
        x = mpmath.mpf(dof) / (dof + mpmath.mpf(t) ** 2)
        return float(mpmath.betainc(mpmath.mpf(dof) / 2, mpmath.mpf(1) / 2, 0, x,
                                    regularized=True))


X10 = [0.91, 0.85, 0.78, 0.88, 0.95, 0.70, 0.83, 0.89, 0.76, 0.92]
Y10 = [0.85, 0.80, 0.80, 0.81, 0.90, 0.66, 0.79, 0.82, 0.77, 0.84]


def test_t_test_matches_high_precision_oracle():
    t, p = paired_t_test(X10, Y10)
    d = [x - y for x, y in zip(X10, Y10)]
    mean = sum(d) / 10
    sd = math.sqrt(sum((v - mean) ** 2 for v in d) / 9)
    assert t == pytest.approx(mean / (sd / math.sqrt(10)), rel=1e-12)
    assert abs(p - oracle_p(t, 9)) <= 1e-6


@pytest.mark.parametrize("t", [0.1, 1.0, 2.262, 4.5, 12.0])
def test_t_tail_matches_oracle_across_range(t):
    for dof in (1, 4, 9, 30):
        assert abs(t_two_sided_p(t, dof) - oracle_p(t, dof)) <= 1e-8


def test_t_test_degenerate_cases():
    assert paired_t_test(X10, X10) == (0.0, 1.0)
    t, p = paired_t_test([2, 3, 4, 5], [1, 2, 3, 4])
    assert t == math.inf and p == 0.0
    with pytest.raises(EvaluationError):
        paired_t_test([1, 2], [1, 2, 3])
    with pytest.raises(EvaluationError):
        paired_t_test([1], [2])


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1)), min_size=2, max_size=15))
def test_t_test_antisymmetry(pairs):
    x, y = zip(*pairs)
    t1, p1 = paired_t_test(x, y)
    t2, p2 = paired_t_test(y, x)
    assert t1 == -t2 or (t1 == 0 and t2 == 0)
    assert p1 == pytest.approx(p2, abs=1e-12)
    assert 0.0 <= p1 <= 1.0


def test_build_report_layout():
    gold = dict(HAND_GOLD)
    runs = [dict(HAND_PRED), dict(gold)]
    report = build_report({"SDType": [dict(HAND_PRED)], "NeuType1": runs}, gold, TAX,
                          baseline="SDType")
    table = report.to_table()
    lines = table.splitlines()
    assert lines[0].split("\t") == ["system", "strict_ndcg@1", "strict_s", "linear_ndcg@1",
                                    "linear_s", "exponential_ndcg@1", "exponential_s"]
    sd_row = lines[1].split("\t")
    assert sd_row[0] == "SDType" and sd_row[2] == "-"
    nt_row = lines[2].split("\t")
    assert float(nt_row[1]) == pytest.approx((0.3 + 1.0) / 2, abs=1e-4)
    assert "# significance" in table
    assert ("NeuType1", "SDType", "strict") in report.significance
    records = [json.loads(line) for line in report.to_jsonl().splitlines()]
    assert {r["record"] for r in records} == {"score", "significance"}


def test_run_pairing():
    gold = dict(HAND_GOLD)
    report = build_report({"A": [HAND_PRED, gold, gold], "B": [HAND_PRED] * 3}, gold, TAX,
                          pairs=[("A", "B")], pairing="run")
    t, p = report.significance[("A", "B", "strict")]
    assert t > 0 and 0 < p < 1
