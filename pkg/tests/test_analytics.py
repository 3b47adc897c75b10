from collections import namedtuple

import pytest
from hypothesis import given, strategies as st

import oracles
from urlsem.analytics import (Aggregates, EmptyCell, captures_per_category_year,
                              captures_per_year, dominant_domain, entity_capture_share,
                              entity_share_per_category_year, entity_type_distribution,
                              top_entities, total_entity_captures)
from urlsem.entities import EntityMention, EntityStats

C = namedtuple("C", "year category domain entities")


def caps(*rows):
    return [C(y, cat, dom, ents) for y, cat, dom, ents in rows]


def test_captures_per_year_examples():
    s = captures_per_year(caps(*[(2000, "n", "a.de", ())] * 4, *[(2001, "n", "a.de", ())] * 6))
    assert {y: v.share for y, v in s.items()} == {2000: 0.4, 2001: 0.6}
    assert captures_per_year(caps((2005, "n", "a.de", ())))[2005].share == 1.0
    assert captures_per_year([]) == {}


def test_category_year_examples():
    cs = caps((2000, "news", "a.de", ()), (2000, "shop", "b.de", ()))
    out = captures_per_category_year(cs)
    assert out[("news", 2000)].count == 1 and out[("news", 2000)].share == 0.5
    assert list(captures_per_category_year(cs, ["shop"])) == [("shop", 2000)]
    assert captures_per_category_year(cs[:1])[("news", 2000)].share == 1.0


def test_entity_capture_share_examples():
    e = (("berlin", "location"),)
    rows = entity_capture_share(caps((2000, "edu", "a.de", e), (2001, "edu", "b.de", e),
                                     (2000, "edu", "a.de", e), (2000, "edu", "a.de", ())))
    assert rows["edu"].entity_capture_share == 75.0
    assert (rows["edu"].domains, rows["edu"].captures) == (2, 4)
    cells = entity_share_per_category_year(caps((2000, "x", "a.de", e), (2000, "x", "a.de", ())))
    assert cells == {("x", 2000): 50.0}
    assert ("x", 2001) not in cells


def test_dominant_examples():
    cs = caps(*[(2000, "n", "a.de", ())] * 3, (2000, "n", "b.de", ()))
    d = dominant_domain(cs, "n", 2000)
    assert (d.domain, d.share) == ("a.de", 0.75)
    cs = caps((2000, "n", "b.de", ()), (2000, "n", "a.de", ()),
              (2000, "n", "b.de", ()), (2000, "n", "a.de", ()))
    d = dominant_domain(cs, "n", 2000)
    assert (d.domain, d.share) == ("a.de", 0.5)
    assert Aggregates().update(cs).dominant("n", 2000) == d
    with pytest.raises(EmptyCell):
        dominant_domain(cs, "n", 2001)


def test_top_entities_examples():
    table = {("deutschland", "location"): EntityStats(10, 2301917),
             ("berlin", "location"): EntityStats(9, 628300),
             ("heidi klum", "person"): EntityStats(5, 50)}
    assert top_entities(table, "location", 1) == [("deutschland", 2301917)]
    assert top_entities(table, "location", 99) == [("deutschland", 2301917), ("berlin", 628300)]


def test_type_distribution_examples():
    m = lambda t, y="2005": EntityMention("x", t, "u", y + "0101000000", "de")
    assert entity_type_distribution([m("location")]) == {2005: {"location": 1.0}}
    d = entity_type_distribution([m("location"), m("location"), m("person"), m("person")])
    assert d == {2005: {"location": 0.5, "person": 0.5}}


def test_total_entity_captures_examples():
    e = (("berlin", "location"),)
    assert total_entity_captures(caps((2000, "n", "a.de", ()))) == 0
    assert total_entity_captures(caps(*[(2000, "n", "a.de", e)] * 7)) == 7


def check_against_oracle(recs, agg):
    assert {y: (v.count, v.share) for y, v in agg.year_series().items()} == oracles.per_year(recs)
    total = len(recs)
    cells = oracles.per_cell(recs)
    got = agg.category_year()
    assert {k: v.count for k, v in got.items()} == cells
    for k, v in got.items():
        assert abs(v.share - cells[k] / total) <= 1e-9
    rows = oracles.category_rows(recs)
    for cat, row in agg.category_report().items():
        doms, n, ne, pct = rows[cat]
        assert (row.domains, row.captures, row.entity_captures) == (doms, n, ne)
        assert abs(row.entity_capture_share - pct) <= 1e-9
    want = oracles.entity_cell_share(recs)
    got = agg.entity_share_cells()
    assert got.keys() == want.keys()
    assert all(abs(got[k] - want[k]) <= 1e-9 for k in want)
    for cat in [None] + oracles.CATS:
        for year in (2000, 2006, 2012):
            d = agg.dominant(cat, year)
            assert (d.domain, d.count, d.total) == oracles.dominant(recs, cat, year)
    want = oracles.type_shares(recs)
    got = agg.type_distribution()
    assert got.keys() == want.keys()
    for y in want:
        assert got[y].keys() == want[y].keys()
        assert all(abs(got[y][t] - want[y][t]) <= 1e-9 for t in want[y])
        assert abs(sum(got[y].values()) - 1) <= 1e-9
    assert agg.entity_captures == sum(1 for r in recs if r.entities)


def test_oracle_recount_on_fixture():
    recs = oracles.random_records(3000, seed=1)
    check_against_oracle(recs, Aggregates().update(recs))


@given(st.integers(0, 2**16), st.lists(st.integers(0, 400), max_size=4))
def test_merge_equals_single_pass(seed, cuts):
    recs = oracles.random_records(400, seed)
    bounds = [0] + sorted(cuts) + [len(recs)]
    parts = [Aggregates().update(recs[a:b]) for a, b in zip(bounds, bounds[1:])]
    left = parts[0]
    for p in parts[1:]:
        left = left.merge(p)
    right = parts[-1]
    for p in reversed(parts[:-1]):
        right = p.merge(right)
    whole = Aggregates().update(recs)
    for agg in (left, right):
        assert agg.captures == whole.captures and agg.by_year == whole.by_year
        assert agg.by_domain_cell == whole.by_domain_cell
        assert agg.types_by_year == whole.types_by_year
        assert agg.category_report() == whole.category_report()
        assert agg.entity_share_cells() == whole.entity_share_cells()


@given(st.integers(0, 2**16), st.sampled_from(oracles.CATS), st.integers(2000, 2012))
def test_adding_entity_capture_is_monotone(seed, cat, year):
    recs = oracles.random_records(200, seed)
    before = Aggregates().update(recs)
    new = oracles.Rec("http://x.de/n.html", f"{year}0101000000", year, cat, "x.de",
                      (("berlin", "location"),))
    after = Aggregates().update(recs + [new])
    assert after.entity_captures == before.entity_captures + 1
    assert after.entity_by_cell[cat, year] == before.entity_by_cell[cat, year] + 1
    assert after.by_cell[cat, year] == before.by_cell[cat, year] + 1
    assert all(after.types_by_year[k] >= v for k, v in before.types_by_year.items())


@given(st.integers(0, 2**16))
def test_shares_are_normalised(seed):
    recs = oracles.random_records(150, seed)
    agg = Aggregates().update(recs)
    assert abs(sum(v.share for v in agg.year_series().values()) - 1) <= 1e-9
    assert abs(sum(v.share for v in agg.category_year().values()) - 1) <= 1e-9
    for shares in agg.type_distribution().values():
        assert abs(sum(shares.values()) - 1) <= 1e-9
    for pct in agg.entity_share_cells().values():
        assert 0.0 <= pct <= 100.0
