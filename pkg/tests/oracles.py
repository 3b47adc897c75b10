"""Independent brute-force recounts used as test oracles.

Written without reference to the library's accumulators: plain loops over
materialised lists, recomputed from scratch for every question.
"""

import random
import re
from collections import namedtuple

Rec = namedtuple("Rec", "url timestamp year category domain entities")

CATS = ["news", "universities", "shopping", "sports", "uncategorized"]
DOMS = {c: [f"{c[:4]}{i}.de" for i in range(4)] for c in CATS}
ENTS = [("berlin", "location"), ("kassel", "location"), ("heidi klum", "person"),
        ("siemens", "organization"), ("costa concordia", "misc")]


def random_records(n, seed):
    rng = random.Random(seed)
    out = []
    for i in range(n):
        cat = rng.choice(CATS)
        year = rng.randint(2000, 2012)
        k = rng.choice([0, 0, 1, 1, 2, 3])
        ents = tuple(rng.sample(ENTS, k))
        out.append(Rec(f"http://{rng.choice(DOMS[cat])}/{i}.html", f"{year}0101000000",
                       year, cat, rng.choice(DOMS[cat]), ents))
    return out


def admitted_oracle(records):
    """html extension on the URL path and some capture of the same URL key had a 2xx."""
    ever_ok = set()
    for r in records:
        if re.fullmatch(r"2\d\d", r.status_code):
            ever_ok.add(r.url_key if r.url_key != "-" else None)
    out = []
    for r in records:
        path = re.sub(r"^[a-zA-Z]+://[^/]*", "", r.original_url)
        path = re.split(r"[?#]", path)[0].lower()
        if re.search(r"\.html?$", path) and r.url_key in ever_ok:
            out.append(r)
    return out


def postfilter_oracle(table, max_terms=2, min_url_freq=3):
    return {k: v for k, v in table.items()
            if len(k[0].split(" ")) <= max_terms and v.url_frequency >= min_url_freq}


def per_year(recs):
    years = sorted({r.year for r in recs})
    return {y: (sum(1 for r in recs if r.year == y),
                sum(1 for r in recs if r.year == y) / len(recs)) for y in years}


def per_cell(recs):
    cells = sorted({(r.category, r.year) for r in recs})
    return {c: sum(1 for r in recs if (r.category, r.year) == c) for c in cells}


def category_rows(recs):
    out = {}
    for cat in sorted({r.category for r in recs}):
        mine = [r for r in recs if r.category == cat]
        with_ents = [r for r in mine if r.entities]
        out[cat] = (len({r.domain for r in mine}), len(mine), len(with_ents),
                    100.0 * len(with_ents) / len(mine))
    return out


def entity_cell_share(recs):
    out = {}
    for cell in sorted({(r.category, r.year) for r in recs}):
        mine = [r for r in recs if (r.category, r.year) == cell]
        out[cell] = 100.0 * sum(1 for r in mine if r.entities) / len(mine)
    return out


def dominant(recs, category, year):
    mine = [r for r in recs if r.year == year and (category is None or r.category == category)]
    doms = sorted({r.domain for r in mine})
    best = max(doms, key=lambda d: (sum(1 for r in mine if r.domain == d), -doms.index(d)))
    return best, sum(1 for r in mine if r.domain == best), len(mine)


def type_shares(recs):
    out = {}
    for y in sorted({r.year for r in recs}):
        types = [t for r in recs if r.year == y for _, t in r.entities]
        if types:
            out[y] = {t: types.count(t) / len(types) for t in sorted(set(types))}
    return out
