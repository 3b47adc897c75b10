"""Temporal and per-category aggregates over annotated captures.

Everything is an integer count; shares and percentages are divided out
only when a result is read.  Counts live in :class:`Aggregates`, a single
pass accumulator whose instances merge by addition, so partitions of a
corpus can be counted separately.

Records passed in need ``year``, ``category`` and ``domain`` attributes;
``entities`` (a sequence of ``(label, type)``) where entity figures are
asked for.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

WHOLE_CORPUS = None


class EmptyCell(ValueError):
    pass


@dataclass(frozen=True)
class YearShare:
    count: int
    share: float


@dataclass(frozen=True)
class CategoryRow:
    category: str
    domains: int
    captures: int
    entity_captures: int

    @property
    def entity_capture_share(self) -> float:
        return 100.0 * self.entity_captures / self.captures if self.captures else 0.0


@dataclass(frozen=True)
class DominanceRecord:
    category: str | None
    year: int
    domain: str
    count: int
    total: int

    @property
    def share(self) -> float:
        return self.count / self.total


@dataclass
class Aggregates:
    """Counts behind every report, filled in one pass."""

    captures: int = 0
    entity_captures: int = 0
    by_year: Counter = field(default_factory=Counter)
    by_cell: Counter = field(default_factory=Counter)            # (category, year)
    entity_by_cell: Counter = field(default_factory=Counter)     # (category, year)
    by_domain_cell: Counter = field(default_factory=Counter)     # (category, year, domain)
    domains: dict = field(default_factory=lambda: defaultdict(set))  # category -> domains
    types_by_year: Counter = field(default_factory=Counter)      # (year, type)

    def add(self, rec) -> None:
        cat, year = rec.category, rec.year
        self.captures += 1
        self.by_year[year] += 1
        self.by_cell[cat, year] += 1
        self.by_domain_cell[cat, year, rec.domain] += 1
        self.domains[cat].add(rec.domain)
        ents = getattr(rec, "entities", ())
        if ents:
            self.entity_captures += 1
            self.entity_by_cell[cat, year] += 1
            for _, etype in ents:
                self.types_by_year[year, etype] += 1

    def update(self, records: Iterable) -> "Aggregates":
        for r in records:
            self.add(r)
        return self

    def merge(self, other: "Aggregates") -> "Aggregates":
        out = Aggregates(self.captures + other.captures,
                         self.entity_captures + other.entity_captures)
        for name in ("by_year", "by_cell", "entity_by_cell", "by_domain_cell", "types_by_year"):
            getattr(out, name).update(getattr(self, name))
            getattr(out, name).update(getattr(other, name))
        for src in (self.domains, other.domains):
            for cat, doms in src.items():
                out.domains[cat] |= doms
        return out

    # -- views --------------------------------------------------------------

    def year_series(self) -> dict[int, YearShare]:
        return {y: YearShare(c, c / self.captures) for y, c in sorted(self.by_year.items())}

    def category_year(self, categories: Sequence[str] | None = None) -> dict:
        keep = set(categories) if categories else None
        return {cell: YearShare(c, c / self.captures)
                for cell, c in sorted(self.by_cell.items())
                if keep is None or cell[0] in keep}

    def category_report(self) -> dict[str, CategoryRow]:
        caps, ents = Counter(), Counter()
        for (cat, _), c in self.by_cell.items():
            caps[cat] += c
        for (cat, _), c in self.entity_by_cell.items():
            ents[cat] += c
        return {cat: CategoryRow(cat, len(self.domains[cat]), caps[cat], ents[cat])
                for cat in sorted(caps)}

    def entity_share_cells(self, categories: Sequence[str] | None = None) -> dict:
        keep = set(categories) if categories else None
        return {cell: 100.0 * self.entity_by_cell[cell] / c
                for cell, c in sorted(self.by_cell.items())
                if keep is None or cell[0] in keep}

    def dominant(self, category: str | None, year: int) -> DominanceRecord:
        counts = Counter()
        for (cat, y, dom), c in self.by_domain_cell.items():
            if y == year and (category is None or cat == category):
                counts[dom] += c
        if not counts:
            raise EmptyCell(f"no captures for category={category!r} year={year}")
        domain, count = min(counts.items(), key=lambda kv: (-kv[1], kv[0]))
        return DominanceRecord(category, year, domain, count, sum(counts.values()))

    def type_distribution(self) -> dict[int, dict[str, float]]:
        per_year = Counter()
        for (year, _), c in self.types_by_year.items():
            per_year[year] += c
        out = defaultdict(dict)
        for (year, etype), c in sorted(self.types_by_year.items()):
            out[year][etype] = c / per_year[year]
        return dict(out)


def captures_per_year(captures: Iterable) -> dict[int, YearShare]:
    return Aggregates().update(captures).year_series()


def captures_per_category_year(captures: Iterable, categories: Sequence[str] | None = None) -> dict:
    """(category, year) -> count and share of the whole corpus."""
    return Aggregates().update(captures).category_year(categories)


def entity_capture_share(records: Iterable) -> dict[str, CategoryRow]:
    return Aggregates().update(records).category_report()


def entity_share_per_category_year(records: Iterable,
                                   categories: Sequence[str] | None = None) -> dict:
    return Aggregates().update(records).entity_share_cells(categories)


def dominant_domain(captures: Iterable, category: str | None, year: int) -> DominanceRecord:
    """Domain with the most captures in the cell; ties go to the
    lexicographically smallest domain.  ``category=None`` scans the whole
    corpus for that year."""
    counts = Counter(c.domain for c in captures
                     if c.year == year and (category is None or c.category == category))
    if not counts:
        raise EmptyCell(f"no captures for category={category!r} year={year}")
    domain, count = min(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return DominanceRecord(category, year, domain, count, sum(counts.values()))


def top_entities(table: Mapping, entity_type: str, k: int) -> list[tuple[str, int]]:
    if k < 1:
        raise ValueError("k must be >= 1")
    rows = [(label, st.capture_frequency) for (label, etype), st in table.items()
            if etype == entity_type]
    rows.sort(key=lambda r: (-r[1], r[0]))
    return rows[:k]


def entity_type_distribution(mentions: Iterable) -> dict[int, dict[str, float]]:
    """Year -> entity type -> share among that year's mentions.

    Accepts :class:`~urlsem.entities.EntityMention` objects (year taken
    from the timestamp) or anything with ``year`` and ``entity_type``.
    """
    counts = Counter()
    for m in mentions:
        year = m.year if hasattr(m, "year") else int(m.timestamp[:4])
        counts[year, m.entity_type] += 1
    agg = Aggregates(types_by_year=counts)
    return agg.type_distribution()


def total_entity_captures(records: Iterable) -> int:
    return sum(1 for r in records if r.entities)
