"""Report files over an annotated corpus.

Each report is a list of rows written as CSV and JSON; reports that
feed a figure also get a ``x<TAB>series<TAB>value`` TSV.  Percentages
print with two decimals, fractions with six.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .analytics import Aggregates, top_entities
from .entities import ENTITY_TYPES, EntityTable
from .pipeline import (ANNOTATIONS, ANNOTATIONS_RAW, ENTITY_TABLE, ENTITY_TABLE_RAW,
                       read_annotations)

ALL = "ALL"


class UnknownReport(ValueError):
    pass


class MissingCorpus(FileNotFoundError):
    pass


@dataclass
class ReportSpec:
    names: Sequence[str] = ()
    categories: Sequence[str] | None = None
    years: Sequence[int] | None = None
    top_k: int = 10
    types: Sequence[str] | None = None
    prefilter: bool = False


# name -> (columns, value formats, plot columns or None)
REPORTS = {
    "captures_per_year": (("year", "count", "share"), (None, None, "frac"),
                          ("year", None, "share")),
    "captures_per_category_year": (("category", "year", "count", "share"),
                                   (None, None, None, "frac"), ("year", "category", "share")),
    "categories": (("category", "domains", "captures", "entity_captures", "entities_pct"),
                   (None, None, None, None, "pct"), None),
    "entity_share_category_year": (("category", "year", "captures", "entity_captures",
                                    "entities_pct"), (None, None, None, None, "pct"),
                                   ("year", "category", "entities_pct")),
    "dominant_domains": (("scope", "year", "domain", "count", "total", "share_pct"),
                         (None, None, None, None, None, "pct"), None),
    "top_entities": (("type", "rank", "label", "frequency"), (None,) * 4, None),
    "entity_types_by_year": (("year", "type", "count", "share"), (None, None, None, "frac"),
                             ("year", "type", "share")),
    "summary": (("captures", "entity_captures", "entity_capture_pct"), (None, None, "pct"), None),
}


def _fmt(value, kind):
    if kind == "pct":
        return f"{value:.2f}"
    if kind == "frac":
        return f"{value:.6f}"
    return value


def build_rows(name: str, agg: Aggregates, table: EntityTable, spec: ReportSpec) -> list[dict]:
    cats = set(spec.categories) if spec.categories else None
    years = set(spec.years) if spec.years else None

    def keep(cat=None, year=None):
        return (cats is None or cat is None or cat in cats) and \
               (years is None or year is None or year in years)

    rows = []
    if name == "captures_per_year":
        for y, ys in agg.year_series().items():
            if keep(year=y):
                rows.append({"year": y, "count": ys.count, "share": ys.share})
    elif name == "captures_per_category_year":
        for (c, y), ys in agg.category_year().items():
            if keep(c, y):
                rows.append({"category": c, "year": y, "count": ys.count, "share": ys.share})
    elif name == "categories":
        report = agg.category_report().values()
        report = sorted(report, key=lambda r: (-r.entity_capture_share, r.category))
        for r in report:
            if keep(r.category):
                rows.append({"category": r.category, "domains": r.domains, "captures": r.captures,
                             "entity_captures": r.entity_captures,
                             "entities_pct": r.entity_capture_share})
    elif name == "entity_share_category_year":
        shares = agg.entity_share_cells()
        for (c, y), pct in shares.items():
            if keep(c, y):
                rows.append({"category": c, "year": y, "captures": agg.by_cell[c, y],
                             "entity_captures": agg.entity_by_cell[c, y], "entities_pct": pct})
    elif name == "dominant_domains":
        cells = sorted({(c, y) for (c, y) in agg.by_cell})
        scopes = [(ALL, y) for y in sorted(agg.by_year)] + cells
        for scope, y in scopes:
            if not keep(None if scope == ALL else scope, y):
                continue
            d = agg.dominant(None if scope == ALL else scope, y)
            rows.append({"scope": scope, "year": y, "domain": d.domain, "count": d.count,
                         "total": d.total, "share_pct": 100.0 * d.share})
    elif name == "top_entities":
        present = sorted({t for _, t in table})
        types = spec.types or [t for t in ENTITY_TYPES if t in present]
        for etype in types:
            for rank, (label, freq) in enumerate(top_entities(table, etype, spec.top_k), 1):
                rows.append({"type": etype, "rank": rank, "label": label, "frequency": freq})
    elif name == "entity_types_by_year":
        for y, shares in agg.type_distribution().items():
            if not keep(year=y):
                continue
            for etype, share in shares.items():
                if spec.types and etype not in spec.types:
                    continue
                rows.append({"year": y, "type": etype, "count": agg.types_by_year[y, etype],
                             "share": share})
    elif name == "summary":
        pct = 100.0 * agg.entity_captures / agg.captures if agg.captures else 0.0
        rows.append({"captures": agg.captures, "entity_captures": agg.entity_captures,
                     "entity_capture_pct": pct})
    else:
        raise UnknownReport(name)
    return rows


def write_report(name: str, rows: list[dict], out_dir: Path) -> list[Path]:
    columns, kinds, plot = REPORTS[name]
    paths = [out_dir / f"{name}.csv", out_dir / f"{name}.json"]
    with open(paths[0], "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row[c], k) for c, k in zip(columns, kinds)])
    with open(paths[1], "w", encoding="utf-8") as fh:
        json.dump(rows, fh, ensure_ascii=False, indent=1)
        fh.write("\n")
    if plot is not None:
        x, series, value = plot
        paths.append(out_dir / f"{name}.tsv")
        with open(paths[2], "w", encoding="utf-8", newline="\n") as fh:
            fh.write("x\tseries\tvalue\n")
            for row in rows:
                fh.write(f"{row[x]}\t{row[series] if series else 'all'}\t{row[value]!r}\n")
    return paths


def run_report(corpus_dir, out_dir, spec: ReportSpec) -> list[Path]:
    corpus_dir, out_dir = Path(corpus_dir), Path(out_dir)
    ann = corpus_dir / (ANNOTATIONS_RAW if spec.prefilter else ANNOTATIONS)
    tab = corpus_dir / (ENTITY_TABLE_RAW if spec.prefilter else ENTITY_TABLE)
    if not ann.is_file() or not tab.is_file():
        raise MissingCorpus(f"no annotated corpus in {corpus_dir}")
    names = list(spec.names) or list(REPORTS)
    for name in names:
        if name not in REPORTS:
            raise UnknownReport(f"unknown report {name!r}; choose from {', '.join(REPORTS)}")
    agg = Aggregates().update(read_annotations(ann))
    table = EntityTable.read_csv(tab)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name in names:
        written += write_report(name, build_rows(name, agg, table, spec), out_dir)
    return written
