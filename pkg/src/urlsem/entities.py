"""Entity extraction from URL tokens and the corpus-level post-filter.

The built-in extractor is a gazetteer matched greedily, longest match
first, left to right.  Any callable ``(tokens, language) -> [(label,
type), ...]`` can stand in for it.
"""

from __future__ import annotations

import csv
import logging
from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Mapping, Sequence

from .tokens import MIN_TOKEN_LEN, UrlSample

log = logging.getLogger(__name__)

ENTITY_TYPES = ("location", "person", "organization", "misc")
MAX_TERMS = 2
MIN_URL_FREQ = 3

Extractor = Callable[[Sequence[str], str], list]


@dataclass(frozen=True, slots=True)
class EntityMention:
    label: str
    entity_type: str
    url: str
    timestamp: str
    language: str

    @property
    def key(self) -> tuple[str, str]:
        return (self.label, self.entity_type)


class Gazetteer:
    """Token-sequence dictionaries per language."""

    def __init__(self, entries: Mapping[str, Mapping[tuple[str, ...], str]] | None = None):
        self.entries: dict[str, dict[tuple[str, ...], str]] = {}
        self.max_len = 0
        for lang, table in (entries or {}).items():
            for seq, etype in table.items():
                self.add(" ".join(seq), etype, lang)

    def add(self, label: str, entity_type: str, language: str) -> None:
        seq = tuple(label.lower().split())
        if not seq:
            raise ValueError("empty gazetteer label")
        if entity_type not in ENTITY_TYPES:
            raise ValueError(f"unknown entity type {entity_type!r}")
        if any(len(t) < MIN_TOKEN_LEN or not t.isalpha() for t in seq):
            raise ValueError(f"label {label!r} has terms the tokenizer can never produce")
        table = self.entries.setdefault(language, {})
        old = table.get(seq)
        if old is not None and old != entity_type:
            raise ValueError(f"{label!r} listed as both {old} and {entity_type} for {language}")
        table[seq] = entity_type
        self.max_len = max(self.max_len, len(seq))

    @classmethod
    def load(cls, path) -> "Gazetteer":
        gaz = cls()
        with open(path, encoding="utf-8") as fh:
            for n, line in enumerate(fh, 1):
                line = line.rstrip("\n")
                if not line.strip() or line.startswith("#"):
                    continue
                parts = line.split("\t")
                if len(parts) != 3:
                    raise ValueError(f"{path}:{n}: expected label<TAB>type<TAB>language")
                gaz.add(parts[0], parts[1].strip(), parts[2].strip())
        return gaz

    def __len__(self) -> int:
        return sum(len(t) for t in self.entries.values())

    def languages(self):
        return sorted(self.entries)

    def match(self, tokens: Sequence[str], language: str) -> list[tuple[str, str]]:
        """Greedy longest match, left to right; repeated entities reported once."""
        table = self.entries.get(language)
        if not table:
            return []
        out, seen = [], set()
        i, n = 0, len(tokens)
        while i < n:
            for length in range(min(self.max_len, n - i), 0, -1):
                etype = table.get(tuple(tokens[i:i + length]))
                if etype is not None:
                    key = (" ".join(tokens[i:i + length]), etype)
                    if key not in seen:
                        seen.add(key)
                        out.append(key)
                    i += length
                    break
            else:
                i += 1
        return out

    __call__ = match


def extract_entities(tokens: Sequence[str], language: str, extractor: Extractor,
                     url: str = "", timestamp: str = "") -> list[EntityMention]:
    return [EntityMention(label, etype, url, timestamp, language)
            for label, etype in extractor(tokens, language)]


@dataclass(frozen=True, slots=True)
class EntityStats:
    url_frequency: int
    capture_frequency: int


class EntityTable(dict):
    """(label, type) -> EntityStats."""

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["label", "type", "url_frequency", "capture_frequency"])
            for (label, etype), st in sorted(self.items()):
                w.writerow([label, etype, st.url_frequency, st.capture_frequency])

    @classmethod
    def read_csv(cls, path) -> "EntityTable":
        table = cls()
        with open(path, encoding="utf-8", newline="") as fh:
            for row in csv.DictReader(fh):
                table[(row["label"], row["type"])] = EntityStats(
                    int(row["url_frequency"]), int(row["capture_frequency"]))
        return table


class EntityAccumulator:
    """Exact distinct-URL and capture counts per entity.

    Each (capture, entity) pair is expected once; the extractor already
    collapses repeats within a URL.  Accumulators over disjoint parts of a
    stream merge into the accumulator of the whole.
    """

    def __init__(self):
        self.urls: dict[tuple[str, str], set[str]] = defaultdict(set)
        self.captures: Counter = Counter()

    def add(self, m: EntityMention) -> None:
        self.urls[m.key].add(m.url)
        self.captures[m.key] += 1

    def update(self, mentions: Iterable[EntityMention]) -> "EntityAccumulator":
        for m in mentions:
            self.add(m)
        return self

    def merge(self, other: "EntityAccumulator") -> "EntityAccumulator":
        out = EntityAccumulator()
        for acc in (self, other):
            for key, urls in acc.urls.items():
                out.urls[key] |= urls
            out.captures.update(acc.captures)
        return out

    def table(self) -> EntityTable:
        return EntityTable({k: EntityStats(len(self.urls[k]), self.captures[k])
                            for k in self.captures})


def accumulate(mentions: Iterable[EntityMention]) -> EntityTable:
    return EntityAccumulator().update(mentions).table()


def term_count(label: str) -> int:
    return len(label.split())


def postfilter(table: Mapping[tuple[str, str], EntityStats], max_terms: int = MAX_TERMS,
               min_url_freq: int = MIN_URL_FREQ) -> EntityTable:
    """Drop labels longer than ``max_terms`` terms and entities seen in
    fewer than ``min_url_freq`` distinct URLs."""
    return EntityTable({k: st for k, st in table.items()
                        if term_count(k[0]) <= max_terms and st.url_frequency >= min_url_freq})


def filter_mentions(mentions: Iterable[EntityMention],
                    surviving: Mapping[tuple[str, str], object]) -> Iterator[EntityMention]:
    for m in mentions:
        if m.key in surviving:
            yield m


# -- precision protocol ------------------------------------------------------

def draw_review_sample(annotated: Iterable[dict], size: int = 100, seed: int = 0) -> list[dict]:
    """Seeded sample of distinct URLs among captures with extracted entities.

    ``annotated`` holds annotation records (``url``, ``language``,
    ``entities``); one record per sampled URL is returned, ordered by URL.
    """
    first = {}
    sample = UrlSample(size, seed)
    for rec in annotated:
        if rec["entities"]:
            first.setdefault(rec["url"], rec)
            sample.add(rec["url"])
    return [first[u] for u in sample.urls()]


@dataclass(frozen=True)
class Verdict:
    url: str
    language: str
    label: str
    entity_type: str
    correct: bool


def review_rows(sample: Iterable[dict]) -> Iterator[tuple]:
    """Rows of a review sheet; ``correct`` left for the reviewer."""
    for rec in sample:
        for ent in rec["entities"]:
            yield (rec["url"], rec["language"], ent["label"], ent["type"], "")


def read_verdicts(path) -> list[Verdict]:
    out = []
    with open(path, encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            mark = row["correct"].strip().lower()
            if mark not in ("1", "0", "true", "false", "yes", "no", "y", "n"):
                raise ValueError(f"unreviewed or unreadable verdict {row['correct']!r} for {row['url']}")
            out.append(Verdict(row["url"], row["language"], row["label"], row["type"],
                               mark in ("1", "true", "yes", "y")))
    return out


@dataclass
class NerPrecision:
    # language -> (correct, total)
    before: dict
    after: dict

    @staticmethod
    def _p(pair) -> float | None:
        correct, total = pair
        return correct / total if total else None

    def precision(self, language: str, filtered: bool) -> float | None:
        side = self.after if filtered else self.before
        return self._p(side.get(language, (0, 0)))

    def rows(self):
        for lang in sorted(set(self.before) | set(self.after)):
            for stage, side in (("before", self.before), ("after", self.after)):
                c, t = side.get(lang, (0, 0))
                p = self._p((c, t))
                yield lang, stage, t, c, "n/a" if p is None else f"{p:.4f}"

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["language", "stage", "extractions", "correct", "precision"])
            w.writerows(self.rows())


def evaluate_ner_precision(verdicts: Iterable[Verdict],
                           surviving: Mapping[tuple[str, str], object]) -> NerPrecision:
    """Precision per language over reviewed extractions, before and after
    restricting them to entities that survive the post-filter."""
    before, after = defaultdict(lambda: [0, 0]), defaultdict(lambda: [0, 0])
    for v in verdicts:
        before[v.language][0] += v.correct
        before[v.language][1] += 1
        after[v.language]  # languages with no survivors still report n/a
        if (v.label, v.entity_type) in surviving:
            after[v.language][0] += v.correct
            after[v.language][1] += 1
    return NerPrecision({k: tuple(v) for k, v in before.items()},
                        {k: tuple(v) for k, v in after.items()})
