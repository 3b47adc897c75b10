"""Rank-order character n-gram language identification for URL tokens.

A profile lists the most frequent character n-grams of a language by
rank.  A URL's own n-grams are ranked the same way and compared with the
out-of-place measure: each query n-gram costs the absolute rank
difference, capped at the profile size, or the profile size if the
language never produced it.  The language with the smallest cost wins
unless even that cost is too large, in which case the URL is "other".
"""

from __future__ import annotations

import csv
import json
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Iterable, Sequence

DE, EN, OTHER = "de", "en", "other"
TAGS = (DE, EN, OTHER)

# Word boundary marker.  Sorts after every Latin letter so that on equal
# counts plain n-grams rank ahead of boundary n-grams.
BOUNDARY = "␣"

DEFAULT_ORDERS = 3
DEFAULT_MAX_RANK = 1000
DEFAULT_CUTOFF = 0.8
PROFILE_FORMAT = 1


class EmptyCorpus(ValueError):
    pass


@lru_cache(maxsize=1 << 17)
def token_ngrams(token: str, orders: int) -> tuple[str, ...]:
    padded = BOUNDARY + token + BOUNDARY
    size = len(padded)
    out = []
    for n in range(1, orders + 1):
        for i in range(size - n + 1):
            gram = padded[i:i + n]
            if gram.strip(BOUNDARY):
                out.append(gram)
    return tuple(out)


def count_ngrams(corpus: Iterable, orders: int) -> Counter:
    """N-gram counts over ``corpus``.

    Items are tokens or ``(token, weight)`` pairs.  Count maps from
    separate chunks add up to the count map of the whole.
    """
    counts = Counter()
    for item in corpus:
        if isinstance(item, str):
            tok, weight = item, 1
        else:
            tok, weight = item
        if not tok:
            continue
        grams = token_ngrams(tok.lower(), orders)
        if weight == 1:
            counts.update(grams)
        else:
            for gram in grams:
                counts[gram] += weight
    return counts


def rank_ngrams(counts: Counter, limit: int | None = None) -> list[str]:
    """Descending count, ties in lexicographic order."""
    ranked = sorted(counts)
    ranked.sort(key=counts.__getitem__, reverse=True)  # stable: keeps lexicographic ties
    return ranked if limit is None else ranked[:limit]


@dataclass(frozen=True)
class LanguageProfile:
    language: str
    ngrams: tuple[str, ...]
    orders: int = DEFAULT_ORDERS
    ranks: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "ranks", {g: i for i, g in enumerate(self.ngrams, 1)})

    @property
    def max_rank(self) -> int:
        return len(self.ngrams)

    @classmethod
    def from_counts(cls, counts: Counter, language: str, orders: int,
                    max_rank: int = DEFAULT_MAX_RANK) -> "LanguageProfile":
        return cls(language, tuple(rank_ngrams(counts, max_rank)), orders)

    def to_json(self) -> dict:
        return {"format": PROFILE_FORMAT, "language": self.language, "orders": self.orders,
                "max_rank": self.max_rank, "ngrams": list(self.ngrams)}

    @classmethod
    def from_json(cls, obj: dict) -> "LanguageProfile":
        if obj.get("format", PROFILE_FORMAT) != PROFILE_FORMAT:
            raise ValueError(f"unsupported profile format {obj.get('format')!r}")
        prof = cls(obj["language"], tuple(obj["ngrams"]), int(obj["orders"]))
        if prof.max_rank != obj.get("max_rank", prof.max_rank):
            raise ValueError("max_rank does not match the n-gram list")
        return prof

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh, ensure_ascii=False, indent=0)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "LanguageProfile":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))


def train_profile(corpus: Iterable, language: str, orders: int = DEFAULT_ORDERS,
                  max_rank: int = DEFAULT_MAX_RANK) -> LanguageProfile:
    if orders < 1 or max_rank < 1:
        raise ValueError("orders and max_rank must be >= 1")
    counts = count_ngrams(corpus, orders)
    if not counts:
        raise EmptyCorpus(f"no n-grams in training corpus for {language!r}")
    return LanguageProfile.from_counts(counts, language, orders, max_rank)


def read_wordlist(path) -> list[tuple[str, int]]:
    """``word<TAB>count`` lines (count optional, default 1); '#' comments."""
    words = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            word, _, count = line.partition("\t")
            words.append((word.strip().lower(), int(count) if count else 1))
    return words


def out_of_place(query: Sequence[str], profile: LanguageProfile) -> int:
    """Out-of-place distance of a ranked query n-gram list to ``profile``."""
    ranks = profile.ranks
    cap = profile.max_rank
    d = 0
    for rq, gram in enumerate(query, 1):
        rp = ranks.get(gram)
        if rp is None:
            d += cap
        else:
            diff = rq - rp if rq > rp else rp - rq
            d += diff if diff < cap else cap
    return d


def query_ngrams(tokens: Iterable[str], orders: int) -> list[str]:
    return rank_ngrams(count_ngrams(tokens, orders))


class LanguageDetector:
    """de/en/other decisions against a fixed set of profiles.

    ``cutoff`` is relative: a URL is "other" when its best distance
    exceeds ``cutoff`` times the worst possible distance (profile size
    times the number of query n-grams).
    """

    def __init__(self, profiles: Sequence[LanguageProfile], cutoff: float = DEFAULT_CUTOFF,
                 cache_size: int = 1 << 16):
        langs = {p.language for p in profiles}
        if not {DE, EN} <= langs:
            raise ValueError("profiles must include 'de' and 'en'")
        if len({p.orders for p in profiles}) != 1:
            raise ValueError("all profiles must use the same n-gram orders")
        self.profiles = tuple(sorted(profiles, key=lambda p: p.language))
        self.cutoff = cutoff
        self.orders = self.profiles[0].orders
        self._cached = lru_cache(maxsize=cache_size)(self._detect)

    def distances(self, tokens: Iterable[str]) -> dict[str, float]:
        """Normalised distance in [0, 1] per profile language."""
        query = query_ngrams(tokens, self.orders)
        if not query:
            return {}
        return {p.language: out_of_place(query, p) / (p.max_rank * len(query))
                for p in self.profiles}

    def _detect(self, key: tuple[str, ...]) -> str:
        dist = self.distances(key)
        if not dist:
            return OTHER
        lang, best = min(dist.items(), key=lambda kv: (kv[1], kv[0]))
        if best > self.cutoff:
            return OTHER
        return lang if lang in (DE, EN) else OTHER

    def detect(self, tokens: Sequence[str]) -> str:
        # the decision depends only on the bag of tokens
        return self._cached(tuple(sorted(tokens)))

    __call__ = detect


def detect_language(tokens: Sequence[str], profiles: Sequence[LanguageProfile],
                    distance_cutoff: float = DEFAULT_CUTOFF) -> str:
    return LanguageDetector(profiles, distance_cutoff, cache_size=0).detect(tokens)


def shipped_profiles() -> list[LanguageProfile]:
    """The de and en profiles bundled with the package."""
    base = resources.files("urlsem") / "data" / "profiles"
    return [LanguageProfile.from_json(json.loads((base / f"{lang}.json").read_text("utf-8")))
            for lang in (DE, EN)]


def shipped_wordlist(language: str):
    return resources.files("urlsem") / "data" / "wordlists" / f"{language}.tsv"


@dataclass
class PrecisionReport:
    """Per-tag precision (correct / predicted) and overall accuracy."""

    predicted: Counter
    correct: Counter
    total: int

    @property
    def accuracy(self) -> float:
        return sum(self.correct.values()) / self.total if self.total else float("nan")

    def precision(self, tag: str) -> float | None:
        n = self.predicted[tag]
        return self.correct[tag] / n if n else None

    def rows(self):
        for tag in TAGS:
            p = self.precision(tag)
            yield tag, self.predicted[tag], self.correct[tag], "n/a" if p is None else f"{p:.4f}"

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["tag", "predicted", "correct", "precision"])
            w.writerows(self.rows())
            w.writerow(["overall", self.total, sum(self.correct.values()), f"{self.accuracy:.4f}"])


def evaluate_language_precision(labeled: Iterable[tuple[Sequence[str], str]],
                                detector: LanguageDetector) -> PrecisionReport:
    predicted, correct, total = Counter(), Counter(), 0
    for tokens, gold in labeled:
        tag = detector.detect(tokens)
        predicted[tag] += 1
        correct[tag] += tag == gold
        total += 1
    if not total:
        raise ValueError("no labeled URLs")
    return PrecisionReport(predicted, correct, total)
