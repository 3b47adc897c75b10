"""URL path tokenization and URL-specific stop words.

Only the path of a URL carries words about the document: host, port,
query string, fragment, numbers and the file extension are dropped.
"""

from __future__ import annotations

import csv
import hashlib
import heapq
import re
import warnings
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator
from urllib.parse import unquote, urlsplit

from .cdx import url_path

MIN_TOKEN_LEN = 3

_ALPHA_RUN = re.compile(r"[^\W\d_]+")
_EXTENSION = re.compile(r"\.[A-Za-z0-9]{1,5}$")


class SampleTooSmall(UserWarning):
    """Fewer distinct URLs than the requested sample size; the whole corpus is used."""


def _split_alpha(run: str) -> Iterator[str]:
    # \w admits a few non-decimal numerics and marks; split those out.
    buf = []
    for ch in run:
        if ch.isalpha():
            buf.append(ch)
        elif buf:
            yield "".join(buf)
            buf = []
    if buf:
        yield "".join(buf)


def extract_path_tokens(original_url: str, diagnostics: Counter | None = None) -> list[str]:
    """Lowercase alphabetic runs of the URL path, extension removed.

    URLs that do not parse yield no tokens; they are tallied under
    ``"unparsable_url"`` in ``diagnostics`` when given.

    >>> extract_path_tokens("http://www.wg-gesucht.de:80/wohnungen-in-Berlin-Prenzlauer-Berg.1529789.html")
    ['wohnungen', 'in', 'berlin', 'prenzlauer', 'berg']
    """
    if "[" in original_url:
        try:
            urlsplit(original_url)
        except ValueError:
            if diagnostics is not None:
                diagnostics["unparsable_url"] += 1
            return []
    path = url_path(original_url)
    if not path:
        return []
    path = _EXTENSION.sub("", path)
    if "%" in path:
        path = unquote(path, errors="replace")
    path = path.lower()
    tokens = []
    for run in _ALPHA_RUN.findall(path):
        if run.isalpha():
            tokens.append(run)
        else:
            tokens.extend(_split_alpha(run))
    return tokens


@dataclass(frozen=True)
class StopList:
    terms: frozenset = frozenset()
    provenance: dict = field(default_factory=dict, compare=False)

    def __contains__(self, token: str) -> bool:
        return token in self.terms

    def __len__(self) -> int:
        return len(self.terms)

    @classmethod
    def of(cls, terms: Iterable[str], **provenance) -> "StopList":
        return cls(frozenset(t.lower() for t in terms), provenance)

    @classmethod
    def load(cls, path) -> "StopList":
        terms, meta = set(), {}
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line.startswith("#!"):
                    key, _, value = line[2:].partition(":")
                    meta[key.strip()] = value.strip()
                elif line and not line.startswith("#"):
                    terms.add(line.lower())
        return cls(frozenset(terms), meta)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for key in sorted(self.provenance):
                fh.write(f"#! {key}: {self.provenance[key]}\n")
            for term in sorted(self.terms):
                fh.write(term + "\n")


def clean_tokens(tokens: Iterable[str], stop: StopList | frozenset | set = frozenset()) -> list[str]:
    terms = stop.terms if isinstance(stop, StopList) else stop
    return [t for t in tokens if len(t) >= MIN_TOKEN_LEN and t not in terms]


def tokenize(original_url: str, stop: StopList | frozenset | set = frozenset()) -> list[str]:
    return clean_tokens(extract_path_tokens(original_url), stop)


def _priority(seed: int, url: str) -> bytes:
    key = seed.to_bytes(8, "big", signed=True)
    return hashlib.blake2b(url.encode("utf-8", "surrogatepass"), key=key, digest_size=8).digest()


class UrlSample:
    """Uniform sample of distinct URLs by bottom-k hashing.

    Each URL gets a seeded pseudo-random priority; the ``size`` URLs with
    the smallest priorities form the sample.  Repeated captures of a URL
    collapse onto one entry, the result does not depend on input order,
    and two samples built with the same seed merge exactly by keeping the
    smallest priorities of their union.
    """

    def __init__(self, size: int, seed: int = 0):
        if size < 1:
            raise ValueError("sample size must be >= 1")
        self.size = size
        self.seed = seed
        self._heap: list[tuple[bytes, str]] = []  # max-heap via negated priority
        self._members: set[str] = set()

    def add(self, url: str) -> None:
        if url in self._members:
            return
        prio = _priority(self.seed, url)
        neg = bytes(255 - b for b in prio)
        if len(self._heap) < self.size:
            heapq.heappush(self._heap, (neg, url))
            self._members.add(url)
        elif neg > self._heap[0][0]:
            _, out = heapq.heapreplace(self._heap, (neg, url))
            self._members.discard(out)
            self._members.add(url)

    def update(self, urls: Iterable[str]) -> "UrlSample":
        for u in urls:
            self.add(u)
        return self

    def merge(self, other: "UrlSample") -> "UrlSample":
        if other.seed != self.seed or other.size != self.size:
            raise ValueError("can only merge samples with equal seed and size")
        out = UrlSample(self.size, self.seed)
        out.update(self.urls())
        out.update(other.urls())
        return out

    def urls(self) -> list[str]:
        return sorted(self._members)

    def __len__(self) -> int:
        return len(self._members)


@dataclass
class StopCandidates:
    rows: list[tuple[str, int, float]]
    sample_size: int
    seed: int

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["token", "count", "share"])
            for tok, count, share in self.rows:
                w.writerow([tok, count, f"{share:.4f}"])

    def to_stoplist(self, corpus_id: str = "") -> StopList:
        return StopList.of((t for t, _, _ in self.rows), sample_size=self.sample_size,
                           top_k=len(self.rows), seed=self.seed, corpus=corpus_id)


def build_stop_list(urls: Iterable[str], sample_size: int = 10_000, top_k: int = 100,
                    seed: int = 0) -> StopCandidates:
    """Rank tokens of a seeded URL sample by the number of URLs containing them.

    The result is a candidate list meant for review; the reviewed file is
    what the pipeline loads.  Pass URL strings (``capture.url``).
    """
    if top_k < 1:
        raise ValueError("top_k must be >= 1")
    sample = UrlSample(sample_size, seed).update(urls)
    if len(sample) < sample_size:
        warnings.warn(f"only {len(sample)} distinct URLs, fewer than sample size "
                      f"{sample_size}; using all of them", SampleTooSmall, stacklevel=2)
    df = Counter()
    for url in sample.urls():
        df.update(set(clean_tokens(extract_path_tokens(url))))
    n = len(sample)
    ranked = sorted(df.items(), key=lambda kv: (-kv[1], kv[0]))[:top_k]
    return StopCandidates([(t, c, c / n) for t, c in ranked], n, seed)
