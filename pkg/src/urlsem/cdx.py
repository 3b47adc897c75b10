"""CDX parsing and the dataset-cleaning filters.

A CDX file holds one capture per line, space separated.  Only three
fields matter downstream (original url, timestamp, status code); the
rest are kept opaque.  Cleaning keeps captures whose URL ends in
``.html``/``.htm`` and whose URL returned a 2xx status at least once
anywhere in the corpus.
"""

from __future__ import annotations

import gzip
import io
import logging
from dataclasses import dataclass, field
from datetime import datetime
from functools import cached_property
from typing import Iterable, Iterator, Mapping

log = logging.getLogger(__name__)

# Letter codes used in " CDX ..." header lines.
HEADER_CODES = {
    "N": "url_key",
    "b": "timestamp",
    "a": "original_url",
    "m": "mime_type",
    "s": "status_code",
    "k": "digest",
}

DEFAULT_HEADER = "N b a m s k r M S V g"

REQUIRED = ("url_key", "timestamp", "original_url", "status_code")

UNCATEGORIZED = "uncategorized"


class MalformedLine(ValueError):
    pass


@dataclass(frozen=True)
class Layout:
    """Positions of the named fields inside a CDX line.

    ``width`` is the number of fields a line must have.  Fields not named
    in ``positions`` are carried through as ``extra_fields``.
    """

    positions: Mapping[str, int]
    width: int

    def __post_init__(self):
        missing = [f for f in REQUIRED if f not in self.positions]
        if missing:
            raise ValueError(f"layout lacks required fields: {missing}")

    @classmethod
    def from_header(cls, header: str) -> "Layout":
        codes = header.split()
        if codes and codes[0] == "CDX":
            codes = codes[1:]
        positions = {}
        for i, code in enumerate(codes):
            name = HEADER_CODES.get(code)
            if name is not None and name not in positions:
                positions[name] = i
        return cls(positions, len(codes))

    @cached_property
    def extra_positions(self) -> tuple[int, ...]:
        named = set(self.positions.values())
        return tuple(i for i in range(self.width) if i not in named)


DEFAULT_LAYOUT = Layout.from_header(DEFAULT_HEADER)


def is_header(line: str) -> bool:
    return line.lstrip().startswith("CDX ")


@dataclass(frozen=True, slots=True)
class CdxRecord:
    url_key: str
    timestamp: str
    original_url: str
    mime_type: str = "-"
    status_code: str = "-"
    digest: str = "-"
    extra_fields: tuple[str, ...] = ()

    @property
    def year(self) -> int:
        return int(self.timestamp[:4])

    @property
    def capture_id(self) -> tuple[str, str]:
        return (self.original_url, self.timestamp)


@dataclass(frozen=True, slots=True)
class Capture:
    record: CdxRecord
    domain: str
    category: str
    year: int

    @property
    def url(self) -> str:
        return self.record.original_url

    @property
    def timestamp(self) -> str:
        return self.record.timestamp


def _valid_timestamp(ts: str) -> bool:
    if len(ts) != 14 or not ts.isascii() or not ts.isdigit():
        return False
    try:
        datetime(int(ts[0:4]), int(ts[4:6]), int(ts[6:8]),
                 int(ts[8:10]), int(ts[10:12]), int(ts[12:14]))
    except ValueError:
        return False
    return True


def parse_cdx_line(line: str, layout: Layout = DEFAULT_LAYOUT) -> CdxRecord:
    parts = line.split()
    if len(parts) < layout.width:
        raise MalformedLine(f"expected {layout.width} fields, got {len(parts)}")
    pos = layout.positions
    ts = parts[pos["timestamp"]]
    if not _valid_timestamp(ts):
        raise MalformedLine(f"bad timestamp {ts!r}")
    url = parts[pos["original_url"]]
    if not url or url == "-":
        raise MalformedLine("empty original url")
    extra = tuple(parts[i] for i in layout.extra_positions)
    if len(parts) > layout.width:
        extra += tuple(parts[layout.width:])
    return CdxRecord(
        url_key=parts[pos["url_key"]],
        timestamp=ts,
        original_url=url,
        mime_type=parts[pos["mime_type"]] if "mime_type" in pos else "-",
        status_code=parts[pos["status_code"]],
        digest=parts[pos["digest"]] if "digest" in pos else "-",
        extra_fields=extra,
    )


def url_path(url: str) -> str:
    """Path part of ``url``: scheme, host, query and fragment removed."""
    cut = len(url)
    for sep in "?#":
        i = url.find(sep)
        if i != -1 and i < cut:
            cut = i
    url = url[:cut]
    i = url.find("://")
    if i != -1:
        url = url[i + 3:]
    elif url.startswith("//"):
        url = url[2:]
    slash = url.find("/")
    return url[slash:] if slash != -1 else ""


def is_html_capture(r: CdxRecord) -> bool:
    path = url_path(r.original_url).lower()
    return path.endswith(".html") or path.endswith(".htm")


def is_success(status_code: str) -> bool:
    return bool(status_code) and status_code.isascii() and status_code.isdigit() \
        and status_code[0] == "2"


def url_identity(r: CdxRecord) -> str:
    """Grouping key for the ever-successful test.

    The archive's url key when present, otherwise the original url
    lowercased with scheme and port removed.
    """
    if r.url_key and r.url_key != "-":
        return r.url_key
    url = r.original_url.lower()
    i = url.find("://")
    if i != -1:
        url = url[i + 3:]
    slash = url.find("/")
    host, rest = (url[:slash], url[slash:]) if slash != -1 else (url, "")
    colon = host.rfind(":")
    if colon != -1 and host[colon + 1:].isdigit():
        host = host[:colon]
    return host + rest


def collect_successful_urls(records: Iterable[CdxRecord]) -> set[str]:
    return {url_identity(r) for r in records if is_success(r.status_code)}


def url_host(url: str) -> str:
    i = url.find("://")
    if i != -1:
        url = url[i + 3:]
    for sep in "/?#":
        j = url.find(sep)
        if j != -1:
            url = url[:j]
    if "@" in url:
        url = url.rsplit("@", 1)[1]
    colon = url.rfind(":")
    if colon != -1 and url[colon + 1:].isdigit():
        url = url[:colon]
    return url.lower().rstrip(".")


# Two-label public suffixes common enough to matter for a .de-centric archive.
_SECOND_LEVEL = {
    "co.uk", "org.uk", "ac.uk", "gov.uk", "com.au", "net.au", "org.au",
    "co.at", "or.at", "ac.at", "co.jp", "com.br", "com.tr", "co.nz",
}


def registered_domain(host: str, category_map: Mapping[str, str] | None = None) -> str:
    """Domain of ``host`` used for grouping.

    The longest suffix of ``host`` listed in ``category_map`` wins, so
    sub-domains that are categorised on their own (``dblp.uni-trier.de``)
    stay separate.  Otherwise the last two labels, three for known
    two-label public suffixes.
    """
    labels = host.split(".")
    if category_map:
        for i in range(len(labels) - 1):
            cand = ".".join(labels[i:])
            if cand in category_map:
                return cand
    if len(labels) >= 3 and ".".join(labels[-2:]) in _SECOND_LEVEL:
        return ".".join(labels[-3:])
    return ".".join(labels[-2:])


def make_capture(r: CdxRecord, category_map: Mapping[str, str]) -> Capture:
    domain = registered_domain(url_host(r.original_url), category_map)
    return Capture(r, domain, category_map.get(domain, UNCATEGORIZED), int(r.timestamp[:4]))


def admit_captures(records: Iterable[CdxRecord], successful: set[str],
                   category_map: Mapping[str, str] | None = None) -> Iterator[Capture]:
    category_map = category_map or {}
    for r in records:
        if is_html_capture(r) and url_identity(r) in successful:
            yield make_capture(r, category_map)


@dataclass
class IngestSummary:
    lines_read: int = 0
    malformed: int = 0
    html_filtered: int = 0
    success_filtered: int = 0
    admitted: int = 0

    @property
    def parsed(self) -> int:
        return self.lines_read - self.malformed

    def merge(self, other: "IngestSummary") -> "IngestSummary":
        return IngestSummary(*(a + b for a, b in zip(self.as_tuple(), other.as_tuple())))

    def as_tuple(self):
        return (self.lines_read, self.malformed, self.html_filtered,
                self.success_filtered, self.admitted)

    def as_dict(self) -> dict:
        return {
            "lines_read": self.lines_read,
            "malformed": self.malformed,
            "html_filtered": self.html_filtered,
            "success_filtered": self.success_filtered,
            "admitted": self.admitted,
        }


def open_text(path) -> io.TextIOBase:
    """Open a plain or gzip-compressed text file; gzip is sniffed by magic."""
    with open(path, "rb") as fh:
        magic = fh.read(2)
    if magic == b"\x1f\x8b":
        return gzip.open(path, "rt", encoding="utf-8", errors="replace", newline="\n")
    return open(path, "rt", encoding="utf-8", errors="replace", newline="\n")


@dataclass
class CdxReader:
    """Streams records from CDX lines, counting and skipping malformed ones.

    A ``" CDX ..."`` header switches the layout for the lines that follow
    unless a layout was forced.
    """

    layout: Layout = DEFAULT_LAYOUT
    forced: bool = False
    lines_read: int = 0
    malformed: int = 0
    samples: list = field(default_factory=list)

    def records(self, lines: Iterable[str]) -> Iterator[CdxRecord]:
        for line in lines:
            if not line.strip():
                continue
            if is_header(line):
                if not self.forced:
                    self.layout = Layout.from_header(line)
                continue
            self.lines_read += 1
            try:
                yield parse_cdx_line(line, self.layout)
            except MalformedLine as exc:
                self.malformed += 1
                if len(self.samples) < 5:
                    self.samples.append((self.lines_read, str(exc)))
                    log.debug("line %d malformed: %s", self.lines_read, exc)


def read_records(paths: Iterable, layout: Layout | None = None,
                 reader: CdxReader | None = None) -> Iterator[CdxRecord]:
    for path in paths:
        rd = reader or CdxReader()
        if layout is not None:
            rd.layout, rd.forced = layout, True
        with open_text(path) as fh:
            yield from rd.records(fh)


def load_category_map(path) -> dict[str, str]:
    mapping = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            domain, _, category = line.partition("\t")
            if not category:
                raise ValueError(f"{path}: expected 'domain<TAB>category', got {line!r}")
            mapping[domain.strip().lower()] = category.strip()
    return mapping


def ingest(paths, category_map=None, layout: Layout | None = None):
    """Two-pass cleaning over ``paths``.

    Returns the admitted captures as a list together with the summary;
    intended for small corpora and tests, the pipeline streams instead.
    """
    reader = CdxReader()
    successful = collect_successful_urls(read_records(paths, layout, reader))
    summary = IngestSummary(lines_read=reader.lines_read, malformed=reader.malformed)
    captures = []
    category_map = category_map or {}
    for r in read_records(paths, layout):
        if not is_html_capture(r):
            summary.html_filtered += 1
        elif url_identity(r) not in successful:
            summary.success_filtered += 1
        else:
            captures.append(make_capture(r, category_map))
    summary.admitted = len(captures)
    return captures, summary
