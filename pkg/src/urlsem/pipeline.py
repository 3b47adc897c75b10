"""End-to-end runs: ingest -> tokens -> language -> entities -> post-filter.

``run_annotate`` reads the CDX inputs twice (successful-URL set first,
then admission and annotation) and spills pre-filter annotations to disk,
so memory holds only the successful-URL set, the entity table and the
language cache.  A third pass over the spill applies the corpus-level
post-filter.
"""

from __future__ import annotations

import dataclasses
import hashlib
import heapq
import json
import logging
import multiprocessing as mp
import os
import tempfile
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

from . import __version__
from .cdx import (CdxReader, IngestSummary, Layout, is_html_capture, is_success,
                  load_category_map, make_capture, open_text, url_identity)
from .entities import (MAX_TERMS, MIN_URL_FREQ, EntityAccumulator, EntityTable,
                       Gazetteer, postfilter)
from .langid import DE, DEFAULT_CUTOFF, EN, LanguageDetector, LanguageProfile, shipped_profiles
from .tokens import StopList, clean_tokens, extract_path_tokens

log = logging.getLogger(__name__)

ANNOTATIONS = "annotations.ndjson"
ANNOTATIONS_RAW = "annotations.prefilter.ndjson"
ENTITY_TABLE = "entity_table.csv"
ENTITY_TABLE_RAW = "entity_table.prefilter.csv"
MANIFEST = "manifest.json"

CHUNK_LINES = 20_000

BASE_COUNTERS = ("lines_read", "malformed", "html_filtered", "success_filtered", "admitted",
                 "successful_urls", "captures_annotated", "entities_raw", "entities_surviving")


class ConfigError(ValueError):
    pass


class PipelineError(RuntimeError):
    def __init__(self, stage: str, message: str, path=None, line: int | None = None):
        where = f" ({path}:{line})" if path is not None and line is not None else ""
        super().__init__(f"[{stage}]{where} {message}")
        self.stage, self.path, self.line = stage, path, line


def default_stoplist_path() -> Path:
    return Path(__file__).parent / "data" / "stopwords.txt"


@dataclass
class RunConfig:
    inputs: list[str] = field(default_factory=list)
    output_dir: str = "out"
    gazetteer: str | None = None
    category_map: str | None = None
    stoplist: str | None = None
    profiles: list[str] = field(default_factory=list)
    layout: str | None = None
    max_terms: int = MAX_TERMS
    min_url_freq: int = MIN_URL_FREQ
    lang_cutoff: float = DEFAULT_CUTOFF
    seed: int = 0
    workers: int = 1

    @classmethod
    def from_file(cls, path, **overrides) -> "RunConfig":
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**data)

    def validate(self) -> None:
        if self.gazetteer is None:
            raise ConfigError("a gazetteer is required")
        files = [("gazetteer", self.gazetteer), ("category_map", self.category_map),
                 ("stoplist", self.stoplist)]
        files += [("input", p) for p in self.inputs]
        files += [("profile", p) for p in self.profiles]
        for name, path in files:
            if path is not None and not os.path.isfile(path):
                raise ConfigError(f"{name} file not found: {path}")
        if self.max_terms < 0 or self.min_url_freq < 0 or self.lang_cutoff < 0:
            raise ConfigError("thresholds must be >= 0")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    def snapshot(self) -> dict:
        return dataclasses.asdict(self)


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return "sha256:" + h.hexdigest()


@dataclass
class Resources:
    """Everything a worker needs to annotate one capture."""

    successful: set
    category_map: dict
    stop: frozenset
    detector: LanguageDetector
    gazetteer: Gazetteer


def load_resources(cfg: RunConfig, successful: set) -> Resources:
    stop = StopList.load(cfg.stoplist or default_stoplist_path())
    profiles = [LanguageProfile.load(p) for p in cfg.profiles] or shipped_profiles()
    return Resources(
        successful=successful,
        category_map=load_category_map(cfg.category_map) if cfg.category_map else {},
        stop=stop.terms,
        detector=LanguageDetector(profiles, cfg.lang_cutoff),
        gazetteer=Gazetteer.load(cfg.gazetteer),
    )


def _dumps(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


def annotate_record(r, res: Resources, counters: Counter) -> dict | None:
    """Admission plus annotation of one record; None when filtered out."""
    if not is_html_capture(r):
        counters["html_filtered"] += 1
        return None
    if url_identity(r) not in res.successful:
        counters["success_filtered"] += 1
        return None
    cap = make_capture(r, res.category_map)
    tokens = clean_tokens(extract_path_tokens(r.original_url, counters), res.stop)
    lang = res.detector.detect(tokens)
    counters["admitted"] += 1
    counters["lang_" + lang] += 1
    if lang in (DE, EN):
        ents = res.gazetteer.match(tokens, lang)
    else:
        ents = []
    if ents:
        counters["captures_with_raw_entities"] += 1
    return {"url": r.original_url, "timestamp": r.timestamp, "domain": cap.domain,
            "category": cap.category, "year": cap.year, "language": lang,
            "entities": [{"label": l, "type": t} for l, t in ents]}


def _records(paths, layout: Layout | None, reader: CdxReader):
    for path in paths:
        if layout is not None:
            reader.layout, reader.forced = layout, True
        with open_text(path) as fh:
            yield from reader.records(fh)


def collect_pass(cfg: RunConfig, layout: Layout | None) -> tuple[set, CdxReader]:
    reader = CdxReader()
    successful = set()
    for r in _records(cfg.inputs, layout, reader):
        if is_success(r.status_code):
            successful.add(url_identity(r))
    return successful, reader


# -- parallel pass 2 ------------------------------------------------------------

_WORKER: Resources | None = None


def _init_worker(res: Resources) -> None:
    global _WORKER
    _WORKER = res


def _annotate_chunk(args) -> tuple[list[str], Counter, list]:
    layout_header, lines = args
    res = _WORKER
    reader = CdxReader()
    if layout_header is not None:
        reader.layout, reader.forced = Layout.from_header(layout_header), True
    counters = Counter()
    out = []
    for r in reader.records(lines):
        rec = annotate_record(r, res, counters)
        if rec is not None:
            out.append(rec)
    out.sort(key=lambda rec: (rec["url"], rec["timestamp"]))
    mentions = [(rec["url"], e["label"], e["type"]) for rec in out for e in rec["entities"]]
    return [_dumps(rec) for rec in out], counters, mentions


def _chunks(paths, header: str | None) -> Iterator[tuple[str | None, list[str]]]:
    # Header lines switch the layout for later lines, so every chunk
    # carries the header in force where it starts.
    forced = header is not None
    for path in paths:
        with open_text(path) as fh:
            buf = []
            for line in fh:
                if not forced and line.lstrip().startswith("CDX "):
                    if buf:
                        yield header, buf
                        buf = []
                    header = line.strip()
                    continue
                buf.append(line)
                if len(buf) >= CHUNK_LINES:
                    yield header, buf
                    buf = []
            if buf:
                yield header, buf


# -- the run --------------------------------------------------------------------

@dataclass
class RunManifest:
    config: dict
    inputs: dict
    counters: dict
    complete: bool
    version: str = __version__
    error: str | None = None

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(dataclasses.asdict(self), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def read(cls, path) -> "RunManifest":
        with open(path, encoding="utf-8") as fh:
            return cls(**json.load(fh))


def run_annotate(cfg: RunConfig) -> RunManifest:
    cfg.validate()
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    counters = Counter(dict.fromkeys(BASE_COUNTERS, 0))
    manifest = RunManifest(cfg.snapshot(), {}, {}, complete=False)
    stage = "config"
    try:
        layout = Layout.from_header(cfg.layout) if cfg.layout else None
        # fail on unreadable resources before touching the corpus
        res = load_resources(cfg, set())
        manifest.inputs = {p: file_digest(p) for p in cfg.inputs}

        stage = "ingest"
        successful, reader = collect_pass(cfg, layout)
        res.successful = successful
        counters["lines_read"] = reader.lines_read
        counters["malformed"] = reader.malformed
        counters["successful_urls"] = len(successful)

        stage = "annotate"
        acc = EntityAccumulator()
        raw_path = out / ANNOTATIONS_RAW
        if cfg.workers == 1:
            _annotate_serial(cfg, layout, res, counters, acc, raw_path)
        else:
            _annotate_parallel(cfg, layout, res, counters, acc, raw_path)

        stage = "postfilter"
        raw_table = acc.table()
        surviving = postfilter(raw_table, cfg.max_terms, cfg.min_url_freq)
        EntityTable(raw_table).write_csv(out / ENTITY_TABLE_RAW)
        surviving.write_csv(out / ENTITY_TABLE)
        counters["entities_raw"] = len(raw_table)
        counters["entities_surviving"] = len(surviving)
        _apply_postfilter(raw_path, out / ANNOTATIONS, surviving, counters)
        manifest.complete = True
    except Exception as exc:
        manifest.error = f"[{stage}] {exc}"
        if isinstance(exc, (ConfigError, PipelineError)):
            raise
        raise PipelineError(stage, str(exc)) from exc
    finally:
        manifest.counters = dict(sorted(counters.items()))
        manifest.write(out / MANIFEST)
    return manifest


def _annotate_serial(cfg, layout, res, counters, acc, raw_path) -> None:
    reader = CdxReader()
    with open(raw_path, "w", encoding="utf-8", newline="\n") as fh:
        for r in _records(cfg.inputs, layout, reader):
            rec = annotate_record(r, res, counters)
            if rec is None:
                continue
            for e in rec["entities"]:
                acc.urls[e["label"], e["type"]].add(rec["url"])
                acc.captures[e["label"], e["type"]] += 1
            fh.write(_dumps(rec))
            fh.write("\n")


def _annotate_parallel(cfg, layout, res, counters, acc, raw_path) -> None:
    # Each chunk comes back sorted by (url, timestamp) and goes to its own
    # run file; the runs are merged into one sorted stream.
    with tempfile.TemporaryDirectory(dir=raw_path.parent) as tmp:
        runs = []
        ctx = mp.get_context("fork") if "fork" in mp.get_all_start_methods() else mp.get_context()
        with ctx.Pool(cfg.workers, initializer=_init_worker, initargs=(res,)) as pool:
            for i, (lines, chunk_counts, mentions) in enumerate(
                    pool.imap(_annotate_chunk, _chunks(cfg.inputs, cfg.layout))):
                counters.update(chunk_counts)
                for url, label, etype in mentions:
                    acc.urls[label, etype].add(url)
                    acc.captures[label, etype] += 1
                path = Path(tmp) / f"run{i:06d}.ndjson"
                with open(path, "w", encoding="utf-8", newline="\n") as fh:
                    for line in lines:
                        fh.write(line)
                        fh.write("\n")
                runs.append(path)
        files = [open(p, encoding="utf-8") for p in runs]
        try:
            merged = heapq.merge(*files, key=_sort_key)
            with open(raw_path, "w", encoding="utf-8", newline="\n") as fh:
                fh.writelines(merged)
        finally:
            for f in files:
                f.close()


def _sort_key(line: str):
    rec = json.loads(line)
    return rec["url"], rec["timestamp"]


_NO_ENTITIES = '"entities":[]}\n'


def _apply_postfilter(raw_path, out_path, surviving, counters) -> None:
    annotated = 0
    with open(raw_path, encoding="utf-8") as src, \
            open(out_path, "w", encoding="utf-8", newline="\n") as dst:
        for line in src:
            if line.endswith(_NO_ENTITIES):
                dst.write(line)
                continue
            rec = json.loads(line)
            rec["entities"] = [e for e in rec["entities"] if (e["label"], e["type"]) in surviving]
            annotated += bool(rec["entities"])
            dst.write(_dumps(rec))
            dst.write("\n")
    counters["captures_annotated"] = annotated


# -- reading annotations back ---------------------------------------------------

@dataclass(frozen=True, slots=True)
class Annotated:
    url: str
    timestamp: str
    domain: str
    category: str
    year: int
    language: str
    entities: tuple

    @classmethod
    def from_json(cls, obj: dict) -> "Annotated":
        return cls(obj["url"], obj["timestamp"], obj["domain"], obj["category"], int(obj["year"]),
                   obj["language"], tuple((e["label"], e["type"]) for e in obj["entities"]))


def read_annotations(path) -> Iterator[Annotated]:
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                yield Annotated.from_json(json.loads(line))
            except (ValueError, KeyError, TypeError) as exc:
                raise PipelineError("report", f"bad annotation record: {exc}", path, n) from exc


def iter_json_records(path) -> Iterable[dict]:
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                yield json.loads(line)


def ingest_summary(counters: Counter) -> IngestSummary:
    return IngestSummary(counters["lines_read"], counters["malformed"], counters["html_filtered"],
                         counters["success_filtered"], counters["admitted"])
