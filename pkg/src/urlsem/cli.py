"""Command line entry point: ``urlsem <subcommand> ...``.

Exit codes: 0 success, 1 usage or configuration error, 2 data error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import warnings
from pathlib import Path

from . import __version__
from .cdx import CdxReader, Layout, ingest, load_category_map, open_text
from .entities import (EntityTable, Verdict, draw_review_sample, evaluate_ner_precision,
                       read_verdicts, review_rows)
from .langid import (DEFAULT_CUTOFF, DEFAULT_MAX_RANK, DEFAULT_ORDERS, LanguageDetector,
                     LanguageProfile, evaluate_language_precision, read_wordlist,
                     shipped_profiles, train_profile)
from .pipeline import (ANNOTATIONS_RAW, ENTITY_TABLE, ConfigError, PipelineError, RunConfig,
                       default_stoplist_path, iter_json_records, run_annotate)
from .reports import REPORTS, MissingCorpus, ReportSpec, UnknownReport, run_report
from .tokens import SampleTooSmall, StopList, build_stop_list, tokenize

log = logging.getLogger("urlsem")

EXIT_USAGE = 1
EXIT_DATA = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _layout(args) -> Layout | None:
    return Layout.from_header(args.layout) if getattr(args, "layout", None) else None


def cmd_ingest(args) -> int:
    cmap = load_category_map(args.category_map) if args.category_map else {}
    captures, summary = ingest(args.inputs, cmap, _layout(args))
    if args.captures_out:
        with open(args.captures_out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("url\ttimestamp\tdomain\tcategory\tyear\n")
            for c in captures:
                fh.write(f"{c.url}\t{c.timestamp}\t{c.domain}\t{c.category}\t{c.year}\n")
    text = json.dumps(summary.as_dict(), indent=2)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    print(text)
    return 0


def _iter_urls(paths, layout):
    reader = CdxReader()
    if layout is not None:
        reader.layout, reader.forced = layout, True
    for path in paths:
        with open_text(path) as fh:
            for r in reader.records(fh):
                yield r.original_url


def cmd_stopwords(args) -> int:
    if args.admitted_only:
        cmap = load_category_map(args.category_map) if args.category_map else {}
        captures, _ = ingest(args.inputs, cmap, _layout(args))
        urls = (c.url for c in captures)
    else:
        urls = _iter_urls(args.inputs, _layout(args))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", SampleTooSmall)
        cands = build_stop_list(urls, args.sample_size, args.top_k, args.seed)
    for w in caught:
        log.warning("%s", w.message)
    cands.write_csv(args.out)
    if args.stoplist_out:
        cands.to_stoplist(corpus_id=",".join(args.inputs)).save(args.stoplist_out)
    print(f"{len(cands.rows)} candidates from {cands.sample_size} URLs -> {args.out}")
    return 0


def cmd_lang_train(args) -> int:
    corpus = []
    for path in args.wordlist:
        corpus.extend(read_wordlist(path))
    prof = train_profile(corpus, args.language, args.orders, args.max_rank)
    prof.save(args.out)
    print(f"{args.language}: {prof.max_rank} n-grams (orders 1..{prof.orders}) -> {args.out}")
    return 0


def _profiles(paths):
    return [LanguageProfile.load(p) for p in paths] if paths else shipped_profiles()


def _stoplist(path):
    return StopList.load(path or default_stoplist_path())


def read_labeled(path):
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip() or line.startswith("#"):
                continue
            url, gold = line.rstrip("\n").split("\t")[:2]
            rows.append((url, gold.strip()))
    return rows


def cmd_lang_eval(args) -> int:
    stop = _stoplist(args.stoplist)
    det = LanguageDetector(_profiles(args.profiles), args.cutoff)
    labeled = [(tokenize(u, stop), g) for u, g in read_labeled(args.labeled)]
    rep = evaluate_language_precision(labeled, det)
    if args.out:
        rep.write_csv(args.out)
    for tag, predicted, correct, precision in rep.rows():
        print(f"{tag:6s} predicted={predicted:4d} correct={correct:4d} precision={precision}")
    print(f"overall accuracy={rep.accuracy:.4f} on {rep.total} URLs")
    return 0


def _config(args) -> RunConfig:
    overrides = {
        "inputs": args.inputs or None, "output_dir": args.out, "gazetteer": args.gazetteer,
        "category_map": args.category_map, "stoplist": args.stoplist,
        "profiles": args.profiles or None, "layout": args.layout, "max_terms": args.max_terms,
        "min_url_freq": args.min_url_freq, "lang_cutoff": args.cutoff, "seed": args.seed,
        "workers": args.workers,
    }
    if args.config:
        return RunConfig.from_file(args.config, **overrides)
    return RunConfig(**{k: v for k, v in overrides.items() if v is not None})


def cmd_annotate(args) -> int:
    cfg = _config(args)
    manifest = run_annotate(cfg)
    print(json.dumps(manifest.counters, indent=2, sort_keys=True))
    return 0


def _gold_verdicts(sample, gold_path) -> list[Verdict]:
    gold = set()
    with open(gold_path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip() and not line.startswith("#"):
                label, etype = line.rstrip("\n").split("\t")[:2]
                gold.add((label.strip().lower(), etype.strip()))
    return [Verdict(url, lang, label, etype, (label, etype) in gold)
            for url, lang, label, etype, _ in review_rows(sample)]


def cmd_ner_eval(args) -> int:
    corpus = Path(args.corpus)
    raw = corpus / ANNOTATIONS_RAW
    if not raw.is_file():
        raise MissingCorpus(f"no pre-filter annotations in {corpus}")
    surviving = EntityTable.read_csv(corpus / ENTITY_TABLE)
    if args.verdicts:
        verdicts = read_verdicts(args.verdicts)
    else:
        sample = draw_review_sample(iter_json_records(raw), args.sample_size, args.seed)
        if args.review_out:
            with open(args.review_out, "w", encoding="utf-8", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["url", "language", "label", "type", "correct"])
                w.writerows(review_rows(sample))
            print(f"review sheet for {len(sample)} URLs -> {args.review_out}")
            if not args.gold:
                return 0
        if not args.gold:
            raise UsageError("ner-eval needs --verdicts, --gold or --review-out")
        verdicts = _gold_verdicts(sample, args.gold)
    result = evaluate_ner_precision(verdicts, surviving)
    if args.out:
        result.write_csv(args.out)
    for lang, stage, total, correct, precision in result.rows():
        print(f"{lang:3s} {stage:6s} extractions={total:4d} correct={correct:4d} precision={precision}")
    return 0


def _years(text: str | None):
    if not text:
        return None
    years = []
    for part in text.split(","):
        lo, _, hi = part.partition("-")
        years.extend(range(int(lo), int(hi or lo) + 1))
    return years


def cmd_report(args) -> int:
    spec = ReportSpec(
        names=args.report or (),
        categories=args.category,
        years=_years(args.years),
        top_k=args.top_k,
        types=args.type,
        prefilter=args.prefilter,
    )
    written = run_report(args.corpus, args.out, spec)
    for p in written:
        print(p)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="urlsem", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"urlsem {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def cdx_inputs(sp, required=True):
        sp.add_argument("inputs", nargs="+" if required else "*", help="CDX files (plain or gzip)")
        sp.add_argument("--layout", help='field layout, e.g. "N b a m s k r M S V g"')
        sp.add_argument("--category-map", help="TSV domain<TAB>category")

    sp = sub.add_parser("ingest", help="parse and clean CDX files, print the ingest summary")
    cdx_inputs(sp)
    sp.add_argument("--out", help="write the JSON summary here too")
    sp.add_argument("--captures-out", help="TSV of admitted captures")
    sp.set_defaults(func=cmd_ingest)

    sp = sub.add_parser("stopwords", help="stop-word candidates from a seeded URL sample")
    cdx_inputs(sp)
    sp.add_argument("--sample-size", type=int, default=10_000)
    sp.add_argument("--top-k", type=int, default=100)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--admitted-only", action="store_true",
                    help="sample from cleaned captures instead of every CDX line")
    sp.add_argument("--out", required=True, help="candidate CSV token,count,share")
    sp.add_argument("--stoplist-out", help="also write the candidates as a stop-list file for review")
    sp.set_defaults(func=cmd_stopwords)

    sp = sub.add_parser("lang-train", help="train a character n-gram profile")
    sp.add_argument("--language", required=True)
    sp.add_argument("--wordlist", nargs="+", required=True, help="word<TAB>count files")
    sp.add_argument("--orders", type=int, default=DEFAULT_ORDERS)
    sp.add_argument("--max-rank", type=int, default=DEFAULT_MAX_RANK)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_lang_train)

    sp = sub.add_parser("lang-eval", help="language precision on hand-labeled URLs")
    sp.add_argument("labeled", help="TSV url<TAB>gold")
    sp.add_argument("--profiles", nargs="*")
    sp.add_argument("--stoplist")
    sp.add_argument("--cutoff", type=float, default=DEFAULT_CUTOFF)
    sp.add_argument("--out", help="CSV tag,predicted,correct,precision")
    sp.set_defaults(func=cmd_lang_eval)

    sp = sub.add_parser("annotate", help="run the full pipeline over CDX inputs")
    cdx_inputs(sp, required=False)
    sp.add_argument("--config", help="JSON file with RunConfig keys; flags override it")
    sp.add_argument("--out", dest="out", help="output directory")
    sp.add_argument("--gazetteer")
    sp.add_argument("--stoplist")
    sp.add_argument("--profiles", nargs="*")
    sp.add_argument("--max-terms", type=int)
    sp.add_argument("--min-url-freq", type=int)
    sp.add_argument("--cutoff", type=float)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--workers", type=int)
    sp.set_defaults(func=cmd_annotate)

    sp = sub.add_parser("ner-eval", help="entity precision before/after the post-filter")
    sp.add_argument("corpus", help="annotate output directory")
    sp.add_argument("--sample-size", type=int, default=100)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--review-out", help="write the sampled extractions as a review sheet")
    sp.add_argument("--verdicts", help="reviewed sheet (correct column filled in)")
    sp.add_argument("--gold", help="TSV label<TAB>type of correct entities, judges the sample")
    sp.add_argument("--out", help="CSV language,stage,extractions,correct,precision")
    sp.set_defaults(func=cmd_ner_eval)

    sp = sub.add_parser("report", help="aggregate reports over an annotated corpus")
    sp.add_argument("corpus", help="annotate output directory")
    sp.add_argument("--out", required=True, help="report directory")
    sp.add_argument("--report", action="append", choices=sorted(REPORTS))
    sp.add_argument("--category", action="append")
    sp.add_argument("--years", help="e.g. 2000-2012 or 2005,2007")
    sp.add_argument("--top-k", type=int, default=10)
    sp.add_argument("--type", action="append")
    sp.add_argument("--prefilter", action="store_true", help="count entities before post-filtering")
    sp.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, ConfigError, UnknownReport) as exc:
        print(f"urlsem: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (PipelineError, MissingCorpus, ValueError, OSError) as exc:
        print(f"urlsem: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
