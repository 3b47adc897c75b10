import json
import shutil
from collections import Counter
from pathlib import Path

import pytest

import oracles
from urlsem.cli import main
from urlsem.entities import EntityStats, EntityTable
from urlsem.pipeline import (ANNOTATIONS, ANNOTATIONS_RAW, ENTITY_TABLE, ENTITY_TABLE_RAW,
                             MANIFEST, ConfigError, PipelineError, RunConfig, RunManifest,
                             read_annotations, run_annotate)
from urlsem.reports import MissingCorpus, ReportSpec, UnknownReport, run_report

GOLDEN = Path(__file__).parent / "fixtures" / "golden"


def golden_config(out, **kw):
    inp = GOLDEN / "input"
    return RunConfig(inputs=[str(inp / "corpus.cdx")], output_dir=str(out),
                     gazetteer=str(inp / "gazetteer.tsv"),
                     category_map=str(inp / "categories.tsv"), seed=42, **kw)


@pytest.fixture(scope="module")
def golden_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("golden")
    manifest = run_annotate(golden_config(out))
    return out, manifest


@pytest.mark.parametrize("name", [ANNOTATIONS, ENTITY_TABLE, ENTITY_TABLE_RAW])
def test_golden_outputs(golden_run, name):
    out, _ = golden_run
    assert (out / name).read_bytes() == (GOLDEN / "expected" / name).read_bytes()


def test_golden_internal_consistency(golden_run):
    out, _ = golden_run
    raw = [json.loads(l) for l in (out / ANNOTATIONS_RAW).read_text("utf-8").splitlines()]
    final = [json.loads(l) for l in (out / ANNOTATIONS).read_text("utf-8").splitlines()]
    urls, caps = {}, Counter()
    for rec in raw:
        for e in rec["entities"]:
            urls.setdefault((e["label"], e["type"]), set()).add(rec["url"])
            caps[e["label"], e["type"]] += 1
    recount = {k: EntityStats(len(v), caps[k]) for k, v in urls.items()}
    assert EntityTable.read_csv(out / ENTITY_TABLE_RAW) == recount
    surviving = oracles.postfilter_oracle(recount)
    assert EntityTable.read_csv(out / ENTITY_TABLE) == surviving
    assert len(raw) == len(final)
    for r, f in zip(raw, final):
        assert {k: v for k, v in r.items() if k != "entities"} == \
               {k: v for k, v in f.items() if k != "entities"}
        assert f["entities"] == [e for e in r["entities"] if (e["label"], e["type"]) in surviving]


def test_manifest_counter_algebra(golden_run):
    out, manifest = golden_run
    c = RunManifest.read(out / MANIFEST).counters
    assert manifest.complete and manifest.error is None
    parsed = c["lines_read"] - c["malformed"]
    assert parsed == c["html_filtered"] + c["success_filtered"] + c["admitted"]
    assert c["admitted"] <= parsed
    assert c["captures_annotated"] <= c["captures_with_raw_entities"] <= c["admitted"]
    assert sum(v for k, v in c.items() if k.startswith("lang_")) == c["admitted"]
    assert c["entities_surviving"] <= c["entities_raw"]
    n = sum(1 for _ in read_annotations(out / ANNOTATIONS))
    assert n == c["admitted"]
    assert sum(1 for a in read_annotations(out / ANNOTATIONS) if a.entities) == \
        c["captures_annotated"]
    snap = RunManifest.read(out / MANIFEST)
    assert snap.config["seed"] == 42
    assert list(snap.inputs.values())[0].startswith("sha256:")


def test_parallel_run_is_sorted_and_equivalent(tmp_path, golden_run, monkeypatch):
    import urlsem.pipeline as pl
    monkeypatch.setattr(pl, "CHUNK_LINES", 97)  # many chunks even on a small corpus
    out, _ = golden_run
    m = run_annotate(golden_config(tmp_path / "p", workers=2))
    lines = (tmp_path / "p" / ANNOTATIONS).read_text("utf-8").splitlines()
    keys = [(json.loads(l)["url"], json.loads(l)["timestamp"]) for l in lines]
    assert keys == sorted(keys)
    assert sorted(lines) == sorted((out / ANNOTATIONS).read_text("utf-8").splitlines())
    for name in (ENTITY_TABLE, ENTITY_TABLE_RAW):
        assert (tmp_path / "p" / name).read_bytes() == (out / name).read_bytes()
    serial = RunManifest.read(out / MANIFEST).counters
    assert m.counters == serial


def test_empty_input(tmp_path):
    cdx = tmp_path / "empty.cdx"
    cdx.write_text("")
    gaz = tmp_path / "g.tsv"
    gaz.write_text("berlin\tlocation\tde\n")
    out = tmp_path / "out"
    assert main(["annotate", str(cdx), "--gazetteer", str(gaz), "--out", str(out)]) == 0
    assert (out / ANNOTATIONS).read_text() == ""
    assert (out / ENTITY_TABLE).read_text() == "label,type,url_frequency,capture_frequency\n"
    m = RunManifest.read(out / MANIFEST)
    assert m.complete and set(m.counters.values()) == {0}
    rep = tmp_path / "rep"
    assert main(["report", str(out), "--out", str(rep)]) == 0
    for csv_path in rep.glob("*.csv"):
        if csv_path.name != "summary.csv":
            assert len(csv_path.read_text().splitlines()) == 1, csv_path.name
    assert (rep / "captures_per_year.csv").read_text() == "year,count,share\n"


def test_missing_gazetteer_fails_before_processing(tmp_path):
    cfg = golden_config(tmp_path / "out")
    cfg.gazetteer = str(tmp_path / "nope.tsv")
    with pytest.raises(ConfigError):
        run_annotate(cfg)
    assert not (tmp_path / "out").exists()
    with pytest.raises(ConfigError):
        run_annotate(RunConfig(inputs=cfg.inputs, output_dir=str(tmp_path / "out")))
    rc = main(["annotate", cfg.inputs[0], "--gazetteer", cfg.gazetteer,
               "--out", str(tmp_path / "out")])
    assert rc == 1


def test_config_file(tmp_path):
    cfg = golden_config(tmp_path / "a")
    p = tmp_path / "run.json"
    data = {k: v for k, v in cfg.snapshot().items()}
    p.write_text(json.dumps(data))
    assert RunConfig.from_file(p) == cfg
    assert RunConfig.from_file(p, workers=3).workers == 3
    p.write_text(json.dumps({**data, "bogus": 1}))
    with pytest.raises(ConfigError):
        RunConfig.from_file(p)
    assert main(["annotate", "--config", str(p)]) == 1


def test_corrupt_gzip_is_a_data_error(tmp_path):
    bad = tmp_path / "bad.cdx.gz"
    bad.write_bytes(b"\x1f\x8b" + b"not really gzip" * 4)
    cfg = golden_config(tmp_path / "out")
    cfg.inputs = [str(bad)]
    with pytest.raises(PipelineError) as info:
        run_annotate(cfg)
    assert info.value.stage == "ingest"
    m = RunManifest.read(tmp_path / "out" / MANIFEST)
    assert not m.complete and m.error.startswith("[ingest]")
    cfg_args = ["annotate", str(bad), "--gazetteer", cfg.gazetteer, "--out", str(tmp_path / "o2")]
    assert main(cfg_args) == 2


def test_usage_errors_exit_1(capsys):
    assert_exit(["frobnicate"], 1)
    assert_exit(["report"], 1)
    assert_exit(["report", "x", "--out", "y", "--report", "nope"], 1)


def assert_exit(argv, code):
    with pytest.raises(SystemExit) as info:
        main(argv)
    assert info.value.code == code


def test_report_errors(tmp_path, golden_run):
    with pytest.raises(MissingCorpus):
        run_report(tmp_path / "none", tmp_path / "r", ReportSpec())
    assert main(["report", str(tmp_path / "none"), "--out", str(tmp_path / "r")]) == 2
    out, _ = golden_run
    with pytest.raises(UnknownReport):
        run_report(out, tmp_path / "r", ReportSpec(names=["nope"]))


def test_bad_annotation_line_reports_location(tmp_path, golden_run):
    out, _ = golden_run
    corpus = tmp_path / "c"
    shutil.copytree(out, corpus)
    with open(corpus / ANNOTATIONS, "a", encoding="utf-8") as fh:
        fh.write("{not json\n")
    with pytest.raises(PipelineError) as info:
        run_report(corpus, tmp_path / "r", ReportSpec())
    assert info.value.line is not None and info.value.stage == "report"


def test_reports_match_recount(tmp_path, golden_run):
    out, _ = golden_run
    rep = tmp_path / "rep"
    run_report(out, rep, ReportSpec())
    recs = list(read_annotations(out / ANNOTATIONS))
    rows = json.loads((rep / "captures_per_year.json").read_text())
    assert {r["year"]: (r["count"], r["share"]) for r in rows} == oracles.per_year(recs)
    rows = json.loads((rep / "categories.json").read_text())
    want = oracles.category_rows(recs)
    for r in rows:
        assert (r["domains"], r["captures"], r["entity_captures"]) == want[r["category"]][:3]
    rows = json.loads((rep / "dominant_domains.json").read_text())
    for r in rows:
        scope = None if r["scope"] == "ALL" else r["scope"]
        assert (r["domain"], r["count"], r["total"]) == oracles.dominant(recs, scope, r["year"])
    rows = json.loads((rep / "entity_types_by_year.json").read_text())
    shares = oracles.type_shares(recs)
    for r in rows:
        assert abs(r["share"] - shares[r["year"]][r["type"]]) <= 1e-9
    head = (rep / "categories.csv").read_text().splitlines()
    assert head[0] == "category,domains,captures,entity_captures,entities_pct"
    assert all(len(line.rsplit(",", 1)[1].split(".")[1]) == 2 for line in head[1:])
    assert (rep / "captures_per_year.tsv").read_text().startswith("x\tseries\tvalue\n")


def test_report_filters(tmp_path, golden_run):
    out, _ = golden_run
    rep = tmp_path / "rep"
    rc = main(["report", str(out), "--out", str(rep), "--report", "captures_per_category_year",
               "--report", "top_entities", "--category", "news", "--years", "2005-2007",
               "--top-k", "2", "--type", "person"])
    assert rc == 0
    rows = json.loads((rep / "captures_per_category_year.json").read_text())
    assert rows and all(r["category"] == "news" and 2005 <= r["year"] <= 2007 for r in rows)
    rows = json.loads((rep / "top_entities.json").read_text())
    assert [r["label"] for r in rows] == ["mannschaft", "katja kessler"]
    assert sorted(p.name for p in rep.iterdir()) == [
        "captures_per_category_year.csv", "captures_per_category_year.json",
        "captures_per_category_year.tsv", "top_entities.csv", "top_entities.json"]


def test_prefilter_reports_count_more_entities(tmp_path, golden_run):
    out, _ = golden_run
    run_report(out, tmp_path / "a", ReportSpec(names=["summary"]))
    run_report(out, tmp_path / "b", ReportSpec(names=["summary"], prefilter=True))
    a = json.loads((tmp_path / "a" / "summary.json").read_text())[0]
    b = json.loads((tmp_path / "b" / "summary.json").read_text())[0]
    assert a["captures"] == b["captures"]
    assert a["entity_captures"] <= b["entity_captures"]


def test_cli_stages(tmp_path, fixtures_dir):
    inp = GOLDEN / "input"
    cdx = str(inp / "corpus.cdx")
    assert main(["ingest", cdx, "--category-map", str(inp / "categories.tsv"),
                 "--out", str(tmp_path / "s.json"), "--captures-out", str(tmp_path / "c.tsv")]) == 0
    summary = json.loads((tmp_path / "s.json").read_text())
    assert summary["lines_read"] == 1000
    assert len((tmp_path / "c.tsv").read_text().splitlines()) == summary["admitted"] + 1

    assert main(["stopwords", cdx, "--sample-size", "50", "--top-k", "5", "--seed", "3",
                 "--out", str(tmp_path / "cand.csv"),
                 "--stoplist-out", str(tmp_path / "stop.txt")]) == 0
    assert len((tmp_path / "cand.csv").read_text().splitlines()) == 6
    assert (tmp_path / "stop.txt").read_text().startswith("#! corpus:")

    wl = tmp_path / "w.tsv"
    wl.write_text("haus\t10\nmaus\t3\n")
    assert main(["lang-train", "--language", "de", "--wordlist", str(wl), "--max-rank", "5",
                 "--out", str(tmp_path / "de.json")]) == 0
    assert json.loads((tmp_path / "de.json").read_text())["max_rank"] == 5

    assert main(["lang-eval", str(fixtures_dir / "lang_labeled.tsv"),
                 "--out", str(tmp_path / "lang.csv")]) == 0
    assert (tmp_path / "lang.csv").read_text().startswith("tag,predicted,correct,precision\n")


def test_ner_eval_cli(tmp_path, golden_run):
    out, _ = golden_run
    gold = str(GOLDEN / "input" / "gold_entities.tsv")
    sheet = tmp_path / "review.csv"
    assert main(["ner-eval", str(out), "--seed", "1", "--review-out", str(sheet)]) == 0
    assert sheet.read_text().startswith("url,language,label,type,correct\n")
    res = tmp_path / "ner.csv"
    assert main(["ner-eval", str(out), "--seed", "1", "--gold", gold, "--out", str(res)]) == 0
    first = res.read_bytes()
    assert main(["ner-eval", str(out), "--seed", "1", "--gold", gold, "--out", str(res)]) == 0
    assert res.read_bytes() == first
    # a reviewed sheet gives the same result as judging against the gold list
    gold_set = {tuple(l.split("\t")) for l in Path(gold).read_text().splitlines()
                if l and not l.startswith("#")}
    rows = sheet.read_text().splitlines()
    filled = [rows[0]] + [r + ("1" if tuple(r.split(",")[2:4]) in gold_set else "0")
                          for r in rows[1:]]
    sheet.write_text("\n".join(filled) + "\n")
    res2 = tmp_path / "ner2.csv"
    assert main(["ner-eval", str(out), "--verdicts", str(sheet), "--out", str(res2)]) == 0
    assert res2.read_bytes() == first
    assert main(["ner-eval", str(tmp_path / "missing")]) == 2
    assert main(["ner-eval", str(out)]) == 1
