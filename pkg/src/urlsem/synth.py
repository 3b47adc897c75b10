"""Seeded synthetic CDX corpora for tests and benchmarks.

The generator knows the truth about every line it writes (which URLs
ever succeeded, which entities are real), so tests can check pipeline
output against it.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

CATEGORY_DOMAINS = {
    "news": ["spiegel.de", "hna.de", "stern.de", "openpr.de", "welt.de"],
    "universities": ["tu-berlin.de", "uni-leipzig.de", "dblp.uni-trier.de", "dict.tu-chemnitz.de"],
    "shopping": ["otto.de", "ebay.de", "tchibo.de"],
    "sports": ["kicker.de", "transfermarkt.de"],
    "business": ["postbank.de", "siemens.de"],
    "regional": ["wg-gesucht.de", "berlin.de"],
    "education": ["stayfriends.de", "wer-weiss-was.de"],
}

DE_WORDS = ("nachrichten politik wirtschaft sport fussball wohnungen zimmer angebote rezepte "
            "wetter reise kultur gesundheit kinder schule studium forschung veranstaltungen "
            "mannschaft spieler verein tabelle immobilien mieten kaufen verkaufen gebraucht "
            "unternehmen meldung artikel aktuelles bundesliga urlaub ferienwohnung stadt "
            "vorlesung lehrstuhl fakultaet girokonto kredit filiale woerterbuch uebersetzung").split()
EN_WORDS = ("news world business shopping products reviews music movies travel hotel weather "
            "health research university students conference journal proceedings software "
            "download games players league results report market finance careers jobs "
            "dictionary translation tour concert collection fashion").split()

# label -> (type, gold).  gold=False marks gazetteer noise the reviewer rejects.
ENTITIES = {
    "deutschland": ("location", True), "berlin": ("location", True),
    "hamburg": ("location", True), "muenchen": ("location", True),
    "leipzig": ("location", True), "prenzlauer berg": ("location", True),
    "nordrhein westfalen": ("location", True), "kassel": ("location", True),
    "michael jackson": ("person", True), "heidi klum": ("person", True),
    "harald schmidt": ("person", True), "tommy hilfiger": ("person", True),
    "franz maget": ("person", True), "katja kessler": ("person", True),
    "merkel": ("person", True), "costa concordia": ("misc", True),
    "siemens": ("organization", True), "bundestag": ("organization", True),
    # frequent but wrong
    "mannschaft": ("person", False), "tabelle": ("location", False),
    # long labels, wrong
    "costa concordia zahl": ("misc", False), "neue wohnung berlin": ("location", False),
    "michael jackson tour": ("person", False),
}

LONG_NOISE = {"costa concordia zahl": ["costa", "concordia", "zahl"],
              "neue wohnung berlin": ["neue", "wohnung", "berlin"],
              "michael jackson tour": ["michael", "jackson", "tour"]}

_SYLLABLES = ("ka ri mo ten bal sor vin del gra lum pes tor nak fil dor wen bra zel "
              "mur ost lan fri hel ger").split()


def noise_word(k: int) -> str:
    """The k-th pronounceable nonsense word; distinct for distinct k < 24**4."""
    parts = []
    for _ in range(4):
        k, r = divmod(k, len(_SYLLABLES))
        parts.append(_SYLLABLES[r])
    return "".join(parts)


@dataclass
class SyntheticCorpus:
    lines: list[str]
    category_map: dict[str, str]
    gazetteer: list[tuple[str, str, str]]  # label, type, language
    gold: set[tuple[str, str]]
    successful: set[str] = field(default_factory=set)

    def write(self, directory, name: str = "corpus.cdx") -> dict:
        from pathlib import Path
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        paths = {"cdx": d / name, "category_map": d / "categories.tsv",
                 "gazetteer": d / "gazetteer.tsv", "gold": d / "gold_entities.tsv"}
        with open(paths["cdx"], "w", encoding="utf-8", newline="\n") as fh:
            fh.write(" CDX N b a m s k r M S V g\n")
            for line in self.lines:
                fh.write(line + "\n")
        with open(paths["category_map"], "w", encoding="utf-8") as fh:
            fh.write("# domain\tcategory\n")
            for dom, cat in sorted(self.category_map.items()):
                fh.write(f"{dom}\t{cat}\n")
        with open(paths["gazetteer"], "w", encoding="utf-8") as fh:
            fh.write("# label\ttype\tlanguage\n")
            for row in self.gazetteer:
                fh.write("\t".join(row) + "\n")
        with open(paths["gold"], "w", encoding="utf-8") as fh:
            fh.write("# label\ttype judged correct\n")
            for label, etype in sorted(self.gold):
                fh.write(f"{label}\t{etype}\n")
        return paths


def surt(url: str) -> str:
    rest = url.split("://", 1)[-1]
    host, _, path = rest.partition("/")
    host = host.split(":")[0].lower()
    if host.startswith("www."):
        host = host[4:]
    return ",".join(reversed(host.split("."))) + ")/" + path.lower()


def generate(n_lines: int, seed: int = 0, captures_per_url: float = 3.0,
             noise_rate: float = 0.03, malformed_rate: float = 0.005) -> SyntheticCorpus:
    rng = random.Random(seed)
    cmap = {d: c for c, ds in CATEGORY_DOMAINS.items() for d in ds}
    domains = sorted(cmap) + ["example.de", "blog.example.de"]  # last two uncategorized
    n_urls = max(1, int(n_lines / captures_per_url))
    used_noise = []
    ent_labels = list(ENTITIES)
    urls = []
    for u in range(n_urls):
        dom = rng.choice(domains)
        host = ("www." + dom) if rng.random() < 0.7 else dom
        if rng.random() < 0.1:
            host += ":80"
        kind = rng.random()
        words = []
        if kind < 0.55:
            words = rng.sample(DE_WORDS, rng.randint(1, 4))
        elif kind < 0.85:
            words = rng.sample(EN_WORDS, rng.randint(1, 4))
        if words and rng.random() < 0.35:
            label = rng.choice(ent_labels)
            terms = LONG_NOISE.get(label, label.split())
            words.insert(rng.randint(0, len(words)), "-".join(t.capitalize() for t in terms))
        if words and rng.random() < noise_rate * 3:
            # each nonsense word lands in at most two URLs
            w = noise_word(u // 2)
            if not used_noise or used_noise[-1] != w:
                used_noise.append(w)
            words.append(w)
        segs = []
        if words:
            segs.append("/".join(words[:1]))
            if len(words) > 1:
                segs.append("-".join(words[1:]))
        segs.append(str(rng.randint(1, 999999)))
        path = "/" + "/".join(segs)
        ext = rng.choices([".html", ".htm", ".HTML", ".php", ".jpg", ".pdf", ""],
                          [60, 8, 2, 10, 10, 5, 5])[0]
        query = "?id=%d" % rng.randint(1, 99) if rng.random() < 0.1 else ""
        url = f"http://{host}{path}{ext}{query}"
        ever_ok = rng.random() < 0.85
        urls.append((url, ever_ok))

    year_weights = [1 + (y - 2000) ** 1.5 for y in range(2000, 2013)]
    lines, successful = [], set()
    for i in range(n_lines):
        url, ever_ok = urls[rng.randrange(n_urls)] if i >= n_urls else urls[i]
        if rng.random() < malformed_rate:
            lines.append(rng.choice(["x)/ 2006 http://x.de/ - - -", "garbage",
                                     f"{surt(url)} 2006133 {url} text/html 200 X - - 1 2 f.warc.gz"]))
            continue
        year = rng.choices(range(2000, 2013), year_weights)[0]
        ts = "%04d%02d%02d%02d%02d%02d" % (year, rng.randint(1, 12), rng.randint(1, 28),
                                           rng.randint(0, 23), rng.randint(0, 59),
                                           rng.randint(0, 59))
        if ever_ok:
            status = rng.choices(["200", "204", "301", "404", "-"], [70, 2, 12, 10, 6])[0]
        else:
            status = rng.choices(["301", "302", "404", "500", "-"], [30, 10, 40, 10, 10])[0]
        key = surt(url)
        if status[0] == "2":
            successful.add(key)
        mime = "text/html" if ".htm" in url.lower() else "application/octet-stream"
        digest = "%032X" % rng.getrandbits(128)
        lines.append(f"{key} {ts} {url} {mime} {status} {digest} - - "
                     f"{rng.randint(300, 90000)} {rng.randint(0, 10**9)} crawl-{year}.warc.gz")

    gaz, gold = [], set()
    for label, (etype, ok) in ENTITIES.items():
        for lang in ("de", "en"):
            gaz.append((label, etype, lang))
        if ok:
            gold.add((label, etype))
    for w in used_noise:
        for lang in ("de", "en"):
            gaz.append((w, "location", lang))
    return SyntheticCorpus(lines, cmap, gaz, gold, successful)
