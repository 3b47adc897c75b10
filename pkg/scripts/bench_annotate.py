#!/usr/bin/env python3
"""Time ``annotate`` on a synthetic corpus.

    python3 scripts/bench_annotate.py --lines 1000000 --workers 1
"""

import argparse
import json
import resource
import tempfile
from pathlib import Path
from time import perf_counter

from urlsem.pipeline import RunConfig, run_annotate
from urlsem.synth import generate


def main() -> None:
    ap = argparse.ArgumentParser(description="annotate throughput on synthetic CDX")
    ap.add_argument("--lines", type=int, default=1_000_000)
    ap.add_argument("--seed", type=int, default=3)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--keep", type=Path, help="write corpus and outputs here instead of a temp dir")
    args = ap.parse_args()

    with tempfile.TemporaryDirectory() as tmp:
        base = args.keep or Path(tmp)
        t0 = perf_counter()
        paths = generate(args.lines, seed=args.seed).write(base / "input")
        gen = perf_counter() - t0

        cfg = RunConfig(inputs=[str(paths["cdx"])], output_dir=str(base / "out"),
                        gazetteer=str(paths["gazetteer"]),
                        category_map=str(paths["category_map"]), workers=args.workers)
        t0 = perf_counter()
        manifest = run_annotate(cfg)
        elapsed = perf_counter() - t0

    rss = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss / 1024
    print(json.dumps({
        "lines": manifest.counters["lines_read"],
        "workers": args.workers,
        "generate_s": round(gen, 2),
        "annotate_s": round(elapsed, 2),
        "lines_per_s": round(manifest.counters["lines_read"] / elapsed),
        "peak_rss_mb": round(rss),
    }, indent=2))


if __name__ == "__main__":
    main()
