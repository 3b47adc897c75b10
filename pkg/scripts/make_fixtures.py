#!/usr/bin/env python3
"""Regenerate the golden end-to-end fixture under tests/fixtures/golden.

Writes the 1,000-line synthetic corpus and its resources to ``input/``
and the annotate outputs to ``expected/``.  Only rerun this after an
intentional behaviour change, and re-check the outputs by hand before
committing them.
"""

import argparse
import shutil
from pathlib import Path

from urlsem.pipeline import ANNOTATIONS, ENTITY_TABLE, ENTITY_TABLE_RAW, RunConfig, run_annotate
from urlsem.synth import generate

ROOT = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "golden"
SEED = 42
LINES = 1000


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=ROOT)
    args = ap.parse_args()

    inp, exp = args.out / "input", args.out / "expected"
    paths = generate(LINES, seed=SEED).write(inp)
    work = args.out / "_run"
    run_annotate(RunConfig(inputs=[str(paths["cdx"])], output_dir=str(work),
                           gazetteer=str(paths["gazetteer"]),
                           category_map=str(paths["category_map"]), seed=SEED))
    exp.mkdir(parents=True, exist_ok=True)
    for name in (ANNOTATIONS, ENTITY_TABLE, ENTITY_TABLE_RAW):
        shutil.copyfile(work / name, exp / name)
    shutil.rmtree(work)
    print(f"golden fixture written to {args.out}")


if __name__ == "__main__":
    main()
