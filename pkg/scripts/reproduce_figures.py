#!/usr/bin/env python3
"""Regenerate the dataset of every preset as CSV.

    python3 scripts/reproduce_figures.py --out results/ --threads 4
"""

import argparse
import sys
import time
from pathlib import Path

from wvafisher.experiments.cli import main as cli

JOBS = [
    ("profiles", "fig1a", "fig1a_profiles.csv"),
    ("fi-sweep", "fig1b", "fig1b.csv"),
    ("fi-sweep", "fig1c", "fig1c.csv"),
    ("fi-sweep", "fig2a", "fig2a.csv"),
    ("fi-sweep", "fig2b", "fig2b.csv"),
    ("fi-sweep", "fig3a", "fig3a.csv"),
    ("aw-scan", "fig3b", "fig3b_scan.csv"),
    ("optimal-aw", "fig3b", "fig3b_optimum.csv"),
    ("effect-matrix", "table1", "table1.csv"),
]


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", default="results", help="output directory")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--only", nargs="*", help="restrict to these preset names")
    args = p.parse_args(argv)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    status = 0
    for cmd, name, fname in JOBS:
        if args.only and name not in args.only:
            continue
        t0 = time.perf_counter()
        code = cli([cmd, "--preset", name, "--out", str(out / fname), "--threads", str(args.threads)])
        print(f"{cmd:14s} {name:7s} -> {fname:20s} exit {code}  {time.perf_counter() - t0:6.1f} s")
        status = status or code
    return status


if __name__ == "__main__":
    sys.exit(main())
