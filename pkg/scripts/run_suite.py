"""Run the acceptance matrix and write summary.csv / reports.jsonl.

    python3 scripts/run_suite.py --digits 40 --out-dir runs/d40
"""
import argparse
import sys

from periodlab.cli import main


def parse_args():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--digits", type=int, default=40)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out-dir", default="runs/suite")
    p.add_argument("--manifest", default=None)
    p.add_argument("--timings", action="store_true")
    return p.parse_args()


if __name__ == "__main__":
    a = parse_args()
    argv = ["suite", "--digits", str(a.digits), "--seed", str(a.seed), "--out-dir", a.out_dir]
    if a.manifest:
        argv += ["--manifest", a.manifest]
    if a.timings:
        argv.append("--timings")
    sys.exit(main(argv))
