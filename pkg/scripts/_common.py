"""Shared argument handling for the experiment scripts."""
import argparse
import csv
import os

from demem.cli import parse_seeds
from demem.harness import preset, run_experiment


def run_kind(kind: str, describe) -> None:
    ap = argparse.ArgumentParser(description=f"Run the {kind} experiment with its preset configuration.")
    ap.add_argument("--out", default=os.path.join("results", kind))
    ap.add_argument("--seeds", default=None, help="a..b inclusive")
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()
    overrides = {"seeds": parse_seeds(args.seeds)} if args.seeds else {}
    res = run_experiment(preset(kind, **overrides), args.out, threads=args.threads)
    describe(res)
    print(f"wrote {len(res.files)} files to {args.out}")


def print_rows(rows, cols) -> None:
    print("  ".join(f"{c:>14}" for c in cols))
    for r in rows:
        print("  ".join(f"{r[c]:>14.4g}" if isinstance(r[c], float) else f"{str(r[c]):>14}" for c in cols))


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(line for line in fh if not line.startswith("#")))
