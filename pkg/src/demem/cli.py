"""Command line entry point.

    demem regret --out runs/regret --seeds 0..19 --threads 4
    demem budget_sweep --config my.json --out runs/budget
    demem oracle eps-star --table mu.json --k 2

Exit codes: 0 success, 2 validation error, 3 capacity error.
"""
from __future__ import annotations

import argparse
import json
import sys

from .errors import CapacityError, DomainError
from .harness import KINDS, ExperimentConfig, preset, run_experiment

ORACLE_OPS = ("eps-star", "eps-star-avg", "covering", "packing", "info-floor", "sandwich", "forgetting",
              "setcover")


def parse_seeds(text: str) -> list[int]:
    """``"a..b"`` (inclusive) or a comma list."""
    try:
        if ".." in text:
            lo, hi = text.split("..", 1)
            lo, hi = int(lo), int(hi)
            if hi < lo:
                raise ValueError
            return list(range(lo, hi + 1))
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise DomainError(f"seeds: cannot parse {text!r}; expected a..b or a comma list") from None


def _load_config(kind: str, path: str | None, seeds: str | None) -> ExperimentConfig:
    overrides = {}
    if path:
        with open(path) as fh:
            doc = json.load(fh)
        doc.pop("kind", None)
        overrides.update(doc)
    if seeds:
        overrides["seeds"] = parse_seeds(seeds)
    return preset(kind, **overrides)


def _oracle(args) -> dict:
    from . import oracle
    from .core import RewardTable, uniform
    if args.op == "setcover":
        with open(args.table) as fh:
            sc = oracle.SetCoverInstance.from_json(fh.read())
        mu = oracle.setcover_to_memory(sc)
        k = args.k if args.k is not None else sc.k
        eps = args.eps if args.eps is not None else 0.5
        star = oracle.eps_star_inf(mu, k).eps_star_inf
        return {"feasible": oracle.setcover_feasible(sc, k), "eps_star_inf": star, "k": k,
                "eps": eps, "within_eps": star <= eps, "table": json.loads(mu.to_json())}
    with open(args.table) as fh:
        mu = RewardTable.from_json(fh.read())

    def need(name):
        val = getattr(args, name)
        if val is None:
            raise DomainError(f"--{name} is required for {args.op}")
        return val

    if args.op == "eps-star":
        return json.loads(oracle.eps_star_inf(mu, need("k")).to_json())
    if args.op == "eps-star-avg":
        return {"eps_star_avg": oracle.eps_star_avg(mu, uniform(mu.n), need("k")), "k": args.k}
    if args.op == "covering":
        return {"covering": oracle.covering_number(mu, need("eps")), "eps": args.eps}
    if args.op == "packing":
        return {"packing": oracle.packing_number(mu, need("eps")), "eps": args.eps}
    if args.op == "info-floor":
        return {"info_floor_bits": oracle.info_floor(mu, need("eps")), "eps": args.eps}
    if args.op == "sandwich":
        return oracle.sandwich_check(mu, need("eps"), need("k")).as_dict()
    rep = oracle.verify_forgetting_boundary(mu, need("eps"))
    return {"eps": rep.eps, "subsets_checked": rep.subsets_checked, "pairs_checked": rep.pairs_checked,
            "mergeable_subsets": rep.mergeable_subsets}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="demem", description="Decision-centric budgeted memory experiments.")
    sub = ap.add_subparsers(dest="command", required=True)
    for kind in KINDS:
        p = sub.add_parser(kind, help=f"run the {kind} experiment")
        p.add_argument("--config", help="JSON file overriding the preset fields")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seeds", help="seed range a..b (inclusive) or comma list")
        p.add_argument("--threads", type=int, default=1, help="worker processes across cells")
    p = sub.add_parser("oracle", help="exact frontier operations on a reward-table JSON file")
    p.add_argument("op", choices=ORACLE_OPS)
    p.add_argument("--table", required=True, help="reward table JSON (or set-cover JSON for setcover)")
    p.add_argument("--k", type=int)
    p.add_argument("--eps", type=float)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "oracle":
            print(json.dumps(_oracle(args), sort_keys=True))
            return 0
        if args.threads < 1:
            raise DomainError("threads: must be at least 1")
        cfg = _load_config(args.command, args.config, args.seeds)
        res = run_experiment(cfg, args.out, threads=args.threads)
        print(json.dumps({"out": args.out, "files": len(res.files), "report": res.report},
                         sort_keys=True, default=str))
        return 0
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return 3
    except (DomainError, KeyError, json.JSONDecodeError, OSError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
