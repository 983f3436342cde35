"""Exhaustive checks of the forgetting boundary, covering/packing sandwich and Set-Cover reduction."""
import argparse
import json

from demem.checks import forgetting_sweep, sandwich_sweep, setcover_sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    for name, fn, n in (("forgetting", forgetting_sweep, 100), ("sandwich", sandwich_sweep, 200),
                        ("setcover", setcover_sweep, 100)):
        rep = fn(n, seed=args.seed)
        status = "ok" if not rep["counterexamples"] else "COUNTEREXAMPLES"
        print(f"{name:>10}: {status} {json.dumps({k: v for k, v in rep.items() if k != 'counterexamples'})}")
        for ce in rep["counterexamples"][:5]:
            print("    ", ce)


if __name__ == "__main__":
    main()
