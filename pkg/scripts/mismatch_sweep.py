"""Final regret against mismatch severity alpha at a fixed budget."""
from _common import print_rows, run_kind


def describe(res):
    print_rows(res.summary, ["method", "alpha", "regret_mean", "regret_std"])
    for m, rho in sorted(res.report["spearman_alpha"].items()):
        print(f"spearman(alpha, regret) {m}: {rho}")


if __name__ == "__main__":
    run_kind("mismatch_sweep", describe)
