"""Cumulative regret of all seven methods on the Decoupled Bandit (alpha=0.5, K=M)."""
from _common import print_rows, run_kind


def describe(res):
    print_rows(res.summary, ["method", "regret_mean", "regret_std", "dstar_mean", "dval_mean"])


if __name__ == "__main__":
    run_kind("regret", describe)
