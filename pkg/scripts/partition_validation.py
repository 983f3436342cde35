"""Induced partition distortion D* against final regret across methods and seeds."""
from _common import print_rows, run_kind


def describe(res):
    print_rows(res.summary, ["method", "alpha", "dstar_mean", "regret_mean"])
    print(f"spearman(D*, regret) over all cells: {res.report['spearman_dstar_regret']:.3f}")


if __name__ == "__main__":
    run_kind("partition_validation", describe)
