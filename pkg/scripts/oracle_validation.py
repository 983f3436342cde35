"""Greedy partition versus the exact frontier with zero-width certificates."""
from _common import print_rows, run_kind


def describe(res):
    print_rows(res.summary, ["feasibility", "K", "eps_star_mean", "ratio_mean", "ratio_max", "exact_freq",
                             "zero_gap_freq"])
    print(res.report)


if __name__ == "__main__":
    run_kind("oracle_validation", describe)
