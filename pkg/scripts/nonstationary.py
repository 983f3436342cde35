"""Restart wrapper versus a plain run, with and without a change point at T/2."""
from _common import print_rows, run_kind


def describe(res):
    print_rows(res.summary, ["env", "plain_mean", "restarts_mean", "paired_diff_mean", "paired_diff_std"])


if __name__ == "__main__":
    run_kind("nonstationary", describe)
