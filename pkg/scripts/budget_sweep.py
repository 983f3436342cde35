"""Memory-distortion curve: DeMem's realized D_val as the slot budget K grows."""
from _common import print_rows, run_kind


def describe(res):
    print_rows(res.summary, ["method", "K", "dval_mean", "dval_std", "regret_mean"])


if __name__ == "__main__":
    run_kind("budget_sweep", describe)
