"""Slot runtime: split precision under reward-flip noise, capacity, budgets, bridge bound."""
from _common import print_rows, run_kind


def describe(res):
    print_rows(res.summary, ["p", "runs", "witnesses", "precision", "bridge_ok_all", "max_active"])
    rep = {k: v for k, v in res.report.items() if k != "fuzz"}
    print(rep)


if __name__ == "__main__":
    run_kind("slot_audit", describe)
