"""Monte-Carlo frequency of any-time confidence-envelope violations."""
from _common import print_rows, run_kind


def describe(res):
    print_rows(res.summary, ["delta", "runs", "violation_rate", "bound", "ok"])


if __name__ == "__main__":
    run_kind("certificate_audit", describe)
