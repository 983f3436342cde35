"""Time-uniform confidence intervals and the cannot-link certificates built on them.

Each (context, action) pair carries a Hoeffding interval whose width uses a
union bound over pairs and rounds, so every interval holds at every round
with probability at least ``1 - delta``.  Unobserved pairs carry the
trivial interval ``[0, 1]``.  The gap, pair-distance and radius bounds
below are deterministic functions of those intervals.

Logs are natural throughout.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .core import RewardTable
from .errors import DomainError


def _check_delta(delta: float) -> None:
    if not 0.0 < delta < 1.0:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")


def conf_radius(n: int, N: int, A: int, t: int, delta: float) -> float:
    """``sqrt(log(4 N A t^2 / delta) / (2 n))``; ``inf`` for ``n = 0`` (trivial interval)."""
    _check_delta(delta)
    if t < 1:
        raise DomainError("round index t must be at least 1")
    if n <= 0:
        return math.inf
    return math.sqrt(math.log(4.0 * N * A * t * t / delta) / (2.0 * n))


def conf_radii(counts: np.ndarray, N: int, A: int, t: int, delta: float) -> np.ndarray:
    _check_delta(delta)
    if t < 1:
        raise DomainError("round index t must be at least 1")
    log_term = math.log(4.0 * N * A * t * t / delta)
    with np.errstate(divide="ignore"):
        return np.sqrt(log_term / (2.0 * np.asarray(counts, dtype=float)))


@dataclass
class CertificateSet:
    """Frozen confidence envelopes ``lcb <= mu <= ucb`` and everything derived from them."""

    lcb: np.ndarray
    ucb: np.ndarray
    fiber: tuple = field(default=None)

    def __post_init__(self):
        self.lcb = np.asarray(self.lcb, dtype=float)
        self.ucb = np.asarray(self.ucb, dtype=float)
        if self.lcb.shape != self.ucb.shape or self.lcb.ndim != 2:
            raise DomainError("lcb and ucb must be matching N x A arrays")
        if self.fiber is None:
            self.fiber = (0,) * self.lcb.shape[0]
        best_lcb = self.lcb.max(axis=1)
        best_ucb = self.ucb.max(axis=1)
        self.gap_low = best_lcb[:, None] - self.ucb
        self.gap_high = best_ucb[:, None] - self.lcb

    @classmethod
    def exact(cls, mu: RewardTable) -> "CertificateSet":
        """Zero-width certificates; every bound collapses to its exact counterpart."""
        return cls(mu.values.copy(), mu.values.copy(), mu.fiber)

    @property
    def n(self) -> int:
        return self.lcb.shape[0]

    def gap_bounds(self, x: int, a: int) -> tuple[float, float]:
        return float(self.gap_low[x, a]), float(self.gap_high[x, a])

    def _same_fiber(self, members: Iterable[int]) -> list[int]:
        members = list(members)
        for x in members:
            if not 0 <= x < self.n:
                raise IndexError(f"context {x} out of range [0, {self.n})")
        if len({self.fiber[x] for x in members}) > 1:
            raise DomainError("contexts belong to different query fibers")
        return members

    def pair_distance_bounds(self, x: int, x2: int) -> tuple[float, float]:
        self._same_fiber((x, x2))
        lo = np.maximum(self.gap_low[x], self.gap_low[x2]).min()
        hi = np.maximum(self.gap_high[x], self.gap_high[x2]).min()
        return float(lo), float(hi)

    def pair_low_matrix(self, contexts: Iterable[int]) -> np.ndarray:
        """``d_low`` between every pair of the listed contexts (row/column order preserved)."""
        idx = np.asarray(list(contexts), dtype=int)
        g = self.gap_low[idx]
        return np.maximum(g[:, None, :], g[None, :, :]).min(axis=2)

    def cluster_radius_bounds(self, members: Iterable[int]) -> tuple[float, float]:
        members = self._same_fiber(members)
        if not members:
            raise DomainError("cluster must be nonempty")
        lo = self.gap_low[members].max(axis=0).min()
        hi = self.gap_high[members].max(axis=0).min()
        return float(lo), float(hi)

    def rho_high(self, members: Iterable[int]) -> tuple[float, int]:
        """Upper radius certificate and its lowest-index minimizing action."""
        members = self._same_fiber(members)
        if not members:
            raise DomainError("cluster must be nonempty")
        worst = self.gap_high[members].max(axis=0)
        a = int(np.argmin(worst))
        return float(worst[a]), a


class ObservationLedger:
    """Per-pair reward sums and pull counts; means are recomputed on read."""

    def __init__(self, n_contexts: int, n_actions: int, delta: float, fiber=None):
        _check_delta(delta)
        if n_contexts < 1 or n_actions < 1:
            raise DomainError("ledger needs at least one context and one action")
        self.N = n_contexts
        self.A = n_actions
        self.delta = delta
        self.fiber = tuple(fiber) if fiber is not None else (0,) * n_contexts
        self.sums = np.zeros((n_contexts, n_actions))
        self.counts = np.zeros((n_contexts, n_actions), dtype=np.int64)
        self.t = 1

    def update(self, x: int, a: int, reward: float) -> None:
        if not 0.0 <= reward <= 1.0:
            raise DomainError(f"ledger rewards must lie in [0, 1], got {reward}")
        self.sums[x, a] += reward
        self.counts[x, a] += 1

    def means(self) -> np.ndarray:
        """Empirical means; unobserved pairs report ``nan``."""
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.counts > 0, self.sums / np.maximum(self.counts, 1), np.nan)

    def radii(self, t: int | None = None) -> np.ndarray:
        return conf_radii(self.counts, self.N, self.A, self.t if t is None else t, self.delta)

    def envelopes(self, t: int | None = None) -> tuple[np.ndarray, np.ndarray]:
        rad = self.radii(t)
        mean = np.where(self.counts > 0, self.sums / np.maximum(self.counts, 1), 0.5)
        observed = self.counts > 0
        lcb = np.where(observed, np.clip(mean - rad, 0.0, 1.0), 0.0)
        ucb = np.where(observed, np.clip(mean + rad, 0.0, 1.0), 1.0)
        return lcb, ucb

    def snapshot(self, t: int | None = None) -> CertificateSet:
        lcb, ucb = self.envelopes(t)
        return CertificateSet(lcb, ucb, self.fiber)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "a", "n", "mean"])
        for x in range(self.N):
            for a in range(self.A):
                n = int(self.counts[x, a])
                w.writerow([x, a, n, repr(float(self.sums[x, a] / n)) if n else ""])
        return buf.getvalue()


def gap_bounds(ledger: ObservationLedger, x: int, a: int) -> tuple[float, float]:
    return ledger.snapshot().gap_bounds(x, a)


def pair_distance_bounds(ledger: ObservationLedger, x: int, x2: int) -> tuple[float, float]:
    return ledger.snapshot().pair_distance_bounds(x, x2)


def cluster_radius_bounds(ledger: ObservationLedger, members) -> tuple[float, float]:
    return ledger.snapshot().cluster_radius_bounds(members)


def hoeffding_coverage(mu: float, n: int, delta: float, runs: int, rng: np.random.Generator) -> float:
    """Empirical coverage of the single-shot interval ``sqrt(log(2/delta) / (2n))``."""
    rad = math.sqrt(math.log(2.0 / delta) / (2.0 * n))
    means = rng.binomial(n, mu, size=runs) / n
    return float(np.mean(np.abs(means - mu) <= rad))


def anytime_violation_rate(mu: RewardTable, delta: float, runs: int, horizon: int,
                           rng: np.random.Generator, noiseless: bool = False,
                           chunk: int = 2000) -> float:
    """Fraction of trajectories in which some interval misses its mean at some round.

    Pulls go round-robin over all pairs and rewards are Bernoulli(mu), or
    exactly mu when ``noiseless``.  Every round checks every pair, including
    the trivial interval of pairs not yet pulled.
    """
    _check_delta(delta)
    N, A = mu.n, mu.a
    pairs = N * A
    target = mu.values.reshape(-1)
    rounds = np.arange(1, horizon + 1)
    pulled = (rounds - 1) % pairs
    # counts[t, p]: pulls of pair p after round t
    onehot = np.zeros((horizon, pairs))
    onehot[np.arange(horizon), pulled] = 1.0
    counts = np.cumsum(onehot, axis=0)
    log_term = np.log(4.0 * N * A * rounds.astype(float) ** 2 / delta)
    with np.errstate(divide="ignore"):
        rad = np.sqrt(log_term[:, None] / (2.0 * counts))
    failed = 0
    for start in range(0, runs, chunk):
        r = min(chunk, runs - start)
        p = target[pulled]
        if noiseless:
            rew = np.broadcast_to(p, (r, horizon))
        else:
            rew = (rng.random((r, horizon)) < p).astype(float)
        sums = np.zeros((r, horizon, pairs))
        sums[:, np.arange(horizon), pulled] = rew
        sums = np.cumsum(sums, axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            mean = sums / counts[None]
        lcb = np.where(counts > 0, np.clip(mean - rad, 0, 1), 0.0)
        ucb = np.where(counts > 0, np.clip(mean + rad, 0, 1), 1.0)
        miss = (lcb > target + 1e-12) | (ucb < target - 1e-12)
        failed += int(miss.any(axis=(1, 2)).sum())
    return failed / runs
