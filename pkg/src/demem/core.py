"""Decision-distortion calculus over a finite reward table.

A reward table holds the mean reward ``mu[x, a]`` of every context/action
pair.  Everything here is exact arithmetic on that table: suboptimality gaps,
the pairwise decision distance, cluster radii and the distortion induced by a
partition of contexts into memory states.

Ties in every argmin/argmax resolve to the lowest index so that replays are
deterministic.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError

WEIGHT_TOL = 1e-9


@dataclass(frozen=True)
class RewardTable:
    """Mean rewards ``values[x, a]`` in [0, 1] plus a query-fiber label per context."""

    values: np.ndarray
    fiber: tuple = field(default=None)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise DomainError(f"reward table must be a nonempty N x A matrix, got shape {v.shape}")
        if not np.all(np.isfinite(v)) or v.min() < 0.0 or v.max() > 1.0:
            raise DomainError("reward table entries must lie in [0, 1]")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        fib = self.fiber
        if fib is None:
            fib = (0,) * v.shape[0]
        fib = tuple(int(q) for q in fib)
        if len(fib) != v.shape[0]:
            raise DomainError("fiber labels must have one entry per context")
        object.__setattr__(self, "fiber", fib)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def a(self) -> int:
        return self.values.shape[1]

    @property
    def best(self) -> np.ndarray:
        return self.values.max(axis=1)

    @property
    def gaps(self) -> np.ndarray:
        """Matrix of suboptimality gaps ``mu*(x) - mu(x, a)``."""
        return self.best[:, None] - self.values

    def to_json(self) -> str:
        doc = {"n": self.n, "a": self.a, "values": self.values.tolist()}
        if any(q != 0 for q in self.fiber):
            doc["fiber"] = list(self.fiber)
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "RewardTable":
        doc = json.loads(text)
        values = np.asarray(doc["values"], dtype=float)
        if values.shape != (doc["n"], doc["a"]):
            raise DomainError(f"declared shape ({doc['n']}, {doc['a']}) does not match values {values.shape}")
        return cls(values, doc.get("fiber"))


@dataclass(frozen=True)
class Partition:
    """Encoder from contexts to memory states: ``labels[x]`` in ``[0, K)``."""

    labels: tuple
    k: int

    def __post_init__(self):
        labels = tuple(int(m) for m in self.labels)
        if self.k < 1:
            raise DomainError("partition budget K must be positive")
        if any(m < 0 or m >= self.k for m in labels):
            raise DomainError(f"labels must lie in [0, {self.k})")
        object.__setattr__(self, "labels", labels)

    def clusters(self) -> list[list[int]]:
        """Members of every label, including empty ones."""
        out = [[] for _ in range(self.k)]
        for x, m in enumerate(self.labels):
            out[m].append(x)
        return out

    @classmethod
    def singletons(cls, n: int) -> "Partition":
        return cls(tuple(range(n)), n)

    @classmethod
    def single(cls, n: int) -> "Partition":
        return cls((0,) * n, 1)


def _check_context(mu: RewardTable, x: int) -> None:
    if not 0 <= x < mu.n:
        raise IndexError(f"context {x} out of range [0, {mu.n})")


def _check_action(mu: RewardTable, a: int) -> None:
    if not 0 <= a < mu.a:
        raise IndexError(f"action {a} out of range [0, {mu.a})")


def _check_fiber(mu: RewardTable, members: Iterable[int]) -> list[int]:
    members = list(members)
    for x in members:
        _check_context(mu, x)
    if len({mu.fiber[x] for x in members}) > 1:
        raise DomainError("contexts belong to different query fibers")
    return members


def best_value(mu: RewardTable, x: int) -> float:
    _check_context(mu, x)
    return float(mu.values[x].max())


def gap(mu: RewardTable, x: int, a: int) -> float:
    _check_context(mu, x)
    _check_action(mu, a)
    row = mu.values[x]
    return float(row.max() - row[a])


def decision_distance(mu: RewardTable, x: int, x2: int) -> float:
    """Smallest distortion at which ``x`` and ``x2`` can share one memory state.

    Symmetric and zero on the diagonal, but not a metric: the triangle
    inequality can fail.
    """
    _check_fiber(mu, (x, x2))
    g = mu.gaps
    return float(np.maximum(g[x], g[x2]).min())


def cluster_radius(mu: RewardTable, members: Iterable[int]) -> tuple[float, int]:
    """``min_a max_{x in C} gap(x, a)`` and the lowest minimizing action."""
    members = _check_fiber(mu, members)
    if not members:
        raise DomainError("cluster must be nonempty")
    worst = mu.gaps[members].max(axis=0)
    a = int(np.argmin(worst))
    return float(worst[a]), a


def _normalized(weights, n: int) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    if w.shape != (n,):
        raise DomainError(f"expected {n} weights, got shape {w.shape}")
    if np.any(w < 0) or abs(w.sum() - 1.0) > WEIGHT_TOL:
        raise DomainError("weights must be a probability distribution")
    return w


def avg_cluster_radius(mu: RewardTable, weights, members: Sequence[int]) -> float:
    """``min_a E[gap(Z, a) | Z in C]`` for ``Z`` distributed by ``weights`` over ``C``."""
    members = _check_fiber(mu, members)
    if not members:
        raise DomainError("cluster must be nonempty")
    w = _normalized(weights, len(members))
    return float((w @ mu.gaps[members]).min())


def partition_worst_distortion(mu: RewardTable, p: Partition) -> float:
    if len(p.labels) != mu.n:
        raise DomainError("partition does not cover the reward table")
    return max((cluster_radius(mu, c)[0] for c in p.clusters() if c), default=0.0)


def partition_avg_distortion(mu: RewardTable, dist, p: Partition) -> float:
    """Sum over clusters of cluster mass times the average cluster radius."""
    if len(p.labels) != mu.n:
        raise DomainError("partition does not cover the reward table")
    w = _normalized(dist, mu.n)
    g = mu.gaps
    total = 0.0
    for members in p.clusters():
        if not members:
            continue
        # unnormalized form avoids dividing by a zero-mass cluster
        total += float((w[members] @ g[members]).min())
    return total


def uniform(n: int) -> np.ndarray:
    return np.full(n, 1.0 / n)
