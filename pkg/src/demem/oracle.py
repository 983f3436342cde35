"""Exact small-instance oracles for the memory--distortion frontier.

The frontier is found by enumerating set partitions as restricted-growth
strings, with per-subset radii precomputed over bitmasks and a
branch-and-bound cut: merging contexts into a block can only raise the
block's radius, so a partial assignment whose worst block already matches
the incumbent is abandoned.

The covering number uses the identity that a cluster has radius at most
``eps`` exactly when it sits inside one action ball
``S_a = {x : gap(x, a) <= eps}``; the minimum number of clusters is then a
minimum set cover of the contexts by action balls.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .core import Partition, RewardTable, cluster_radius, decision_distance
from .errors import CapacityError, DomainError, PropertyViolation

PARTITION_CAP = 10
PACKING_CAP = 20
COVER_ACTION_CAP = 12


@dataclass(frozen=True)
class FrontierReport:
    eps_star_inf: float
    witness_partition: Partition
    witness_actions: tuple

    def to_json(self) -> str:
        return json.dumps({
            "eps_star_inf": self.eps_star_inf,
            "labels": list(self.witness_partition.labels),
            "k": self.witness_partition.k,
            "actions": list(self.witness_actions),
        })

    @classmethod
    def from_json(cls, text: str) -> "FrontierReport":
        doc = json.loads(text)
        return cls(doc["eps_star_inf"], Partition(tuple(doc["labels"]), doc["k"]), tuple(doc["actions"]))


@dataclass(frozen=True)
class SetCoverInstance:
    universe_size: int
    sets: tuple
    k: int

    def __post_init__(self):
        sets = tuple(frozenset(int(u) for u in s) for s in self.sets)
        if self.universe_size < 1 or not sets:
            raise DomainError("set cover needs a nonempty universe and at least one set")
        for s in sets:
            if not s:
                raise DomainError("sets must be nonempty")
            if min(s) < 0 or max(s) >= self.universe_size:
                raise DomainError("set element outside the universe")
        covered = frozenset().union(*sets)
        if len(covered) != self.universe_size:
            missing = sorted(set(range(self.universe_size)) - covered)
            raise DomainError(f"elements {missing} belong to no set")
        object.__setattr__(self, "sets", sets)

    def to_json(self) -> str:
        return json.dumps({"universe_size": self.universe_size,
                           "sets": [sorted(s) for s in self.sets], "k": self.k})

    @classmethod
    def from_json(cls, text: str) -> "SetCoverInstance":
        doc = json.loads(text)
        return cls(doc["universe_size"], tuple(doc["sets"]), doc["k"])


def _single_fiber(mu: RewardTable) -> None:
    if len(set(mu.fiber)) > 1:
        raise DomainError("frontier oracles operate on one query fiber; split the table first")


def _subset_gap_max(gaps: np.ndarray) -> np.ndarray:
    """``out[mask, a] = max_{x in mask} gaps[x, a]`` for every bitmask (0 for the empty mask)."""
    n, a = gaps.shape
    out = np.zeros((1 << n, a))
    for mask in range(1, 1 << n):
        low = (mask & -mask).bit_length() - 1
        out[mask] = np.maximum(out[mask & (mask - 1)], gaps[low])
    return out


def _subset_weighted_sum(gaps: np.ndarray, w: np.ndarray) -> np.ndarray:
    n, a = gaps.shape
    out = np.zeros((1 << n, a))
    for mask in range(1, 1 << n):
        low = (mask & -mask).bit_length() - 1
        out[mask] = out[mask & (mask - 1)] + w[low] * gaps[low]
    return out


def _search_partitions(n: int, k: int, block_cost, combine):
    """Branch-and-bound over restricted-growth strings with at most ``k`` blocks.

    ``block_cost[mask]`` is nondecreasing under adding members and ``combine``
    is either ``max`` or ``+``; both make the partial objective a valid lower
    bound.  Returns ``(best value, block masks of the witness)``.
    """
    best = [math.inf, None]
    blocks: list[int] = []

    def partial() -> float:
        val = 0.0
        for b in blocks:
            val = combine(val, block_cost[b])
        return val

    def rec(i: int) -> None:
        if partial() >= best[0]:
            return
        if i == n:
            best[0] = partial()
            best[1] = list(blocks)
            return
        bit = 1 << i
        for j in range(len(blocks)):
            blocks[j] |= bit
            rec(i + 1)
            blocks[j] ^= bit
        if len(blocks) < k:
            blocks.append(bit)
            rec(i + 1)
            blocks.pop()

    rec(0)
    return float(best[0]), best[1]


def _report_from_masks(mu: RewardTable, k: int, masks: list[int]) -> tuple[Partition, tuple]:
    labels = [0] * mu.n
    actions = []
    for m, mask in enumerate(masks):
        members = [x for x in range(mu.n) if mask >> x & 1]
        for x in members:
            labels[x] = m
        actions.append(cluster_radius(mu, members)[1])
    actions += [0] * (k - len(masks))
    return Partition(tuple(labels), k), tuple(actions)


def eps_star_inf(mu: RewardTable, k: int, cap: int = PARTITION_CAP) -> FrontierReport:
    """Exact best worst-case distortion over all partitions into at most ``k`` states."""
    if k < 1:
        raise DomainError("budget K must be at least 1")
    _single_fiber(mu)
    if mu.n > cap:
        raise CapacityError(f"eps_star_inf enumerates set partitions; N={mu.n} exceeds the cap of {cap}")
    if k >= mu.n:
        p = Partition.singletons(mu.n)
        acts = tuple(int(np.argmax(mu.values[x])) for x in range(mu.n))
        return FrontierReport(0.0, Partition(p.labels, k), acts + (0,) * (k - mu.n))
    rho = _subset_gap_max(mu.gaps).min(axis=1)
    value, masks = _search_partitions(mu.n, k, rho, max)
    part, acts = _report_from_masks(mu, k, masks)
    return FrontierReport(value, part, acts)


def eps_star_avg(mu: RewardTable, dist, k: int, cap: int = PARTITION_CAP) -> float:
    """Exact best average distortion over partitions into at most ``k`` states."""
    if k < 1:
        raise DomainError("budget K must be at least 1")
    _single_fiber(mu)
    w = np.asarray(dist, dtype=float)
    if w.shape != (mu.n,) or np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
        raise DomainError("dist must be a probability vector over contexts")
    if mu.n > cap:
        raise CapacityError(f"eps_star_avg enumerates set partitions; N={mu.n} exceeds the cap of {cap}")
    if k >= mu.n:
        return 0.0
    cost = _subset_weighted_sum(mu.gaps, w).min(axis=1)
    value, _ = _search_partitions(mu.n, k, cost, lambda u, v: u + v)
    return value


def action_balls(mu: RewardTable, eps: float) -> list[int]:
    """Bitmask of contexts within ``eps`` of optimal, per action."""
    g = mu.gaps
    return [sum(1 << x for x in range(mu.n) if g[x, a] <= eps) for a in range(mu.a)]


def covering_number(mu: RewardTable, eps: float) -> int:
    if eps < 0:
        raise DomainError("eps must be nonnegative")
    _single_fiber(mu)
    if mu.a > COVER_ACTION_CAP:
        raise CapacityError(f"exact covering enumerates action subsets; A={mu.a} exceeds the cap of {COVER_ACTION_CAP}")
    balls = action_balls(mu, eps)
    full = (1 << mu.n) - 1
    for size in range(1, mu.a + 1):
        for combo in itertools.combinations(balls, size):
            acc = 0
            for b in combo:
                acc |= b
            if acc == full:
                return size
    raise AssertionError("every context has a zero-gap action, so the full action set must cover")


def _max_clique(adj: list[int]) -> int:
    """Size of a maximum clique; ``adj[v]`` is the neighbour bitmask of ``v``."""
    best = 0

    def expand(size: int, cand: int) -> None:
        nonlocal best
        if cand == 0:
            best = max(best, size)
            return
        while cand:
            if size + bin(cand).count("1") <= best:
                return
            v = (cand & -cand).bit_length() - 1
            cand &= ~(1 << v)
            expand(size + 1, cand & adj[v])

    expand(0, (1 << len(adj)) - 1)
    return best


def packing_number(mu: RewardTable, eps: float, cap: int = PACKING_CAP) -> int:
    """Largest set of contexts whose pairwise decision distances all exceed ``eps``."""
    if eps < 0:
        raise DomainError("eps must be nonnegative")
    _single_fiber(mu)
    if mu.n > cap:
        raise CapacityError(f"packing search is exponential; N={mu.n} exceeds the cap of {cap}")
    g = mu.gaps
    dd = np.maximum(g[:, None, :], g[None, :, :]).min(axis=2)
    adj = []
    for x in range(mu.n):
        adj.append(sum(1 << y for y in range(mu.n) if y != x and dd[x, y] > eps))
    return _max_clique(adj)


def info_floor(mu: RewardTable, eps: float) -> float:
    """Mutual-information floor in bits: ``log2`` of the packing number at scale ``2 eps``."""
    return math.log2(packing_number(mu, 2.0 * eps))


@dataclass(frozen=True)
class SandwichReport:
    eps: float
    k: int
    covering: int
    packing_2eps: int
    eps_star_inf: float
    upper_fired: bool
    lower_fired: bool

    def as_dict(self) -> dict:
        return asdict(self)


def sandwich_check(mu: RewardTable, eps: float, k: int) -> SandwichReport:
    """Check both covering/packing clauses on one instance; raise on a violation."""
    cov = covering_number(mu, eps)
    pack = packing_number(mu, 2.0 * eps)
    star = eps_star_inf(mu, k).eps_star_inf
    upper = k >= cov
    lower = pack > k
    if upper and not star <= eps:
        raise PropertyViolation(f"K={k} >= covering({eps})={cov} but eps*={star} > eps", mu)
    if lower and not star > eps:
        raise PropertyViolation(f"packing({2 * eps})={pack} > K={k} but eps*={star} <= eps", mu)
    return SandwichReport(eps, k, cov, pack, star, upper, lower)


def setcover_to_memory(sc: SetCoverInstance) -> RewardTable:
    """Reward 1 when the action's set contains the context's element, else 0."""
    values = np.zeros((sc.universe_size, len(sc.sets)))
    for j, s in enumerate(sc.sets):
        for u in s:
            values[u, j] = 1.0
    return RewardTable(values)


def setcover_feasible(sc: SetCoverInstance, k: int) -> bool:
    """Brute force: do at most ``k`` of the sets cover the universe?"""
    full = frozenset(range(sc.universe_size))
    for size in range(1, min(k, len(sc.sets)) + 1):
        for combo in itertools.combinations(sc.sets, size):
            if frozenset().union(*combo) == full:
                return True
    return False


@dataclass(frozen=True)
class ForgettingReport:
    eps: float
    subsets_checked: int
    pairs_checked: int
    mergeable_subsets: int


def verify_forgetting_boundary(mu: RewardTable, eps: float, cap: int = PARTITION_CAP) -> ForgettingReport:
    """Check the three readings of the forgetting boundary on every nonempty subset.

    (a) some action is ``eps``-optimal for every member, evaluated by direct
    loops; (b) the cluster radius is at most ``eps``; (c) a one-state encoder
    with some constant decision rule has worst-case distortion at most
    ``eps``.  For pairs, the decision distance criterion is checked as well.
    """
    _single_fiber(mu)
    if mu.n > cap:
        raise CapacityError(f"forgetting check enumerates subsets; N={mu.n} exceeds the cap of {cap}")
    vals = mu.values
    subsets = 0
    mergeable = 0
    for mask in range(1, 1 << mu.n):
        members = [x for x in range(mu.n) if mask >> x & 1]
        shared = any(all(vals[x].max() - vals[x, a] <= eps for x in members) for a in range(mu.a))
        by_radius = cluster_radius(mu, members)[0] <= eps
        one_state = min(max(vals[x].max() - vals[x, rule] for x in members) for rule in range(mu.a)) <= eps
        if not shared == by_radius == one_state:
            raise PropertyViolation(
                f"forgetting boundary readings disagree on {members}: "
                f"shared={shared} radius={by_radius} one_state={one_state}", mu)
        subsets += 1
        mergeable += shared
    pairs = 0
    for x, y in itertools.combinations(range(mu.n), 2):
        shared = any(max(vals[x].max() - vals[x, a], vals[y].max() - vals[y, a]) <= eps for a in range(mu.a))
        if shared != (decision_distance(mu, x, y) <= eps):
            raise PropertyViolation(f"pairwise boundary fails on ({x}, {y})", mu)
        pairs += 1
    return ForgettingReport(eps, subsets, pairs, mergeable)
