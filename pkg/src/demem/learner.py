"""DeMem: doubling-epoch learner that refines memory only on certified conflicts.

Epoch ``e`` covers rounds ``[2^(e-1), 2^e)``.  At its first round the
cannot-link certificates are rebuilt from all context-level data so far, the
greedy partitioner produces at most ``K`` clusters, and that assignment stays
frozen for the epoch.  Contexts first seen inside an epoch join the cluster
whose certified radius grows least.  Each round either tops up the
context's per-action sample count (certification) or plays cluster-level UCB.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .certificates import ObservationLedger
from .core import Partition
from .errors import DomainError
from .partition import EpochPartition, greedy_partition

CERTIFY = "certify"
EXPLOIT = "exploit"


@dataclass(frozen=True)
class LearnerConfig:
    K: int
    delta: float = 0.1
    gamma: float = 1.0
    T: int = 20_000
    restart_period: int | None = None
    feasibility: str = "coloring"

    def __post_init__(self):
        if self.K < 1:
            raise DomainError("budget K must be at least 1")
        if not 0.0 < self.delta < 1.0:
            raise DomainError("delta must lie in (0, 1)")
        if not self.gamma > 0.0:
            raise DomainError("gamma must be positive")
        if self.T < 1:
            raise DomainError("horizon T must be at least 1")
        if self.restart_period is not None and self.restart_period < 1:
            raise DomainError("restart period L must be at least 1")


def certification_threshold(N: int, A: int, t: int, gamma: float, delta: float) -> int:
    """``ceil(8 log(4 N A t^2 / delta) / gamma^2)``, never below 1."""
    if not gamma > 0.0:
        raise DomainError("gamma must be positive")
    if t < 1:
        raise DomainError("round index t must be at least 1")
    return max(1, math.ceil(8.0 * math.log(4.0 * N * A * t * t / delta) / gamma ** 2))


def ucb_bonus(n: int, A: int, K: int, t: int, delta: float) -> float:
    return math.sqrt(2.0 * math.log(4.0 * A * K * t * t / delta) / max(1, n))


@dataclass
class EpochState:
    index: int
    start: int
    partition: EpochPartition
    assignment: dict
    cl_n: list
    cl_sum: list
    gap_high_max: np.ndarray  # per cluster, max over members of the certified upper gap

    def route(self, x: int) -> int | None:
        return self.assignment.get(x)


def fallback_route(state: EpochState, ledger: ObservationLedger, x: int, t: int | None = None) -> int:
    """Cluster whose certified radius after inserting ``x`` is smallest; cached for the epoch."""
    if x in state.assignment:
        return state.assignment[x]
    certs = ledger.snapshot(t)
    row = certs.gap_high[x]
    radii = np.maximum(state.gap_high_max, row[None, :]).min(axis=1)
    m = int(np.argmin(radii))
    state.assignment[x] = m
    state.gap_high_max[m] = np.maximum(state.gap_high_max[m], row)
    return m


def select_action(state: EpochState, counts_x, t: int, m: int, N: int, A: int, K: int,
                  gamma: float, delta: float) -> tuple[int, str]:
    """Certification action if any count is below ``B_t(gamma)``, else cluster UCB."""
    b = certification_threshold(N, A, t, gamma, delta)
    low = min(counts_x)
    if low < b:
        return list(counts_x).index(low), CERTIFY
    log_term = 2.0 * math.log(4.0 * A * K * t * t / delta)
    ns = state.cl_n[m]
    sums = state.cl_sum[m]
    best, best_a = -math.inf, 0
    for a in range(A):
        n = ns[a]
        val = (sums[a] / n if n else 0.0) + math.sqrt(log_term / max(1, n))
        if val > best:
            best, best_a = val, a
    return best_a, EXPLOIT


@dataclass
class Trajectory:
    contexts: list = field(default_factory=list)
    clusters: list = field(default_factory=list)
    actions: list = field(default_factory=list)
    modes: list = field(default_factory=list)
    rewards: list = field(default_factory=list)
    regret: list = field(default_factory=list)
    epochs: list = field(default_factory=list)
    eps_cert: list = field(default_factory=list)
    restarts: list = field(default_factory=list)
    epoch_stats: list = field(default_factory=list)
    final_assignment: dict = field(default_factory=dict)
    k: int = 1

    def cumulative_regret(self) -> np.ndarray:
        return np.cumsum(self.regret)

    @property
    def final_regret(self) -> float:
        return float(np.sum(self.regret))

    def encoder(self, n: int) -> Partition:
        """Final learned encoder over ``n`` contexts; never-seen contexts get label 0."""
        return Partition(tuple(self.final_assignment.get(x, 0) for x in range(n)), self.k)

    HEADER = ("round", "context", "cluster", "action", "mode", "reward", "regret", "epoch", "eps_cert")

    def to_csv(self, preamble: str = "") -> str:
        buf = io.StringIO()
        buf.write(preamble)
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.HEADER)
        for i in range(len(self.actions)):
            w.writerow((i + 1, self.contexts[i], self.clusters[i], self.actions[i], self.modes[i],
                        repr(float(self.rewards[i])), repr(float(self.regret[i])), self.epochs[i],
                        repr(float(self.eps_cert[i]))))
        return buf.getvalue()


class DeMem:
    """Online learner; ``act`` then ``update`` once per round with the global round index."""

    def __init__(self, config: LearnerConfig, n_contexts: int, n_actions: int, fiber=None):
        self.cfg = config
        self.N = n_contexts
        self.A = n_actions
        self.ledger = ObservationLedger(n_contexts, n_actions, config.delta, fiber)
        self.counts = [[0] * n_actions for _ in range(n_contexts)]
        self.seen: set = set()
        self.state: EpochState | None = None
        self.epoch = 0
        self.offset = 0  # rounds before the current restart segment
        self._pending = None
        self.epoch_log: list = []

    def _local(self, t: int) -> int:
        return t - self.offset

    def _begin_epoch(self, t_local: int) -> None:
        self.epoch += 1
        self.ledger.t = t_local
        certs = self.ledger.snapshot(t_local)
        ep = greedy_partition(certs, self.seen, self.cfg.K, self.cfg.feasibility)
        gh = np.zeros((self.cfg.K, self.A))
        for m, members in enumerate(ep.clusters()):
            if members:
                gh[m] = certs.gap_high[members].max(axis=0)
        self.state = EpochState(self.epoch, t_local, ep, dict(ep.assignment),
                                [[0] * self.A for _ in range(self.cfg.K)],
                                [[0.0] * self.A for _ in range(self.cfg.K)], gh)
        self.epoch_log.append((self.epoch, t_local) + ep.stats_row())

    def act(self, t: int, x: int) -> int:
        tl = self._local(t)
        if self.state is None or tl >= 2 * self.state.start:
            self._begin_epoch(tl)
        st = self.state
        if x not in self.seen:
            self.seen.add(x)
        m = st.route(x)
        if m is None:
            m = fallback_route(st, self.ledger, x, tl)
        a, mode = select_action(st, self.counts[x], tl, m, self.N, self.A, self.cfg.K,
                                self.cfg.gamma, self.cfg.delta)
        self._pending = (x, m, a, mode)
        return a

    def update(self, t: int, x: int, a: int, reward: float) -> None:
        r = min(1.0, max(0.0, reward))
        _, m, _, _ = self._pending
        st = self.state
        st.cl_n[m][a] += 1
        st.cl_sum[m][a] += r
        self.counts[x][a] += 1
        self.ledger.update(x, a, r)

    @property
    def last(self):
        return self._pending

    def assignment(self) -> dict:
        return dict(self.state.assignment) if self.state else {}


def _drive(learner: DeMem, stream, start: int, stop: int, traj: Trajectory, segment: int = 0) -> None:
    for t in range(start, stop):
        x = stream.context(t)
        a = learner.act(t, x)
        reward, inc = stream.step(t, a)
        learner.update(t, x, a, reward)
        _, m, _, mode = learner.last
        traj.contexts.append(x)
        traj.clusters.append(m)
        traj.actions.append(a)
        traj.modes.append(mode)
        traj.rewards.append(reward)
        traj.regret.append(inc)
        traj.epochs.append(learner.epoch)
        traj.eps_cert.append(learner.state.partition.eps_cert)
        traj.restarts.append(segment)
    traj.epoch_stats.extend((segment,) + row for row in learner.epoch_log)


def run(stream, config: LearnerConfig, n_contexts: int | None = None, n_actions: int | None = None) -> Trajectory:
    """Run DeMem for ``min(config.T, stream.T)`` rounds on a stream."""
    horizon = min(config.T, stream.T)
    if horizon < 1:
        raise DomainError("horizon must be at least 1")
    inst = stream.instance
    learner = DeMem(config, n_contexts or inst.N, n_actions or inst.A)
    traj = Trajectory(k=config.K)
    _drive(learner, stream, 1, horizon + 1, traj)
    traj.final_assignment = learner.assignment()
    return traj


def run_with_restarts(stream, config: LearnerConfig, n_contexts: int | None = None,
                      n_actions: int | None = None) -> Trajectory:
    """Fresh learner every ``L`` rounds: statistics, partition and epoch clock all reset."""
    L = config.restart_period
    if L is None or L < 1:
        raise DomainError("restart period L must be a positive integer")
    horizon = min(config.T, stream.T)
    if horizon < 1:
        raise DomainError("horizon must be at least 1")
    inst = stream.instance
    traj = Trajectory(k=config.K)
    learner = None
    for seg, start in enumerate(range(1, horizon + 1, L)):
        learner = DeMem(config, n_contexts or inst.N, n_actions or inst.A)
        learner.offset = start - 1
        _drive(learner, stream, start, min(start + L, horizon + 1), traj, seg)
    traj.final_assignment = learner.assignment()
    return traj
