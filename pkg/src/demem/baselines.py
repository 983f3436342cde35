"""Comparison policies behind one interface.

Every policy sees a ``PolicyObservation`` (context id, descriptive
features, round) and must keep at most ``K`` internal memory states; the
oracle alone also reads the latent identity and is exempt from the budget.
Unvisited (state, action) pairs are scored optimistically at 1 by the
greedy policies.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Partition
from .errors import DomainError
from .learner import DeMem, LearnerConfig


@dataclass(frozen=True)
class PolicyObservation:
    context_id: int
    features: np.ndarray
    t: int
    identity: int | None = None


def _greedy(sums, counts) -> int:
    best, best_a = -math.inf, 0
    for a in range(len(counts)):
        v = sums[a] / counts[a] if counts[a] else 1.0
        if v > best:
            best, best_a = v, a
    return best_a


class Policy:
    name = "policy"
    budgeted = True

    def act(self, obs: PolicyObservation) -> int:
        raise NotImplementedError

    def update(self, obs: PolicyObservation, action: int, reward: float) -> None:
        pass

    def encoder(self, features: np.ndarray) -> Partition:
        """Current assignment of every roster context (rows of ``features``) to a state."""
        raise NotImplementedError

    def n_states(self) -> int:
        raise NotImplementedError


def _clip(r: float) -> float:
    return min(1.0, max(0.0, r))


class OraclePolicy(Policy):
    name = "oracle"
    budgeted = False

    def __init__(self, mu_z: np.ndarray):
        self.best = [int(a) for a in np.argmax(mu_z, axis=1)]
        self.M = mu_z.shape[0]
        self._identity: dict = {}

    def act(self, obs):
        if obs.identity is None:
            raise DomainError("the oracle needs the latent identity")
        self._identity[obs.context_id] = obs.identity
        return self.best[obs.identity]

    def encoder(self, features):
        return Partition(tuple(self._identity.get(c, 0) for c in range(len(features))), self.M)

    def n_states(self):
        return len(set(self._identity.values()))


class _Centers:
    """Nearest-center bookkeeping shared by the feature-clustering policies."""

    def __init__(self, k: int, dim: int):
        self.k = k
        self.centers = np.zeros((k, dim))
        self.size = 0
        self.n = [0] * k

    def nearest(self, f: np.ndarray) -> tuple[int, float]:
        if self.size == 0:
            return -1, math.inf
        d = ((self.centers[: self.size] - f) ** 2).sum(axis=1)
        j = int(np.argmin(d))
        return j, float(d[j])

    def add(self, f: np.ndarray) -> int:
        j = self.size
        self.centers[j] = f
        self.size += 1
        return j

    def labels(self, features: np.ndarray) -> tuple:
        if self.size == 0:
            return (0,) * len(features)
        d = ((features[:, None, :] - self.centers[None, : self.size]) ** 2).sum(-1)
        return tuple(int(j) for j in d.argmin(axis=1))


class FeatureKMeansPolicy(Policy):
    """Online k-means on features; greedy on the assigned cluster's reward means."""

    name = "feature_kmeans"

    def __init__(self, K: int, A: int, dim: int):
        self.K, self.A = K, A
        self.c = _Centers(K, dim)
        self.sums = [[0.0] * A for _ in range(K)]
        self.counts = [[0] * A for _ in range(K)]
        self._m = 0

    def _assign(self, f: np.ndarray) -> int:
        j, d = self.c.nearest(f)
        # seed centers with the first K distinct feature vectors
        if self.c.size < self.K and (j < 0 or d > 0.0):
            return self.c.add(f)
        return j

    def act(self, obs):
        self._m = m = self._assign(obs.features)
        return _greedy(self.sums[m], self.counts[m])

    def update(self, obs, action, reward):
        m = self._m
        self.c.n[m] += 1
        self.c.centers[m] += (obs.features - self.c.centers[m]) / self.c.n[m]
        self.sums[m][action] += _clip(reward)
        self.counts[m][action] += 1

    def encoder(self, features):
        return Partition(self.c.labels(features), self.K)

    def n_states(self):
        return self.c.size


class FeatureRAGPolicy(Policy):
    """Bounded memory bank with Gaussian-weighted top-k aggregation."""

    name = "feature_rag"

    def __init__(self, K: int, A: int, dim: int, top_k: int = 2, rng: np.random.Generator | None = None,
                 tau_window: int = 100):
        self.K, self.A, self.top_k = K, A, top_k
        self.c = _Centers(K, dim)
        self.sums = [[0.0] * A for _ in range(K)]
        self.counts = [[0] * A for _ in range(K)]
        self.rng = rng or np.random.default_rng(0)
        self.window: list = []
        self.tau_window = tau_window
        self.tau = 1.0

    def _refresh_tau(self, f: np.ndarray) -> None:
        if len(self.window) >= self.tau_window:
            return
        self.window.append(np.array(f))
        if len(self.window) >= 2:
            w = np.array(self.window)
            d = ((w[:, None] - w[None]) ** 2).sum(-1)[np.triu_indices(len(w), 1)]
            med = float(np.median(d))
            self.tau = med if med > 0 else 1.0

    def act(self, obs):
        self._refresh_tau(obs.features)
        if self.c.size == 0:
            return int(self.rng.integers(self.A))
        d = ((self.c.centers[: self.c.size] - obs.features) ** 2).sum(axis=1)
        order = np.argsort(d, kind="stable")[: self.top_k]
        w = np.exp(-d[order] / self.tau)
        if w.sum() <= 0:
            w = np.ones_like(w)
        est = np.zeros(self.A)
        for wi, i in zip(w, order):
            est += wi * np.array([self.sums[i][a] / self.counts[i][a] if self.counts[i][a] else 1.0
                                  for a in range(self.A)])
        return int(np.argmax(est / w.sum()))

    def update(self, obs, action, reward):
        j, d = self.c.nearest(obs.features)
        if self.c.size < self.K and (j < 0 or d > 0.0):
            j = self.c.add(obs.features)
        self.sums[j][action] += _clip(reward)
        self.counts[j][action] += 1

    def encoder(self, features):
        return Partition(self.c.labels(features), self.K)

    def n_states(self):
        return self.c.size


class EpsGreedyClusterPolicy(Policy):
    """Threshold clustering on features with epsilon-uniform exploration."""

    name = "eps_greedy_cluster"

    def __init__(self, K: int, A: int, dim: int, r_new: float, eps: float = 0.05,
                 rng: np.random.Generator | None = None):
        self.K, self.A = K, A
        self.r_new2 = r_new * r_new
        self.eps = eps
        self.c = _Centers(K, dim)
        self.sums = [[0.0] * A for _ in range(K)]
        self.counts = [[0] * A for _ in range(K)]
        self.rng = rng or np.random.default_rng(0)
        self._m = 0

    def act(self, obs):
        j, d = self.c.nearest(obs.features)
        if j < 0 or (d > self.r_new2 and self.c.size < self.K):
            j = self.c.add(obs.features)
        self._m = j
        if self.rng.random() < self.eps:
            return int(self.rng.integers(self.A))
        return _greedy(self.sums[j], self.counts[j])

    def update(self, obs, action, reward):
        m = self._m
        self.c.n[m] += 1
        self.c.centers[m] += (obs.features - self.c.centers[m]) / self.c.n[m]
        self.sums[m][action] += _clip(reward)
        self.counts[m][action] += 1

    def encoder(self, features):
        return Partition(self.c.labels(features), self.K)

    def n_states(self):
        return self.c.size


def club_should_cut(mu_i, mu_j, beta_i: float, beta_j: float, mask=None) -> bool:
    """Cut when the sup-norm gap of the estimates beats the summed radii.

    ``mask`` restricts the norm to actions both nodes have tried.
    """
    diff = np.abs(np.asarray(mu_i, dtype=float) - np.asarray(mu_j, dtype=float))
    if mask is not None:
        diff = diff[np.asarray(mask, dtype=bool)]
    return diff.size > 0 and float(diff.max()) > beta_i + beta_j


class CLUBPolicy(Policy):
    """Confidence-graph clustering over contexts with a hard cap on components.

    Node radii use the node's total pull count; the sup-norm is taken over
    actions both nodes have tried, so an untried action cannot force a cut.
    """

    name = "club"

    def __init__(self, K: int, A: int, N: int):
        self.K, self.A, self.N = K, A, N
        self.sums = np.zeros((N, A))
        self.counts = np.zeros((N, A), dtype=np.int64)
        self.adj = np.ones((N, N), dtype=bool)
        np.fill_diagonal(self.adj, False)
        self._labels = [0] * N
        self._dirty = True
        self._m = 0

    def beta(self, i: int, t: int) -> float:
        return math.sqrt(2.0 * math.log(1.0 + t) / max(1, int(self.counts[i].sum())))

    def _node_means(self, i: int) -> np.ndarray:
        c = self.counts[i]
        return np.where(c > 0, self.sums[i] / np.maximum(c, 1), 0.0)

    def _components(self) -> list:
        seen = [-1] * self.N
        comps = []
        for s in range(self.N):
            if seen[s] >= 0:
                continue
            stack, comp = [s], []
            seen[s] = len(comps)
            while stack:
                v = stack.pop()
                comp.append(v)
                for u in np.flatnonzero(self.adj[v]):
                    if seen[u] < 0:
                        seen[u] = len(comps)
                        stack.append(int(u))
            comps.append(sorted(comp))
        return comps

    def _relabel(self) -> None:
        comps = self._components()
        while len(comps) > self.K:
            comps.sort(key=lambda c: (len(c), c[0]))
            small = comps.pop(0)
            pooled = lambda c: self.sums[c].sum(0) / np.maximum(self.counts[c].sum(0), 1)
            ps = pooled(small)
            dists = [float(np.max(np.abs(pooled(c) - ps))) for c in comps]
            target = int(np.argmin(dists))
            comps[target] = sorted(comps[target] + small)
        comps.sort(key=lambda c: c[0])
        for m, comp in enumerate(comps):
            for v in comp:
                self._labels[v] = m
        self._dirty = False

    def act(self, obs):
        if self._dirty:
            self._relabel()
        m = self._m = self._labels[obs.context_id]
        members = [v for v in range(self.N) if self._labels[v] == m]
        s = self.sums[members].sum(0)
        n = self.counts[members].sum(0)
        log_term = 2.0 * math.log(1.0 + obs.t)
        best, best_a = -math.inf, 0
        for a in range(self.A):
            v = (s[a] / n[a] + math.sqrt(log_term / n[a])) if n[a] else math.inf
            if v > best:
                best, best_a = v, a
        return best_a

    def update(self, obs, action, reward):
        i = obs.context_id
        self.sums[i, action] += _clip(reward)
        self.counts[i, action] += 1
        mi = self._node_means(i)
        bi = self.beta(i, obs.t)
        for j in np.flatnonzero(self.adj[i]):
            both = (self.counts[i] > 0) & (self.counts[j] > 0)
            if club_should_cut(mi, self._node_means(j), bi, self.beta(int(j), obs.t), both):
                self.adj[i, j] = self.adj[j, i] = False
                self._dirty = True

    def encoder(self, features):
        if self._dirty:
            self._relabel()
        return Partition(tuple(self._labels), self.K)

    def n_states(self):
        if self._dirty:
            self._relabel()
        return len(set(self._labels))


class RandomPartitionPolicy(Policy):
    name = "random_partition"

    def __init__(self, K: int, A: int, N: int, rng: np.random.Generator):
        self.K, self.A = K, A
        self.labels = tuple(int(m) for m in rng.integers(0, K, size=N))
        self.sums = [[0.0] * A for _ in range(K)]
        self.counts = [[0] * A for _ in range(K)]

    def act(self, obs):
        m = self.labels[obs.context_id]
        return _greedy(self.sums[m], self.counts[m])

    def update(self, obs, action, reward):
        m = self.labels[obs.context_id]
        self.sums[m][action] += _clip(reward)
        self.counts[m][action] += 1

    def encoder(self, features):
        return Partition(self.labels, self.K)

    def n_states(self):
        return len(set(self.labels))


class DeMemPolicy(Policy):
    name = "demem"

    def __init__(self, config: LearnerConfig, N: int, A: int):
        self.learner = DeMem(config, N, A)
        self.K = config.K

    def act(self, obs):
        return self.learner.act(obs.t, obs.context_id)

    def update(self, obs, action, reward):
        self.learner.update(obs.t, obs.context_id, action, reward)

    def encoder(self, features):
        assign = self.learner.assignment()
        return Partition(tuple(assign.get(c, 0) for c in range(len(features))), self.K)

    def n_states(self):
        return len(set(self.learner.assignment().values()))


METHODS = ("oracle", "demem", "feature_kmeans", "feature_rag", "eps_greedy_cluster", "club", "random_partition")


def make_policy(name: str, inst, K: int, seed: int, learner: LearnerConfig | None = None,
                r_new: float | None = None, top_k: int = 2, eps: float = 0.05) -> Policy:
    """Build a named policy for an environment instance."""
    rng = np.random.default_rng(seed)
    N, A, dim = inst.N, inst.A, inst.features.shape[1]
    if name == "oracle":
        return OraclePolicy(np.asarray(inst.mu_z))
    if name == "demem":
        return DeMemPolicy(learner or LearnerConfig(K=K), N, A)
    if name == "feature_kmeans":
        return FeatureKMeansPolicy(K, A, dim)
    if name == "feature_rag":
        return FeatureRAGPolicy(K, A, dim, top_k=top_k, rng=rng)
    if name == "eps_greedy_cluster":
        return EpsGreedyClusterPolicy(K, A, dim, r_new if r_new is not None else 4.0 * inst.feature_std,
                                      eps=eps, rng=rng)
    if name == "club":
        return CLUBPolicy(K, A, N)
    if name == "random_partition":
        return RandomPartitionPolicy(K, A, N, rng)
    raise DomainError(f"unknown method {name!r}")


@dataclass
class PolicyRun:
    method: str
    regret: list
    encoder: Partition
    max_states: int

    @property
    def final_regret(self) -> float:
        return float(sum(self.regret))


def run_policy(policy: Policy, stream, T: int | None = None) -> PolicyRun:
    """Drive one policy over a pre-drawn stream; records per-round regret and the final encoder."""
    inst = stream.instance
    horizon = min(T or stream.T, stream.T)
    feats = inst.features
    regret = []
    max_states = 0
    check_every = max(1, horizon // 64)
    for t in range(1, horizon + 1):
        c = stream.context(t)
        ident = int(stream_identity(stream, t, c))
        obs = PolicyObservation(c, feats[c], t, ident)
        a = policy.act(obs)
        r, inc = stream.step(t, a)
        policy.update(obs, a, r)
        regret.append(inc)
        if policy.budgeted and t % check_every == 0:
            max_states = max(max_states, policy.n_states())
    if policy.budgeted:
        max_states = max(max_states, policy.n_states())
    return PolicyRun(policy.name, regret, policy.encoder(feats), max_states)


def stream_identity(stream, t: int, c: int) -> int:
    inst = stream.b.instance if hasattr(stream, "change") and t >= stream.change else stream.instance
    return inst.identity[c]
