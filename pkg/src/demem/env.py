"""The Decoupled Bandit: descriptive features that only partly reveal the decision identity.

Prototypes come in ``groups`` spatial clusters of ``M // groups`` prototypes.
All identities of group ``g`` share best action ``g``, so descriptive
neighbours agree on what to do when ``alpha = 0``.  The mismatch permutation
sends identity ``(g, i)`` to ``((g + 1 + i) mod G, i)``, which always lands in
another group and therefore changes the optimal action.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .core import Partition, RewardTable
from .errors import DomainError, GenerationError

MAX_RETRIES = 100


@dataclass(frozen=True)
class EnvConfig:
    M: int = 3
    A: int = 3
    d: int = 2
    N: int = 12
    alpha: float = 0.5
    noise_sigma: float = 0.1
    T: int = 20_000
    seed: int = 0
    groups: int = 0  # 0 means one group per identity
    best_range: tuple = (0.8, 1.0)
    other_range: tuple = (0.0, 0.3)
    group_spread: float = 10.0
    proto_spread: float = 2.0

    def __post_init__(self):
        g = self.groups or self.M
        checks = [
            (self.M >= 1, "M must be positive"),
            (self.N >= self.M, "need at least one context per identity (M <= N)"),
            (0.0 <= self.alpha <= 1.0, "alpha must lie in [0, 1]"),
            (self.noise_sigma >= 0.0, "noise_sigma must be nonnegative"),
            (self.T >= 1, "horizon T must be positive"),
            (self.d >= 1, "feature dimension d must be positive"),
            (self.M % g == 0, "M must be a multiple of groups"),
            (self.A >= g, "need at least one action per group"),
            (self.M // g <= max(g - 1, 1), "at most groups - 1 prototypes per group for the permutation"),
            (self.other_range[1] < self.best_range[0], "best_range must sit above other_range"),
            (0.0 <= self.other_range[0] and self.best_range[1] <= 1.0, "reward ranges must lie in [0, 1]"),
        ]
        for ok, msg in checks:
            if not ok:
                raise DomainError(msg)

    @property
    def n_groups(self) -> int:
        return self.groups or self.M

    def replace(self, **kw) -> "EnvConfig":
        doc = asdict(self)
        doc.update(kw)
        return EnvConfig(**doc)


def identity_perm(M: int, G: int) -> np.ndarray:
    s = M // G
    perm = np.empty(M, dtype=int)
    for z in range(M):
        g, i = divmod(z, s)
        perm[z] = ((g + 1 + i) % G) * s + i if G > 1 else z
    return perm


@dataclass(frozen=True)
class EnvInstance:
    config: EnvConfig
    mu_z: np.ndarray
    prototypes: np.ndarray
    perm: np.ndarray
    features: np.ndarray
    pseudo: np.ndarray
    identity: np.ndarray
    feature_std: float

    @property
    def N(self) -> int:
        return len(self.identity)

    @property
    def A(self) -> int:
        return self.mu_z.shape[1]

    def best_action(self, c: int) -> int:
        return int(np.argmax(self.mu_z[self.identity[c]]))

    def table(self) -> RewardTable:
        return export_reward_table(self)

    def manifest(self) -> dict:
        cfg = asdict(self.config)
        return {
            "config": cfg,
            "feature_std": self.feature_std,
            "prototype_geometry": "gaussian groups around centers, gaussian prototypes within groups",
            "feature_noise": "isotropic gaussian, std = min prototype distance / 8",
            "digest": self.digest(),
        }

    def digest(self) -> str:
        h = hashlib.sha256()
        for arr in (self.mu_z, self.prototypes, self.perm, self.features, self.pseudo, self.identity):
            h.update(np.ascontiguousarray(arr).tobytes())
        return h.hexdigest()

    def stream(self, seed: int | None = None, T: int | None = None) -> "Stream":
        return Stream.draw(self, self.config.seed + 7919 if seed is None else seed, T or self.config.T)


def _nearest(protos: np.ndarray, f: np.ndarray) -> int:
    return int(np.argmin(((protos - f) ** 2).sum(axis=1)))


def generate(config: EnvConfig) -> EnvInstance:
    """Draw prototypes, reward vectors and the context roster for ``config``."""
    rng = np.random.default_rng(config.seed)
    G = config.n_groups
    s = config.M // G
    protos = None
    for _ in range(MAX_RETRIES):
        centers = rng.normal(0.0, config.group_spread, size=(G, config.d))
        cand = np.repeat(centers, s, axis=0) + rng.normal(0.0, config.proto_spread, size=(config.M, config.d))
        dist = np.sqrt(((cand[:, None] - cand[None]) ** 2).sum(-1))
        iu = np.triu_indices(config.M, 1)
        if config.M == 1:
            protos = cand
            break
        group_of = np.arange(config.M) // s
        same = group_of[:, None] == group_of[None, :]
        within = dist[same & ~np.eye(config.M, dtype=bool)]
        across = dist[~same]
        if dist[iu].min() > 0 and (within.size == 0 or across.size == 0 or within.max() < across.min()):
            protos = cand
            break
    if protos is None:
        raise GenerationError(f"could not separate prototype groups after {MAX_RETRIES} draws")
    if config.M > 1:
        dist = np.sqrt(((protos[:, None] - protos[None]) ** 2).sum(-1))
        feature_std = float(dist[np.triu_indices(config.M, 1)].min() / 8.0)
    else:
        feature_std = 1.0

    mu = rng.uniform(*config.other_range, size=(config.M, config.A))
    for z in range(config.M):
        mu[z, z // s] = rng.uniform(*config.best_range)

    perm = identity_perm(config.M, G)
    features = np.empty((config.N, config.d))
    pseudo = np.empty(config.N, dtype=int)
    identity = np.empty(config.N, dtype=int)
    for c in range(config.N):
        features[c] = protos[c % config.M] + rng.normal(0.0, feature_std, size=config.d)
        pseudo[c] = _nearest(protos, features[c])
        identity[c] = perm[pseudo[c]] if rng.random() < config.alpha else pseudo[c]
    for arr in (mu, protos, features, pseudo, identity, perm):
        arr.setflags(write=False)
    return EnvInstance(config, mu, protos, perm, features, pseudo, identity, feature_std)


@dataclass
class Stream:
    """Pre-drawn arrivals and noise, shared verbatim by every policy in a comparison."""

    instance: EnvInstance
    contexts: np.ndarray
    noise: np.ndarray
    best: np.ndarray = field(init=False)

    def __post_init__(self):
        mu_ctx = self.instance.mu_z[self.instance.identity]
        self._mu = mu_ctx.tolist()
        self.best = mu_ctx.max(axis=1)
        self._best = self.best.tolist()
        self._ctx = self.contexts.tolist()
        self._noise = self.noise.tolist()

    @classmethod
    def draw(cls, inst: EnvInstance, seed: int, T: int) -> "Stream":
        rng = np.random.default_rng(seed)
        contexts = rng.integers(0, inst.N, size=T)
        noise = rng.normal(0.0, inst.config.noise_sigma, size=T) if inst.config.noise_sigma > 0 else np.zeros(T)
        return cls(inst, contexts, noise)

    @property
    def T(self) -> int:
        return len(self._ctx)

    def context(self, t: int) -> int:
        """Context of round ``t`` (1-based)."""
        return self._ctx[t - 1]

    def step(self, t: int, action: int) -> tuple[float, float]:
        """Raw noisy reward and the clean regret increment for round ``t``."""
        c = self._ctx[t - 1]
        row = self._mu[c]
        return row[action] + self._noise[t - 1], self._best[c] - row[action]


def export_reward_table(inst: EnvInstance) -> RewardTable:
    return RewardTable(inst.mu_z[inst.identity])


def _cluster_choices(inst: EnvInstance, p: Partition, dist=None):
    if len(p.labels) != inst.N:
        raise DomainError("partition must label every roster context")
    w = np.full(inst.N, 1.0 / inst.N) if dist is None else np.asarray(dist, dtype=float)
    mu = inst.mu_z[inst.identity]
    labels = np.asarray(p.labels)
    chosen = np.empty(inst.N, dtype=int)
    for m in np.unique(labels):
        idx = labels == m
        profile = (w[idx, None] * mu[idx]).sum(axis=0) / w[idx].sum()
        chosen[idx] = int(np.argmax(profile))
    return mu, w, chosen


def action_mismatch_distortion(inst: EnvInstance, p: Partition, dist=None) -> float:
    """Probability that the cluster-profile action differs from the context's optimal action."""
    mu, w, chosen = _cluster_choices(inst, p, dist)
    return float(w @ (chosen != mu.argmax(axis=1)))


def value_loss_distortion(inst: EnvInstance, p: Partition, dist=None) -> float:
    """Expected value lost by acting on the cluster-profile action."""
    mu, w, chosen = _cluster_choices(inst, p, dist)
    loss = mu.max(axis=1) - mu[np.arange(inst.N), chosen]
    return float(w @ loss)


def identity_partition(inst: EnvInstance) -> Partition:
    return Partition(tuple(int(z) for z in inst.identity), inst.config.M)


@dataclass(frozen=True)
class PiecewiseEnv:
    """Two stationary segments; identities are redrawn at ``change``."""

    first: EnvInstance
    second: EnvInstance
    change: int

    def stream(self, seed: int, T: int) -> "PiecewiseStream":
        a = Stream.draw(self.first, seed, T)
        b = Stream(self.second, a.contexts, a.noise)
        return PiecewiseStream(a, b, self.change)


@dataclass
class PiecewiseStream:
    a: Stream
    b: Stream
    change: int

    @property
    def T(self) -> int:
        return self.a.T

    @property
    def instance(self) -> EnvInstance:
        return self.a.instance

    def context(self, t: int) -> int:
        return (self.a if t < self.change else self.b).context(t)

    def step(self, t: int, action: int):
        return (self.a if t < self.change else self.b).step(t, action)


def piecewise(config: EnvConfig, change: int) -> PiecewiseEnv:
    """Same roster and features; from round ``change`` every identity moves through the permutation."""
    first = generate(config)
    shifted = np.asarray(first.perm)[first.identity]
    shifted.setflags(write=False)
    second = EnvInstance(first.config, first.mu_z, first.prototypes, first.perm, first.features,
                         first.pseudo, shifted, first.feature_std)
    return PiecewiseEnv(first, second, change)


def manifest_json(inst: EnvInstance) -> str:
    return json.dumps(inst.manifest(), sort_keys=True)

