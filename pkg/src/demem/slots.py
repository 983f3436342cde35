"""A K-slot memory runtime with split-only refinement.

Contexts are routed to the highest-scoring active slot.  Each slot carries a
vector prototype, a bounded list of text items, or both.  When two contexts
sharing a slot are seen to prefer different actions by more than the
current threshold, the slot is split around that witness pair, as long as a
free slot remains.  At capacity the witness is only logged.  Slots are never
merged, evicted or replaced.

Scoring, item extraction and the acting rule are plain callables, so the
runtime needs nothing beyond numpy.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .core import RewardTable
from .errors import CapacityError, DomainError, PropertyViolation, SlotStateError


@dataclass
class Slot:
    id: int
    prototype: np.ndarray | None = None
    summary: list | None = None
    budget: int = 0
    active: bool = True
    members: list = field(default_factory=list)

    def __post_init__(self):
        if self.prototype is None and self.summary is None:
            raise DomainError("a slot needs a prototype, a summary, or both")

    def summary_length(self) -> int:
        return sum(len(s) for s in self.summary) if self.summary is not None else 0


def compress(items: Sequence[str], budget: int) -> list:
    """Drop the oldest items until the total length fits; a lone oversized item is truncated."""
    out = list(items)
    while out and sum(len(s) for s in out) > budget:
        if len(out) == 1:
            out[0] = out[0][:budget]
            if not out[0]:
                out.pop()
            break
        out.pop(0)
    return out


def update_prototype(slot: Slot, f: np.ndarray, eta: float) -> Slot:
    if slot.prototype is None:
        raise DomainError("slot has no prototype")
    f = np.asarray(f, dtype=float)
    if f.shape != slot.prototype.shape:
        raise DomainError(f"feature dimension {f.shape} does not match prototype {slot.prototype.shape}")
    slot.prototype = (1.0 - eta) * slot.prototype + eta * f
    return slot


def update_summary(slot: Slot, item: str) -> Slot:
    if slot.summary is None:
        raise DomainError("slot has no summary")
    slot.summary = compress(slot.summary + [item], slot.budget)
    return slot


def cosine_score(f: np.ndarray, slot: Slot) -> float:
    p = slot.prototype
    nf, npr = float(np.linalg.norm(f)), float(np.linalg.norm(p))
    if nf == 0.0 or npr == 0.0:
        return 0.0
    return float(f @ p) / (nf * npr)


def neg_sqdist_score(f: np.ndarray, slot: Slot) -> float:
    d = np.asarray(f) - slot.prototype
    return -float(d @ d)


def cannot_link_test(r_hat, x, x2, beta: float) -> bool:
    """Is there an action pair that ``x`` and ``x2`` rank in opposite orders by more than ``beta``?"""
    rx = np.asarray(r_hat[x], dtype=float)
    ry = np.asarray(r_hat[x2], dtype=float)
    if rx.shape != ry.shape:
        raise DomainError("estimate vectors must cover the same actions")
    px = rx[:, None] - rx[None, :]  # px[a, a'] = r(x,a) - r(x,a')
    py = ry[None, :] - ry[:, None]  # py[a, a'] = r(x2,a') - r(x2,a)
    hit = (px > beta) & (py > beta)
    np.fill_diagonal(hit, False)
    return bool(hit.any())


@dataclass
class SlotConfig:
    K: int
    L: int = 200
    tau_split: float = 0.3
    tau_sat: float | None = None
    eta: float = 0.5
    realization: str = "prototype"  # prototype | summary | both
    n_min: int = 3
    max_candidates: int = 4

    def __post_init__(self):
        if self.K < 1:
            raise DomainError("K must be at least 1")
        if self.tau_sat is None:
            self.tau_sat = 2.0 * self.tau_split
        if self.tau_sat < self.tau_split:
            raise DomainError("tau_sat must be at least tau_split")
        if not 0.0 < self.eta <= 1.0:
            raise DomainError("eta must lie in (0, 1]")
        if self.realization not in ("prototype", "summary", "both"):
            raise DomainError(f"unknown realization {self.realization!r}")
        if self.L < 0:
            raise DomainError("summary budget L must be nonnegative")


@dataclass
class SlotContext:
    id: int
    features: np.ndarray
    item: str = ""


def _default_act(sys: "SlotSystem", slot: Slot, read, x: int) -> int:
    """Try each action ``n_min`` times for this context, then play the slot's greedy action."""
    counts = sys.counts[x]
    low = min(counts)
    if low < sys.cfg.n_min:
        return counts.index(low)
    s, n = sys.slot_sums[slot.id], sys.slot_counts[slot.id]
    best, best_a = -math.inf, 0
    for a in range(sys.A):
        v = s[a] / n[a] if n[a] else 1.0
        if v > best:
            best, best_a = v, a
    return best_a


class SlotSystem:
    def __init__(self, cfg: SlotConfig, n_actions: int,
                 score: Callable = neg_sqdist_score,
                 act: Callable = _default_act,
                 extract: Callable = lambda ctx: ctx.item,
                 log_routes: bool = False):
        self.cfg = cfg
        self.A = n_actions
        self.score = score
        self.act_fn = act
        self.extract = extract
        self.slots: list[Slot] = []
        self.cannot_link: list = []
        self.saturated: list = []
        self._sat_seen: set = set()
        self.events: list = []
        self.log_routes = log_routes
        self.features: dict = {}
        self.items: dict = {}
        self.sums: dict = {}
        self.counts: dict = {}
        self.slot_sums: dict = {}
        self.slot_counts: dict = {}
        self.home: dict = {}  # context -> slot id of its latest routing

    # ---- state helpers
    def active(self) -> list[Slot]:
        return [s for s in self.slots if s.active]

    def n_active(self) -> int:
        return sum(1 for s in self.slots if s.active)

    def tau(self) -> float:
        return self.cfg.tau_split if self.n_active() < self.cfg.K else self.cfg.tau_sat

    def r_hat(self, x: int) -> list | None:
        c = self.counts.get(x)
        if c is None or min(c) == 0:
            return None
        return [s / n for s, n in zip(self.sums[x], c)]

    def _mem_init(self, slot_id: int, members: list) -> Slot:
        use_proto = self.cfg.realization in ("prototype", "both")
        use_sum = self.cfg.realization in ("summary", "both")
        proto = np.mean([self.features[z] for z in members], axis=0) if use_proto else None
        summ = compress([self.items[z] for z in members], self.cfg.L) if use_sum else None
        return Slot(slot_id, proto, summ, self.cfg.L, True, list(members))

    def _refresh_slot_stats(self, slot: Slot) -> None:
        s = [0.0] * self.A
        n = [0] * self.A
        for z in slot.members:
            for a in range(self.A):
                s[a] += self.sums[z][a]
                n[a] += self.counts[z][a]
        self.slot_sums[slot.id] = s
        self.slot_counts[slot.id] = n

    # ---- operations
    def route(self, f: np.ndarray) -> int:
        act = self.active()
        if not act:
            raise SlotStateError("no active slot to route to")
        best, best_id = -math.inf, act[0].id
        for s in act:
            v = self.score(f, s)
            if v > best:
                best, best_id = v, s.id
        return best_id

    def execute_split(self, k: int, witness: tuple) -> int:
        """Split slot ``k`` around the witness pair and return the new slot id."""
        if self.n_active() >= self.cfg.K:
            raise CapacityError(f"all {self.cfg.K} slots are active; split must be suppressed")
        x, x2 = witness
        old = self.slots[k]
        anchor_k = self._mem_init(-1, [x])
        anchor_new = self._mem_init(-2, [x2])
        keep, move = [], []
        for z in old.members:
            f = self.features[z]
            (keep if self.score(f, anchor_k) >= self.score(f, anchor_new) else move).append(z)
        # the witnesses always anchor their own side
        if x not in keep:
            move.remove(x)
            keep.append(x)
        if x2 not in move:
            keep.remove(x2)
            move.append(x2)
        new_id = len(self.slots)
        self.slots[k] = self._mem_init(k, keep)
        self.slots.append(self._mem_init(new_id, move))
        for z in keep:
            self.home[z] = k
        for z in move:
            self.home[z] = new_id
        self._refresh_slot_stats(self.slots[k])
        self._refresh_slot_stats(self.slots[new_id])
        return new_id

    def _find_witness(self, k: int, x: int, tau: float):
        rx = self.r_hat(x)
        if rx is None:
            return None
        for z in sorted(self.slots[k].members):
            if z == x:
                continue
            rz = self.r_hat(z)
            if rz is not None and cannot_link_test({0: rx, 1: rz}, 0, 1, tau):
                return (min(x, z), max(x, z))
        return None

    def step(self, ctx: SlotContext, reward_feedback: Callable[[int], float], t: int) -> int:
        """One runtime round: route, read, act, update, then test for a split."""
        x = ctx.id
        f = np.asarray(ctx.features, dtype=float)
        self.features[x] = f
        self.items[x] = self.extract(ctx)
        if x not in self.counts:
            self.sums[x] = [0.0] * self.A
            self.counts[x] = [0] * self.A
        if not self.slots:
            self.slots.append(self._mem_init(0, [x]))
            self.slot_sums[0] = [0.0] * self.A
            self.slot_counts[0] = [0] * self.A
        k = self.route(f)
        slot = self.slots[k]
        if self.log_routes:
            self.events.append({"t": t, "type": "route", "context": x, "slot": k})
        read = (None if slot.prototype is None else slot.prototype.copy(),
                None if slot.summary is None else tuple(slot.summary))
        a = self.act_fn(self, slot, read, x)
        r = min(1.0, max(0.0, float(reward_feedback(a))))
        self.sums[x][a] += r
        self.counts[x][a] += 1
        prev = self.home.get(x)
        if prev is not None and prev != k:
            old = self.slots[prev]
            old.members.remove(x)
            self._refresh_slot_stats(old)
            self.slot_sums[k] = [u + v for u, v in zip(self.slot_sums[k], self.sums[x])]
            self.slot_counts[k] = [u + v for u, v in zip(self.slot_counts[k], self.counts[x])]
        else:
            self.slot_sums[k][a] += r
            self.slot_counts[k][a] += 1
        if x not in slot.members:
            slot.members.append(x)
        self.home[x] = k
        if slot.prototype is not None:
            update_prototype(slot, f, self.cfg.eta)
        if slot.summary is not None:
            update_summary(slot, self.items[x])
        tau = self.tau()
        witness = self._find_witness(k, x, tau)
        if witness is not None:
            if self.n_active() < self.cfg.K:
                self.cannot_link.append(witness)
                new_id = self.execute_split(k, witness)
                self.events.append({"t": t, "type": "split", "slot": k, "new_slot": new_id,
                                    "tau": tau, "witness": list(witness)})
            elif witness not in self._sat_seen:
                self._sat_seen.add(witness)
                self.saturated.append(witness)
                self.events.append({"t": t, "type": "suppress", "slot": k, "tau": tau,
                                    "witness": list(witness)})
        return a

    def decide(self, x: int) -> tuple[int, int]:
        """Slot and greedy slot action the runtime would use for a known context now."""
        k = self.route(self.features[x])
        s, n = self.slot_sums[k], self.slot_counts[k]
        vals = [s[a] / n[a] if n[a] else 1.0 for a in range(self.A)]
        return k, int(np.argmax(vals))

    def events_jsonl(self) -> str:
        return "".join(json.dumps(e, sort_keys=True) + "\n" for e in self.events)


# ---- benchmark-style guard band and radius certificate


@dataclass(frozen=True)
class ScorerPanel:
    c_beta: float = 1.0
    sigma0_sq: float = 0.01
    eta_cal: float = 0.0
    max_candidates: int = 4

    def __post_init__(self):
        if self.sigma0_sq < 0 or self.eta_cal < 0 or self.c_beta < 0:
            raise DomainError("guard constants must be nonnegative")


def guard_band(panel: ScorerPanel, scores) -> float:
    s = np.asarray(scores, dtype=float)
    if s.size < 2:
        raise DomainError("the guard band needs at least two scores")
    var = float(s.var(ddof=1))
    return panel.c_beta * math.sqrt((var + panel.sigma0_sq) / s.size) + panel.eta_cal


def candidate_restricted_radius(panel: ScorerPanel, candidates, scores: dict, x, x2) -> float:
    """Smallest, over shared candidates, of the larger one-sided loss of the two contexts.

    ``scores[(context, candidate)]`` holds that pair's panel scores.
    """
    cands = list(candidates)
    if not cands:
        raise DomainError("candidate set must be nonempty")
    if len(cands) > panel.max_candidates:
        raise DomainError(f"at most {panel.max_candidates} candidates, got {len(cands)}")
    env = {}
    for c in (x, x2):
        for u in cands:
            if (c, u) not in scores:
                raise DomainError(f"missing scores for context {c!r} and candidate {u!r}")
            s = np.asarray(scores[(c, u)], dtype=float)
            m, b = float(s.mean()), guard_band(panel, s)
            env[(c, u)] = (max(0.0, m - b), min(1.0, m + b))
    best_low = {c: max(env[(c, v)][0] for v in cands) for c in (x, x2)}
    loss = {(c, u): max(0.0, best_low[c] - env[(c, u)][1]) for c in (x, x2) for u in cands}
    return min(max(loss[(x, u)], loss[(x2, u)]) for u in cands)


def impl_split_trigger(radius: float, eps_split: float) -> bool:
    return radius > eps_split


@dataclass(frozen=True)
class BridgeReport:
    compression: float
    eta_route: float
    eta_read: float
    total: float
    route_mass: float

    @property
    def bound(self) -> float:
        return self.compression + self.eta_route + self.eta_read


def bridge_decomposition(g_star, a_star, router, decisions, mu: RewardTable, dist=None,
                         tol: float = 1e-12) -> BridgeReport:
    """Split the realized average loss into compression, routing and readout parts.

    ``g_star``/``a_star`` is the comparator rule, ``router`` the implemented
    slot of each context (already aligned to the comparator's labels) and
    ``decisions`` the realized action of each context.
    """
    n = mu.n
    g = np.asarray(g_star, dtype=int)
    e = np.asarray(router, dtype=int)
    dec = np.asarray(decisions, dtype=int)
    if not (len(g) == len(e) == len(dec) == n):
        raise DomainError("encoder, router and decisions must label every context")
    w = np.full(n, 1.0 / n) if dist is None else np.asarray(dist, dtype=float)
    best = mu.best
    ref = mu.values[np.arange(n), np.asarray(a_star)[g]]
    impl = mu.values[np.arange(n), dec]
    compression = float((best - ref).max())
    total = float(w @ (best - impl))
    agree = e == g
    excess = ref - impl
    eta_route = max(0.0, float(w[~agree] @ excess[~agree]))
    mass_agree = float(w[agree].sum())
    eta_read = max(0.0, float(w[agree] @ excess[agree]) / mass_agree) if mass_agree > 0 else 0.0
    rep = BridgeReport(compression, eta_route, eta_read, total, float(w[~agree].sum()))
    if rep.total > rep.bound + tol:
        raise PropertyViolation(f"bridge inequality fails: {rep.total} > {rep.bound}", mu)
    return rep


def align_labels(reference, labels) -> np.ndarray:
    """Relabel ``labels`` to agree with ``reference`` as often as possible (Hungarian matching)."""
    ref = np.asarray(reference, dtype=int)
    lab = np.asarray(labels, dtype=int)
    r_ids, l_ids = np.unique(ref), np.unique(lab)
    overlap = np.array([[np.sum((lab == l) & (ref == r)) for r in r_ids] for l in l_ids])
    rows, cols = linear_sum_assignment(-overlap)
    mapping = {int(l_ids[i]): int(r_ids[j]) for i, j in zip(rows, cols)}
    spare = iter(x for x in range(int(max(ref.max(), lab.max())) + len(l_ids) + 1) if x not in set(r_ids.tolist()))
    for l in l_ids:
        if int(l) not in mapping:
            mapping[int(l)] = next(spare)
    return np.array([mapping[int(l)] for l in lab])
