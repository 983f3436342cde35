import collections

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from demem.core import RewardTable
from demem.errors import CapacityError, DomainError, PropertyViolation, SlotStateError
from demem.oracle import eps_star_inf
from demem.slots import (ScorerPanel, Slot, SlotConfig, SlotContext, SlotSystem, align_labels,
                         bridge_decomposition, candidate_restricted_radius, cannot_link_test, compress,
                         cosine_score, guard_band, impl_split_trigger, update_prototype, update_summary)


def test_update_prototype_examples():
    s = Slot(0, np.zeros(2))
    assert update_prototype(s, [1.0, 0.0], 0.5).prototype.tolist() == [0.5, 0.0]
    assert update_prototype(Slot(0, np.zeros(2)), [3.0, 4.0], 1.0).prototype.tolist() == [3.0, 4.0]
    assert update_prototype(Slot(0, np.ones(2)), [3.0, 4.0], 0.0).prototype.tolist() == [1.0, 1.0]
    with pytest.raises(DomainError):
        update_prototype(Slot(0, np.zeros(2)), [1.0], 0.5)
    with pytest.raises(DomainError):
        Slot(0)


def test_compress_examples():
    assert compress(["ab", "cd"], 10) == ["ab", "cd"]
    assert compress(["ab", "cd", "ef"], 4) == ["cd", "ef"]
    assert compress(["ab", "cd"], 0) == []
    s = Slot(0, summary=[], budget=0)
    for item in ("x", "yy"):
        update_summary(s, item)
    assert s.summary == [] and s.summary_length() == 0


@given(st.lists(st.text(max_size=12), max_size=40), st.integers(0, 30))
def test_summary_budget_matches_reference_queue(items, budget):
    slot = Slot(0, summary=[], budget=budget)
    ref = collections.deque()
    for it in items:
        update_summary(slot, it)
        assert slot.summary_length() <= budget
        ref.append(it)
        while ref and sum(map(len, ref)) > budget:
            if len(ref) == 1:
                ref[0] = ref[0][:budget]
                if not ref[0]:
                    ref.pop()
                break
            ref.popleft()
        assert slot.summary == list(ref)


def test_cannot_link_examples():
    r = {0: [0.9, 0.1], 1: [0.2, 0.8]}
    assert cannot_link_test(r, 0, 1, 0.3)
    assert not cannot_link_test({0: [0.4, 0.6], 1: [0.4, 0.6]}, 0, 1, 0.0)
    assert not cannot_link_test(r, 0, 1, 1.0)


@given(st.lists(st.floats(0, 1), min_size=3, max_size=3), st.lists(st.floats(0, 1), min_size=3, max_size=3),
       st.floats(0, 1))
def test_cannot_link_symmetric_and_monotone(rx, ry, beta):
    r = {0: rx, 1: ry}
    hit = cannot_link_test(r, 0, 1, beta)
    assert hit == cannot_link_test(r, 1, 0, beta)
    if hit:
        assert cannot_link_test(r, 0, 1, beta / 2)


def test_routing_examples():
    sys_ = SlotSystem(SlotConfig(K=3), 2, score=cosine_score)
    with pytest.raises(SlotStateError):
        sys_.route(np.ones(2))
    sys_.slots = [Slot(0, np.array([1.0, 0.0])), Slot(1, np.array([0.0, 1.0])), Slot(2, np.array([0.0, 1.0]))]
    assert sys_.route(np.array([1.0, 0.0])) == 0
    assert sys_.route(np.array([0.0, 2.0])) == 1  # tie between 1 and 2 goes to the lowest id
    sys_.slots = sys_.slots[:1]
    assert sys_.route(np.array([-5.0, 3.0])) == 0


def _feedback(best, p=0.0, rng=None):
    def fb(a):
        r = 1.0 if a == best else 0.0
        if p and rng.random() < p:
            r = 1.0 - r
        return r
    return fb


def _planted(K, n_per=3, steps=200):
    feats = {0: np.array([0.0, 0.0]), 1: np.array([0.1, 0.0]), 2: np.array([0.0, 0.1]),
             3: np.array([10.0, 10.0]), 4: np.array([10.1, 10.0]), 5: np.array([10.0, 10.1])}
    best = {x: 0 if x < 3 else 1 for x in feats}
    sys_ = SlotSystem(SlotConfig(K=K, tau_split=0.3, n_min=n_per), 2)
    for t in range(steps):
        x = t % 6
        sys_.step(SlotContext(x, feats[x]), _feedback(best[x]), t)
    return sys_, best


def test_planted_split_recovers_groups():
    sys_, best = _planted(K=2)
    assert sys_.n_active() == 2 and len(sys_.cannot_link) == 1
    groups = {frozenset(s.members) for s in sys_.active()}
    assert groups == {frozenset({0, 1, 2}), frozenset({3, 4, 5})}
    assert all(sys_.decide(x)[1] == best[x] for x in best)


def test_at_capacity_witness_is_logged_not_split():
    sys_, _ = _planted(K=1)
    assert sys_.n_active() == 1
    assert sys_.cannot_link == [] and len(sys_.saturated) >= 1
    assert sys_.tau() == 2 * 0.3
    with pytest.raises(CapacityError):
        sys_.execute_split(0, sys_.saturated[0])


def test_no_conflicts_no_splits():
    sys_ = SlotSystem(SlotConfig(K=4), 2)
    rng = np.random.default_rng(0)
    for t in range(300):
        x = int(rng.integers(6))
        sys_.step(SlotContext(x, rng.normal(size=2)), _feedback(0), t)
    assert sys_.n_active() == 1


def test_execute_split_anchors():
    sys_ = SlotSystem(SlotConfig(K=3), 2)
    for x, f in ((0, [0.0, 0.0]), (1, [5.0, 5.0])):
        sys_.step(SlotContext(x, np.array(f)), _feedback(0), x)
    new = sys_.execute_split(0, (0, 1))
    assert sys_.slots[0].members == [0] and sys_.slots[new].members == [1]
    # items identical to one anchor follow it
    sys2 = SlotSystem(SlotConfig(K=3), 2)
    for x in range(4):
        sys2.step(SlotContext(x, np.zeros(2) if x != 3 else np.ones(2) * 9), _feedback(0), x)
    new = sys2.execute_split(0, (0, 3))
    assert sorted(sys2.slots[0].members) == [0, 1, 2] and sys2.slots[new].members == [3]


@settings(max_examples=15)
@given(st.integers(0, 10_000), st.integers(1, 5), st.sampled_from(["prototype", "summary", "both"]))
def test_fuzzed_capacity_and_budget(seed, K, realization):
    rng = np.random.default_rng(seed)
    score = (lambda f, s: -len(s.summary)) if realization == "summary" else None
    kwargs = {"score": score} if score else {}
    sys_ = SlotSystem(SlotConfig(K=K, L=20, tau_split=0.05, n_min=1, realization=realization), 3, **kwargs)
    for t in range(400):
        x = int(rng.integers(12))
        sys_.step(SlotContext(x, rng.normal(size=2), "w" * int(rng.integers(0, 9))),
                  lambda a: float(rng.random()), t)
        assert sys_.n_active() <= K
        assert all(s.summary_length() <= 20 for s in sys_.active())


def test_guard_band_examples():
    assert guard_band(ScorerPanel(1.0, 0.01, 0.05), [0.8, 0.6]) == pytest.approx(0.1725, abs=1e-4)
    assert guard_band(ScorerPanel(1.0, 0.0, 0.0), [0.5, 0.5]) == 0.0
    assert guard_band(ScorerPanel(1.0, 0.0, 0.07), [0.5] * 10_000) == pytest.approx(0.07)
    with pytest.raises(DomainError):
        guard_band(ScorerPanel(), [0.5])


def test_candidate_radius_examples():
    panel = ScorerPanel(1.0, 0.0, 0.0)
    same = {(c, u): [0.9, 0.9] for c in "xy" for u in "ab"}
    assert candidate_restricted_radius(panel, "ab", same, "x", "y") == 0.0
    conflict = {("x", "a"): [0.95, 0.95], ("x", "b"): [0.05, 0.05],
                ("y", "a"): [0.05, 0.05], ("y", "b"): [0.95, 0.95]}
    r = candidate_restricted_radius(panel, "ab", conflict, "x", "y")
    assert r == pytest.approx(0.9) and impl_split_trigger(r, 0.2)
    with pytest.raises(DomainError):
        candidate_restricted_radius(panel, "abcde", conflict, "x", "y")


@given(st.floats(0.0, 3.0), st.floats(0.0, 3.0), st.integers(0, 1000))
def test_wider_guard_never_increases_radius(c1, c2, seed):
    rng = np.random.default_rng(seed)
    scores = {(c, u): rng.random(3).tolist() for c in "xy" for u in "abc"}
    lo, hi = sorted((c1, c2))
    r_lo = candidate_restricted_radius(ScorerPanel(lo, 0.01), "abc", scores, "x", "y")
    r_hi = candidate_restricted_radius(ScorerPanel(hi, 0.01), "abc", scores, "x", "y")
    assert r_hi <= r_lo + 1e-12


def test_bridge_examples():
    mu = RewardTable([[1.0, 0.0, 0.8], [0.0, 1.0, 0.8]])
    star = eps_star_inf(mu, 1)
    g = star.witness_partition.labels
    a = star.witness_actions
    rep = bridge_decomposition(g, a, g, [a[m] for m in g], mu)
    assert (rep.compression, rep.eta_route, rep.eta_read, rep.total) == pytest.approx((0.2, 0.0, 0.0, 0.2))
    # perfect routing, decisions lose a fixed 0.3 against the comparator action
    mu2 = RewardTable([[1.0, 0.7], [1.0, 0.7]])
    rep = bridge_decomposition([0, 0], [0], [0, 0], [1, 1], mu2)
    assert rep.eta_read == pytest.approx(0.3) and rep.eta_route == 0.0


def test_bridge_raises_on_inconsistent_input():
    with pytest.raises(DomainError):
        bridge_decomposition([0], [0], [0, 0], [0], RewardTable([[1.0]]))


@given(st.integers(0, 10_000))
def test_bridge_holds_for_arbitrary_routers(seed):
    rng = np.random.default_rng(seed)
    n, A, K = 6, 3, 2
    mu = RewardTable(rng.random((n, A)))
    star = eps_star_inf(mu, K)
    router = rng.integers(0, K, size=n)
    dec = rng.integers(0, A, size=n)
    rep = bridge_decomposition(star.witness_partition.labels, star.witness_actions, router, dec, mu)
    assert rep.total <= rep.bound + 1e-12


def test_align_labels():
    assert align_labels([0, 0, 1, 1], [1, 1, 0, 0]).tolist() == [0, 0, 1, 1]
    out = align_labels([0, 0, 0], [0, 1, 2])
    assert out[0] == 0 and len(set(out.tolist())) == 3


def test_events_jsonl():
    sys_, _ = _planted(K=2)
    lines = sys_.events_jsonl().splitlines()
    assert any('"type": "split"' in line for line in lines)


def test_config_validation():
    for bad in (dict(K=0), dict(K=2, tau_split=0.5, tau_sat=0.1), dict(K=2, eta=0.0), dict(K=2, realization="x"),
                dict(K=2, L=-1)):
        with pytest.raises(DomainError):
            SlotConfig(**bad)
    assert SlotConfig(K=2, tau_split=0.25).tau_sat == 0.5


def test_bridge_violation_is_reported():
    with pytest.raises(PropertyViolation):
        bridge_decomposition([0], [0], [0], [0], RewardTable([[1.0, 0.0]]), tol=-1.0)
