import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import TOL, reward_tables
from demem.core import Partition, RewardTable, partition_avg_distortion, partition_worst_distortion, uniform
from demem.errors import CapacityError, DomainError, PropertyViolation
from demem.oracle import (FrontierReport, SetCoverInstance, covering_number, eps_star_avg, eps_star_inf,
                          info_floor, packing_number, sandwich_check, setcover_feasible, setcover_to_memory,
                          verify_forgetting_boundary)


def subset_dp_frontier(mu, k, cost):
    """Independent oracle: DP over bitmasks, best[j][S] = min over covers of S by j blocks."""
    n = mu.n
    full = (1 << n) - 1
    block = [math.inf] * (1 << n)
    for s in range(1, 1 << n):
        block[s] = cost([x for x in range(n) if s >> x & 1])
    best = {0: 0.0}
    frontier = math.inf
    layer = {0: 0.0}
    for _ in range(k):
        nxt = {}
        for s, v in layer.items():
            rest = full & ~s
            if rest == 0:
                continue
            low = rest & -rest  # the lowest uncovered context opens the next block
            sub = rest
            while sub:
                if sub & low:
                    t = s | sub
                    val = v + block[sub] if cost.additive else max(v, block[sub])
                    if val < nxt.get(t, math.inf):
                        nxt[t] = val
                sub = (sub - 1) & rest
        layer = nxt
        frontier = min(frontier, layer.get(full, math.inf))
        best.update(layer)
    return 0.0 if n == 0 else frontier


class _Worst:
    additive = False

    def __init__(self, mu):
        self.g = mu.gaps

    def __call__(self, members):
        return float(self.g[members].max(axis=0).min())


class _Avg:
    additive = True

    def __init__(self, mu, w):
        self.g, self.w = mu.gaps, w

    def __call__(self, members):
        return float((self.w[members] @ self.g[members]).min())


def test_frozen_examples(example_table):
    assert eps_star_inf(example_table, 1).eps_star_inf == pytest.approx(0.2)
    assert eps_star_inf(example_table, 2).eps_star_inf == 0.0
    assert covering_number(example_table, 0.1) == 2
    assert covering_number(example_table, 0.2) == 1
    assert covering_number(example_table, 1.0) == 1
    assert packing_number(example_table, 0.1) == 2
    assert packing_number(example_table, 0.2) == 1
    assert packing_number(example_table, 1.0) == 1


def test_info_floor_values(example_table):
    assert info_floor(example_table, 0.1) == 0.0  # packing(0.2) = 1
    assert info_floor(example_table, 0.05) == 1.0
    assert info_floor(RewardTable(np.eye(4)), 0.2) == 2.0


def test_sandwich_examples(example_table):
    rep = sandwich_check(example_table, 0.2, 1)
    assert rep.upper_fired and not rep.lower_fired
    rep = sandwich_check(RewardTable([[1, 0], [0, 1]]), 0.4, 1)
    assert rep.lower_fired and rep.packing_2eps == 2


def test_rare_outlier_average_floor():
    # one context of mass delta disagrees completely with the rest
    delta = 0.05
    n = 10
    vals = np.array([[1.0, 0.0]] * (n - 1) + [[0.0, 1.0]])
    w = np.array([(1 - delta) / (n - 1)] * (n - 1) + [delta])
    mu = RewardTable(vals)
    assert eps_star_inf(mu, 1).eps_star_inf == 1.0
    assert eps_star_avg(mu, w, 1) <= delta + TOL


def test_witness_achieves_value():
    rng = np.random.default_rng(3)
    mu = RewardTable(rng.random((7, 3)))
    rep = eps_star_inf(mu, 3)
    assert partition_worst_distortion(mu, rep.witness_partition) == pytest.approx(rep.eps_star_inf, abs=TOL)
    g = mu.gaps
    for m, members in enumerate(rep.witness_partition.clusters()):
        if members:
            assert g[members, rep.witness_actions[m]].max() <= rep.eps_star_inf + TOL
    back = FrontierReport.from_json(rep.to_json())
    assert back.eps_star_inf == rep.eps_star_inf and back.witness_partition == rep.witness_partition


def test_caps():
    mu = RewardTable(np.random.default_rng(0).random((11, 2)))
    with pytest.raises(CapacityError, match="10"):
        eps_star_inf(mu, 3)
    with pytest.raises(CapacityError):
        verify_forgetting_boundary(mu, 0.1)
    with pytest.raises(DomainError):
        covering_number(RewardTable([[1.0]]), -0.1)
    with pytest.raises(DomainError):
        eps_star_inf(RewardTable([[1.0], [0.0]], fiber=(0, 1)), 1)


def test_setcover_examples():
    sc = SetCoverInstance(3, ({0, 1}, {1, 2}), 1)
    mu = setcover_to_memory(sc)
    assert mu.values.tolist() == [[1, 0], [1, 1], [0, 1]]
    assert eps_star_inf(mu, 1).eps_star_inf == 1.0
    assert eps_star_inf(mu, 2).eps_star_inf == 0.0
    assert not setcover_feasible(sc, 1) and setcover_feasible(sc, 2)
    assert json.loads(sc.to_json()) == {"universe_size": 3, "sets": [[0, 1], [1, 2]], "k": 1}
    assert SetCoverInstance.from_json(sc.to_json()) == sc
    with pytest.raises(DomainError):
        SetCoverInstance(3, ({0, 1},), 1)
    with pytest.raises(DomainError):
        SetCoverInstance(2, ({0, 1}, set()), 1)


def test_forgetting_examples(example_table):
    rep = verify_forgetting_boundary(example_table, 0.2)
    assert rep.subsets_checked == 3 and rep.pairs_checked == 1 and rep.mergeable_subsets == 3
    rep0 = verify_forgetting_boundary(example_table, 0.0)
    assert rep0.mergeable_subsets == 2  # singletons only


@given(reward_tables(n_max=6, a_max=3), st.integers(1, 4))
def test_frontier_matches_subset_dp(mu, k):
    assert eps_star_inf(mu, k).eps_star_inf == pytest.approx(subset_dp_frontier(mu, k, _Worst(mu)), abs=TOL)


@given(reward_tables(n_max=6, a_max=3), st.integers(1, 4))
def test_avg_frontier_matches_subset_dp(mu, k):
    w = uniform(mu.n)
    dp = subset_dp_frontier(mu, k, _Avg(mu, w))
    assert eps_star_avg(mu, w, k) == pytest.approx(dp, abs=1e-9)
    assert eps_star_avg(mu, w, k) <= eps_star_inf(mu, k).eps_star_inf + TOL


@given(reward_tables(n_max=7, a_max=4))
def test_frontier_monotone_and_zero_at_n(mu):
    vals = [eps_star_inf(mu, k).eps_star_inf for k in range(1, mu.n + 1)]
    assert all(b <= a + TOL for a, b in zip(vals, vals[1:]))
    assert vals[-1] == 0.0


@given(reward_tables(n_max=7, a_max=4), st.sampled_from([0.0, 0.05, 0.1, 0.2, 0.3, 0.5]))
def test_covering_is_smallest_feasible_budget(mu, eps):
    k_min = next(k for k in range(1, mu.n + 1) if eps_star_inf(mu, k).eps_star_inf <= eps)
    assert covering_number(mu, eps) == k_min


@given(reward_tables(n_max=7, a_max=4))
def test_covering_packing_monotone_in_eps(mu):
    grid = [0.0, 0.1, 0.2, 0.4, 0.8, 1.0]
    cov = [covering_number(mu, e) for e in grid]
    pack = [packing_number(mu, e) for e in grid]
    assert cov == sorted(cov, reverse=True) and pack == sorted(pack, reverse=True)
    assert cov[-1] == 1 and pack[-1] == 1


@given(reward_tables(n_max=7, a_max=4))
def test_packing_matches_bruteforce(mu):
    g = mu.gaps
    dd = np.maximum(g[:, None, :], g[None, :, :]).min(axis=2)
    for eps in (0.0, 0.2):
        best = max(len(s) for r in range(1, mu.n + 1) for s in itertools.combinations(range(mu.n), r)
                   if all(dd[x, y] > eps for x, y in itertools.combinations(s, 2)))
        assert packing_number(mu, eps) == best


@given(reward_tables(n_max=6, a_max=4), st.sampled_from([0.0, 0.1, 0.25, 0.4]), st.integers(1, 6))
def test_sandwich_never_violated(mu, eps, k):
    sandwich_check(mu, eps, k)


@given(reward_tables(n_max=6, a_max=4), st.sampled_from([0.0, 0.1, 0.25, 0.5]))
def test_info_floor_below_log_covering(mu, eps):
    cov = covering_number(mu, eps)
    if cov >= packing_number(mu, 2 * eps):
        assert info_floor(mu, eps) <= math.log2(cov) + TOL


@settings(max_examples=30)
@given(reward_tables(n_max=6, a_max=3), st.sampled_from([0.0, 0.1, 0.3]))
def test_forgetting_boundary_random(mu, eps):
    verify_forgetting_boundary(mu, eps)


def test_sandwich_raises_on_tampered_oracle(monkeypatch):
    import demem.oracle as oracle

    class Fake:
        eps_star_inf = 0.9

    monkeypatch.setattr(oracle, "eps_star_inf", lambda mu, k: Fake())
    with pytest.raises(PropertyViolation) as info:
        oracle.sandwich_check(RewardTable([[1.0, 0.8], [0.7, 1.0]]), 0.2, 1)
    assert info.value.instance is not None


@st.composite
def setcover_instances(draw):
    u = draw(st.integers(1, 6))
    s = draw(st.integers(1, 5))
    sets = [set(draw(st.lists(st.integers(0, u - 1), min_size=1, max_size=u))) for _ in range(s)]
    for e in range(u):
        if not any(e in x for x in sets):
            sets[draw(st.integers(0, s - 1))].add(e)
    return SetCoverInstance(u, tuple(sets), draw(st.integers(1, s)))


@given(setcover_instances())
def test_reduction_values_are_binary_and_match_feasibility(sc):
    mu = setcover_to_memory(sc)
    assert np.all(mu.best == 1.0)
    for k in range(1, len(sc.sets) + 1):
        star = eps_star_inf(mu, k).eps_star_inf
        assert star in (0.0, 1.0)
        assert (star == 0.0) == setcover_feasible(sc, k)
