import itertools
import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import TOL, reward_tables, tables_with_partition
from demem.core import (Partition, RewardTable, avg_cluster_radius, best_value, cluster_radius,
                        decision_distance, gap, partition_avg_distortion, partition_worst_distortion, uniform)
from demem.errors import DomainError


def test_gap_examples(example_table):
    assert gap(example_table, 0, 1) == pytest.approx(0.2)
    assert gap(example_table, 1, 0) == pytest.approx(0.3)
    assert gap(example_table, 0, 0) == 0.0
    assert best_value(example_table, 1) == 1.0


def test_decision_distance_example(example_table):
    assert decision_distance(example_table, 0, 1) == pytest.approx(0.2)
    assert decision_distance(example_table, 0, 0) == 0.0


def test_cluster_radius_example(example_table):
    r, a = cluster_radius(example_table, [0, 1])
    assert r == pytest.approx(0.2) and a == 1
    assert cluster_radius(example_table, [1]) == (0.0, 1)


def test_avg_radius_and_distortion_example(example_table):
    assert avg_cluster_radius(example_table, [0.5, 0.5], [0, 1]) == pytest.approx(0.1)
    one = Partition.single(2)
    assert partition_avg_distortion(example_table, uniform(2), one) == pytest.approx(0.1)
    assert partition_worst_distortion(example_table, one) == pytest.approx(0.2)
    assert partition_avg_distortion(example_table, uniform(2), Partition.singletons(2)) == 0.0


def test_ties_resolve_to_lowest_action():
    mu = RewardTable([[0.5, 0.5, 0.1]])
    assert cluster_radius(mu, [0]) == (0.0, 0)


def test_triangle_inequality_can_fail():
    # x0 and x2 each share an action with x1 but not with each other
    mu = RewardTable([[1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0]])
    d01, d12, d02 = (decision_distance(mu, 0, 1), decision_distance(mu, 1, 2), decision_distance(mu, 0, 2))
    assert d01 == d12 == 0.0
    assert d02 == 1.0 > d01 + d12


def test_validation_errors():
    with pytest.raises(DomainError):
        RewardTable([[1.2, 0.0]])
    with pytest.raises(DomainError):
        RewardTable([[0.5, float("nan")]])
    with pytest.raises(DomainError):
        Partition((0, 2), 2)
    mu = RewardTable([[1.0], [0.5]], fiber=(0, 1))
    with pytest.raises(DomainError):
        decision_distance(mu, 0, 1)
    with pytest.raises(DomainError):
        cluster_radius(RewardTable([[1.0]]), [])
    with pytest.raises(DomainError):
        avg_cluster_radius(RewardTable([[1.0], [0.0]]), [0.7, 0.7], [0, 1])
    with pytest.raises(IndexError):
        gap(RewardTable([[1.0]]), 3, 0)


def test_json_roundtrip(example_table):
    doc = json.loads(example_table.to_json())
    assert doc == {"n": 2, "a": 2, "values": [[1.0, 0.8], [0.7, 1.0]]}
    back = RewardTable.from_json(example_table.to_json())
    assert np.array_equal(back.values, example_table.values)
    with pytest.raises(DomainError):
        RewardTable.from_json('{"n": 3, "a": 2, "values": [[1, 0], [0, 1]]}')


@given(reward_tables())
def test_every_context_has_a_zero_gap_action(mu):
    assert np.all(mu.gaps.min(axis=1) == 0.0)
    assert np.all(mu.gaps >= 0.0)


@given(reward_tables(n_min=2))
def test_decision_distance_symmetric_nonnegative(mu):
    for x, y in itertools.product(range(mu.n), repeat=2):
        d = decision_distance(mu, x, y)
        assert d >= 0.0
        assert d == decision_distance(mu, y, x)
    assert all(decision_distance(mu, x, x) == 0.0 for x in range(mu.n))


@given(reward_tables(n_min=2), st.data())
def test_radius_dominates_pairwise_distances(mu, data):
    members = data.draw(st.lists(st.integers(0, mu.n - 1), min_size=1, unique=True))
    r, _ = cluster_radius(mu, members)
    for x, y in itertools.combinations(members, 2):
        assert r >= decision_distance(mu, x, y) - TOL


@given(reward_tables(n_min=1), st.data())
def test_avg_radius_below_worst(mu, data):
    members = data.draw(st.lists(st.integers(0, mu.n - 1), min_size=1, unique=True))
    w = np.array(data.draw(st.lists(st.floats(0.01, 1.0), min_size=len(members), max_size=len(members))))
    w = w / w.sum()
    assert avg_cluster_radius(mu, w, members) <= cluster_radius(mu, members)[0] + TOL


@given(reward_tables(), st.sampled_from([0.0, 0.1, 0.2, 0.5]))
def test_shared_action_iff_radius_small(mu, eps):
    for r in range(1, mu.n + 1):
        for members in itertools.combinations(range(mu.n), r):
            shared = any(all(gap(mu, x, a) <= eps for x in members) for a in range(mu.a))
            assert shared == (cluster_radius(mu, members)[0] <= eps)


@given(tables_with_partition())
def test_avg_distortion_matches_bruteforce(case):
    mu, k, labels = case
    p = Partition(labels, k)
    w = uniform(mu.n)
    expected = 0.0
    for members in p.clusters():
        if members:
            expected += min(sum(w[x] * gap(mu, x, a) for x in members) for a in range(mu.a))
    assert partition_avg_distortion(mu, w, p) == pytest.approx(expected, abs=1e-12)
    assert partition_avg_distortion(mu, w, p) <= partition_worst_distortion(mu, p) + TOL
