"""Brute-force sweeps over random small instances for the exact frontier statements.

Each sweep returns a plain dict of counts.  Counterexamples are collected,
not raised, so callers can report them.
"""
from __future__ import annotations

import math

import numpy as np

from .core import RewardTable
from .errors import PropertyViolation
from .oracle import (SetCoverInstance, covering_number, eps_star_inf, info_floor, packing_number,
                     setcover_feasible, setcover_to_memory, verify_forgetting_boundary)


def random_table(rng: np.random.Generator, n_max: int = 8, a_max: int = 4, grid: bool | None = None) -> RewardTable:
    """Random table; half the time values sit on a 0.1 grid so ties and boundary cases show up."""
    n = int(rng.integers(1, n_max + 1))
    a = int(rng.integers(1, a_max + 1))
    if grid is None:
        grid = bool(rng.integers(2))
    vals = rng.integers(0, 11, size=(n, a)) / 10.0 if grid else rng.random((n, a))
    return RewardTable(vals)


def forgetting_sweep(n_instances: int = 100, seed: int = 0, eps_grid=(0.0, 0.1, 0.25, 0.5)) -> dict:
    rng = np.random.default_rng(seed)
    subsets = pairs = 0
    failures = []
    for i in range(n_instances):
        mu = random_table(rng)
        for eps in eps_grid:
            try:
                rep = verify_forgetting_boundary(mu, eps)
                subsets += rep.subsets_checked
                pairs += rep.pairs_checked
            except PropertyViolation as exc:
                failures.append((i, eps, str(exc)))
    return {"instances": n_instances, "subsets": subsets, "pairs": pairs, "counterexamples": failures}


def sandwich_sweep(n_instances: int = 200, seed: int = 1, eps_grid=(0.0, 0.05, 0.1, 0.2, 0.3, 0.5)) -> dict:
    """Both covering/packing clauses for every K, plus the information floor where the lower clause binds."""
    rng = np.random.default_rng(seed)
    failures = []
    checked = upper = lower = floor_checked = 0
    for i in range(n_instances):
        mu = random_table(rng)
        stars = [eps_star_inf(mu, k).eps_star_inf for k in range(1, mu.n + 1)]
        for eps in eps_grid:
            cov = covering_number(mu, eps)
            pack = packing_number(mu, 2.0 * eps)
            feasible = [k for k in range(1, mu.n + 1) if stars[k - 1] <= eps]
            binds = False
            for k in range(1, mu.n + 1):
                star = stars[k - 1]
                checked += 1
                if k >= cov:
                    upper += 1
                    if not star <= eps:
                        failures.append((i, eps, k, "upper"))
                if pack > k:
                    lower += 1
                    binds = True
                    if not star > eps:
                        failures.append((i, eps, k, "lower"))
            if binds and feasible:
                floor_checked += 1
                if info_floor(mu, eps) > math.log2(min(feasible)) + 1e-12:
                    failures.append((i, eps, min(feasible), "info_floor"))
    return {"instances": n_instances, "checks": checked, "upper_fired": upper, "lower_fired": lower,
            "floor_checked": floor_checked, "counterexamples": failures}


def random_setcover(rng: np.random.Generator, u_max: int = 8, s_max: int = 6) -> SetCoverInstance:
    u = int(rng.integers(1, u_max + 1))
    s = int(rng.integers(1, s_max + 1))
    sets = [set(np.flatnonzero(rng.random(u) < 0.4).tolist()) for _ in range(s)]
    for elem in range(u):  # patch so every element is covered
        if not any(elem in st for st in sets):
            sets[int(rng.integers(s))].add(elem)
    sets = [st if st else {int(rng.integers(u))} for st in sets]
    return SetCoverInstance(u, tuple(sets), int(rng.integers(1, s + 1)))


def setcover_sweep(n_instances: int = 100, seed: int = 2, eps_grid=(0.0, 0.5, 0.99)) -> dict:
    """Cover feasibility at K agrees with ``eps_star_inf(K) <= eps`` for every eps below 1."""
    rng = np.random.default_rng(seed)
    failures = []
    checks = feasible_count = 0
    for i in range(n_instances):
        sc = random_setcover(rng)
        mu = setcover_to_memory(sc)
        for k in range(1, len(sc.sets) + 1):
            feas = setcover_feasible(sc, k)
            feasible_count += feas
            star = eps_star_inf(mu, k).eps_star_inf
            for eps in eps_grid:
                checks += 1
                if feas != (star <= eps):
                    failures.append((i, k, eps))
    return {"instances": n_instances, "checks": checks, "feasible": feasible_count, "counterexamples": failures}
