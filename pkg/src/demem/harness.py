"""Experiment runner: every (method, K, alpha, seed) cell is independent and deterministic.

Results are keyed by cell, sorted, then written, so the worker count never
changes the output bytes.  Each CSV starts with a ``# manifest_digest=``
line holding the digest of the canonical configuration.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.stats import spearmanr

from . import __version__
from .baselines import METHODS, make_policy, run_policy
from .certificates import CertificateSet, anytime_violation_rate
from .core import RewardTable, partition_avg_distortion, partition_worst_distortion, uniform
from .env import (EnvConfig, action_mismatch_distortion, generate, piecewise, value_loss_distortion)
from .errors import CapacityError, ConfigError, DomainError
from .learner import LearnerConfig, run, run_with_restarts
from .oracle import PARTITION_CAP, eps_star_inf
from .partition import graph_gap_report, greedy_partition
from .slots import (SlotConfig, SlotContext, SlotSystem, align_labels, bridge_decomposition)

KINDS = ("regret", "budget_sweep", "mismatch_sweep", "partition_validation", "oracle_validation",
         "certificate_audit", "nonstationary", "slot_audit")
BANDIT_KINDS = KINDS[:4]

# Tuned desk-scale defaults; see README for the rationale.
_REGRET_ENV = {"M": 3, "A": 3, "N": 9, "d": 2, "noise_sigma": 0.1, "T": 20_000,
               "best_range": [0.9, 1.0], "other_range": [0.0, 0.1]}
_LEARNER = {"gamma": 1.5, "delta": 0.1, "feasibility": "coloring"}

PRESETS = {
    "regret": {"env": _REGRET_ENV, "methods": list(METHODS), "K_grid": [3], "alpha_grid": [0.5]},
    "budget_sweep": {"env": {**_REGRET_ENV, "M": 10, "A": 10, "N": 10}, "methods": ["demem"],
                     "K_grid": [3, 5, 8, 10], "alpha_grid": [0.5]},
    "mismatch_sweep": {"env": {**_REGRET_ENV, "M": 12, "groups": 4, "A": 4, "N": 12},
                       "methods": ["demem", "feature_kmeans", "feature_rag", "eps_greedy_cluster"],
                       "K_grid": [4], "alpha_grid": [0.0, 0.25, 0.5, 0.75, 1.0]},
    "partition_validation": {"env": _REGRET_ENV, "methods": list(METHODS), "K_grid": [3],
                             "alpha_grid": [0.25, 0.5, 0.75], "seeds": list(range(10))},
    "oracle_validation": {"params": {"n_instances": 50, "N": 10, "A": 8, "M": 6, "family": "identity",
                                     "K_grid": [2, 3, 4, 5, 8, 10],
                                     "feasibility": ["coloring", "degeneracy"]}},
    "certificate_audit": {"params": {"deltas": [0.05, 0.1], "runs": 10_000, "horizon": 200,
                                     "N": 2, "A": 2, "noiseless": False}},
    "nonstationary": {"env": {**_REGRET_ENV, "T": 40_000}, "K_grid": [3], "alpha_grid": [0.5],
                      "params": {"change_fraction": 0.5}},
    "slot_audit": {"params": {"noise_grid": [0.0, 0.1, 0.2], "steps": 3000, "K": 4, "groups": 4,
                              "per_group": 5, "A": 4, "tau_split": 0.3, "n_min": 3,
                              "fuzz_steps": 10_000, "fuzz_K": 5, "fuzz_L": 40}},
}


@dataclass
class ExperimentConfig:
    kind: str
    env: dict = field(default_factory=dict)
    methods: list = field(default_factory=lambda: list(METHODS))
    K_grid: list = field(default_factory=lambda: [3])
    alpha_grid: list = field(default_factory=lambda: [0.5])
    seeds: list = field(default_factory=lambda: list(range(20)))
    learner: dict = field(default_factory=lambda: dict(_LEARNER))
    params: dict = field(default_factory=dict)
    per_round: bool | None = None

    def validate(self) -> "ExperimentConfig":
        if self.kind not in KINDS:
            raise ConfigError("kind", f"unknown experiment kind {self.kind!r}")
        if not self.seeds:
            raise ConfigError("seeds", "at least one seed is required")
        if self.kind in BANDIT_KINDS or self.kind == "nonstationary":
            if not self.K_grid:
                raise ConfigError("K_grid", "grid must be nonempty")
            if not self.alpha_grid:
                raise ConfigError("alpha_grid", "grid must be nonempty")
            if any(not isinstance(k, int) or k < 1 for k in self.K_grid):
                raise ConfigError("K_grid", "budgets must be positive integers")
            if any(not 0.0 <= a <= 1.0 for a in self.alpha_grid):
                raise ConfigError("alpha_grid", "mismatch levels must lie in [0, 1]")
            unknown = [m for m in self.methods if m not in METHODS]
            if unknown:
                raise ConfigError("methods", f"unknown methods {unknown}")
            if not self.methods and self.kind in BANDIT_KINDS:
                raise ConfigError("methods", "at least one method is required")
            try:
                EnvConfig(**_env_kwargs(self.env))
            except (DomainError, TypeError) as exc:
                raise ConfigError("env", str(exc)) from None
            try:
                _learner_config(self.learner, 1, 1)
            except (DomainError, TypeError) as exc:
                raise ConfigError("learner", str(exc)) from None
        return self

    def canonical(self) -> dict:
        return json.loads(json.dumps(asdict(self), sort_keys=True))

    def digest(self) -> str:
        text = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(doc) - known
        if extra:
            raise ConfigError(sorted(extra)[0], "unknown configuration field")
        if "kind" not in doc:
            raise ConfigError("kind", "missing")
        return cls(**doc)


def preset(kind: str, **overrides) -> ExperimentConfig:
    if kind not in PRESETS:
        raise ConfigError("kind", f"unknown experiment kind {kind!r}")
    doc = {"kind": kind, **json.loads(json.dumps(PRESETS[kind]))}
    for key, val in overrides.items():
        if isinstance(val, dict) and isinstance(doc.get(key), dict):
            doc[key] = {**doc[key], **val}
        else:
            doc[key] = val
    return ExperimentConfig.from_dict(doc).validate()


def _env_kwargs(env: dict) -> dict:
    kw = dict(env)
    for key in ("best_range", "other_range"):
        if key in kw:
            kw[key] = tuple(kw[key])
    return kw


def _learner_config(doc: dict, K: int, T: int) -> LearnerConfig:
    kw = {k: v for k, v in doc.items() if k in ("delta", "gamma", "feasibility", "restart_period")}
    return LearnerConfig(K=K, T=T, **kw)


# ---------------------------------------------------------------- bandit cells


def bandit_cell(task) -> dict:
    """One (method, K, alpha, seed) simulation; module-level so worker processes can run it."""
    env_doc, learner_doc, method, K, alpha, seed, per_round = task
    cfg = EnvConfig(**_env_kwargs({**env_doc, "alpha": alpha, "seed": seed}))
    inst = generate(cfg)
    stream = inst.stream()
    policy = make_policy(method, inst, K, seed, _learner_config(learner_doc, K, cfg.T))
    res = run_policy(policy, stream, cfg.T)
    table = inst.table()
    enc = res.encoder
    out = {
        "method": method, "K": K, "alpha": alpha, "seed": seed,
        "final_regret": res.final_regret,
        "dstar": partition_avg_distortion(table, uniform(inst.N), enc),
        "dstar_inf": partition_worst_distortion(table, enc),
        "dval": value_loss_distortion(inst, enc),
        "dact": action_mismatch_distortion(inst, enc),
        "max_states": res.max_states,
    }
    if per_round:
        out["cumulative"] = np.cumsum(res.regret).tolist()
    return out


def _map(fn, tasks, threads: int):
    if threads and threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, tasks, chunksize=1))
    return [fn(t) for t in tasks]


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(round(float(v), 10))
    return str(v)


def _csv(rows: list, header: list, digest: str) -> str:
    buf = io.StringIO()
    buf.write(f"# manifest_digest={digest}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(r[h]) for h in header])
    return buf.getvalue()


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    summary: list
    cells: list
    report: dict
    files: dict = field(default_factory=dict)

    def summary_for(self, **match) -> list:
        return [r for r in self.summary if all(r.get(k) == v for k, v in match.items())]


def _summarize_bandit(cells: list) -> list:
    groups: dict = {}
    for c in cells:
        groups.setdefault((c["method"], c["K"], c["alpha"]), []).append(c)
    rows = []
    for (m, K, a), cs in sorted(groups.items(), key=lambda kv: (METHODS.index(kv[0][0]), kv[0][1], kv[0][2])):
        reg = np.array([c["final_regret"] for c in cs])
        row = {"method": m, "K": K, "alpha": a, "seeds": len(cs),
               "regret_mean": float(reg.mean()), "regret_std": float(reg.std(ddof=1)) if len(cs) > 1 else 0.0}
        for key in ("dstar", "dstar_inf", "dval", "dact"):
            v = np.array([c[key] for c in cs])
            row[key + "_mean"] = float(v.mean())
            row[key + "_std"] = float(v.std(ddof=1)) if len(cs) > 1 else 0.0
        row["max_states"] = int(max(c["max_states"] for c in cs))
        rows.append(row)
    return rows


SUMMARY_HEADER = ["method", "K", "alpha", "seeds", "regret_mean", "regret_std", "dstar_mean", "dstar_std",
                  "dstar_inf_mean", "dstar_inf_std", "dval_mean", "dval_std", "dact_mean", "dact_std",
                  "max_states"]
CELL_HEADER = ["method", "K", "alpha", "seed", "final_regret", "dstar", "dstar_inf", "dval", "dact", "max_states"]


def _finite(v: float):
    return float(v) if math.isfinite(v) else None


def _bandit_report(kind: str, cells: list, summary: list) -> dict:
    rep: dict = {}
    if kind == "partition_validation" or len({c["method"] for c in cells}) > 2:
        x = [c["dstar"] for c in cells]
        y = [c["final_regret"] for c in cells]
        rho = spearmanr(x, y).statistic if len(set(x)) > 1 else float("nan")
        rep["spearman_dstar_regret"] = _finite(rho)
    alphas = sorted({c["alpha"] for c in cells})
    if len(alphas) > 2:
        rep["spearman_alpha"] = {}
        for m in sorted({c["method"] for c in cells}):
            curve = [r["regret_mean"] for a in alphas for r in summary if r["method"] == m and r["alpha"] == a]
            rep["spearman_alpha"][m] = (_finite(spearmanr(alphas, curve).statistic)
                                        if len(set(curve)) > 1 else None)
    return rep


def run_bandit_grid(cfg: ExperimentConfig, threads: int = 1) -> tuple[list, list]:
    per_round = cfg.per_round if cfg.per_round is not None else cfg.kind == "regret"
    tasks = [(cfg.env, cfg.learner, m, K, a, s, per_round)
             for K in cfg.K_grid for a in cfg.alpha_grid for s in cfg.seeds for m in cfg.methods]
    cells = _map(bandit_cell, tasks, threads)
    cells.sort(key=lambda c: (METHODS.index(c["method"]), c["K"], c["alpha"], c["seed"]))
    return cells, _summarize_bandit(cells)


# ---------------------------------------------------------------- other kinds


def oracle_table(seed: int, N: int, A: int, family: str = "identity", M: int = 6) -> RewardTable:
    """Random instance: ``identity`` rows copy one of ``M`` latent value vectors, ``uniform`` rows are iid."""
    rng = np.random.default_rng(seed)
    if family == "uniform":
        return RewardTable(rng.random((N, A)))
    if family == "identity":
        mu_z = rng.random((M, A))
        return RewardTable(mu_z[rng.integers(0, M, size=N)])
    raise ConfigError("params.family", f"unknown instance family {family!r}")


def oracle_cell(task) -> list:
    seed, N, A, K_grid, variants, family, M = task
    mu = oracle_table(seed, N, A, family, M)
    certs = CertificateSet.exact(mu)
    rows = []
    for K in K_grid:
        star = eps_star_inf(mu, K).eps_star_inf
        for feasibility in variants:
            ep = greedy_partition(certs, range(N), K, feasibility)
            rep = graph_gap_report(certs, range(N), K, feasibility)
            if star == 0.0:
                ratio = 1.0 if ep.eps_cert == 0.0 else math.inf
            else:
                ratio = ep.eps_cert / star
            rows.append({"instance": seed, "feasibility": feasibility, "K": K, "eps_star": star,
                         "eps_cert": ep.eps_cert, "ratio": ratio, "alpha_e": rep.alpha_e,
                         "alpha_star": rep.alpha_star, "degeneracy_star": rep.degeneracy_at_star,
                         "zero_gap": rep.zero_gap_regime, "level_match": rep.alpha_e == rep.alpha_star})
    return rows


def run_oracle_validation(cfg: ExperimentConfig, threads: int = 1) -> tuple[list, list, dict]:
    p = cfg.params
    N = int(p.get("N", 10))
    if N > PARTITION_CAP:
        raise CapacityError(f"oracle validation enumerates partitions; N={N} exceeds the cap of {PARTITION_CAP}")
    K_grid = list(p.get("K_grid", [3]))
    variants = list(p.get("feasibility", ["coloring", "degeneracy"]))
    tasks = [(s, N, int(p.get("A", 8)), K_grid, variants, p.get("family", "identity"), int(p.get("M", 6)))
             for s in range(int(p.get("n_instances", 50)))]
    cells = [r for rows in _map(oracle_cell, tasks, threads) for r in rows]
    summary = []
    for feasibility in variants:
        for K in K_grid:
            rs = [r for r in cells if r["K"] == K and r["feasibility"] == feasibility]
            ratios = np.array([r["ratio"] for r in rs])
            finite = ratios[np.isfinite(ratios)]
            zg = [r for r in rs if r["zero_gap"]]
            summary.append({"feasibility": feasibility, "K": K, "instances": len(rs),
                            "eps_star_mean": float(np.mean([r["eps_star"] for r in rs])),
                            "ratio_mean": float(ratios.mean()),
                            "ratio_std": float(finite.std(ddof=1)) if len(finite) > 1 else 0.0,
                            "ratio_min": float(ratios.min()), "ratio_max": float(ratios.max()),
                            "exact_freq": float(np.mean(np.abs(ratios - 1.0) < 1e-12)),
                            "degeneracy_star_mean": float(np.mean([r["degeneracy_star"] for r in rs])),
                            "zero_gap_freq": len(zg) / len(rs),
                            "zero_gap_level_match": float(np.mean([r["level_match"] for r in zg])) if zg else 1.0})
    report = {"all_ratios_ge_1": bool(all(r["ratio"] >= 1.0 - 1e-12 for r in cells)),
              "zero_gap_exact": bool(all(r["level_match"] for r in cells if r["zero_gap"]))}
    return cells, summary, report


def run_certificate_audit(cfg: ExperimentConfig, threads: int = 1) -> tuple[list, list, dict]:
    p = cfg.params
    N, A = int(p.get("N", 2)), int(p.get("A", 2))
    runs, horizon = int(p.get("runs", 10_000)), int(p.get("horizon", 200))
    rows = []
    for delta in p.get("deltas", [0.1]):
        rng = np.random.default_rng(cfg.seeds[0])
        mu = RewardTable(rng.uniform(0.1, 0.9, size=(N, A)))
        rate = anytime_violation_rate(mu, delta, runs, horizon, rng, noiseless=bool(p.get("noiseless", False)))
        tol = delta + 3.0 * math.sqrt(delta * (1 - delta) / runs)
        rows.append({"delta": delta, "runs": runs, "horizon": horizon, "violation_rate": rate,
                     "bound": tol, "ok": rate <= tol})
    return rows, rows, {"all_ok": all(r["ok"] for r in rows)}


def nonstationary_cell(task) -> dict:
    env_doc, learner_doc, K, alpha, seed, change_fraction, stationary = task
    cfg = EnvConfig(**_env_kwargs({**env_doc, "alpha": alpha, "seed": seed}))
    change = int(cfg.T * change_fraction) + 1
    if stationary:
        stream = generate(cfg).stream()
    else:
        stream = piecewise(cfg, change).stream(cfg.seed + 7919, cfg.T)
    plain = run(stream, _learner_config(learner_doc, K, cfg.T))
    restart_cfg = _learner_config({**learner_doc, "restart_period": change - 1}, K, cfg.T)
    restarted = run_with_restarts(stream, restart_cfg)
    return {"seed": seed, "stationary": stationary, "plain": plain.final_regret,
            "restarts": restarted.final_regret}


def run_nonstationary(cfg: ExperimentConfig, threads: int = 1) -> tuple[list, list, dict]:
    frac = float(cfg.params.get("change_fraction", 0.5))
    K, alpha = cfg.K_grid[0], cfg.alpha_grid[0]
    tasks = [(cfg.env, cfg.learner, K, alpha, s, frac, st) for st in (False, True) for s in cfg.seeds]
    cells = _map(nonstationary_cell, tasks, threads)
    cells.sort(key=lambda c: (c["stationary"], c["seed"]))
    summary = []
    for st in (False, True):
        cs = [c for c in cells if c["stationary"] == st]
        p = np.array([c["plain"] for c in cs])
        r = np.array([c["restarts"] for c in cs])
        summary.append({"env": "stationary" if st else "piecewise", "seeds": len(cs),
                        "plain_mean": float(p.mean()), "restarts_mean": float(r.mean()),
                        "paired_diff_mean": float((r - p).mean()),
                        "paired_diff_std": float((r - p).std(ddof=1)) if len(cs) > 1 else 0.0})
    report = {"piecewise_restarts_better": summary[0]["restarts_mean"] < summary[0]["plain_mean"],
              "stationary_plain_not_worse": summary[1]["plain_mean"] <= summary[1]["restarts_mean"]}
    return cells, summary, report


def planted_slot_run(seed: int, p: float, K: int, groups: int, per_group: int, A: int, steps: int,
                     tau_split: float, n_min: int) -> dict:
    """Slot runtime on separable planted groups with binary rewards flipped at rate ``p``."""
    rng = np.random.default_rng(seed)
    centers = rng.normal(0.0, 10.0, size=(groups, 2))
    n = groups * per_group
    group = np.arange(n) % groups
    feats = centers[group] + rng.normal(0.0, 0.5, size=(n, 2))
    best = group % A
    values = np.zeros((n, A))
    values[np.arange(n), best] = 1.0
    mu = RewardTable(values * (1 - p) + (1 - values) * p)
    sysm = SlotSystem(SlotConfig(K=K, tau_split=tau_split, n_min=n_min), A)
    arrivals = rng.integers(0, n, size=steps)
    flips = rng.random(steps) < p
    max_active = 0
    for t in range(1, steps + 1):
        x = int(arrivals[t - 1])

        def feedback(a, x=x, t=t):
            r = 1.0 if a == best[x] else 0.0
            return 1.0 - r if flips[t - 1] else r

        sysm.step(SlotContext(x, feats[x], f"ctx{x}"), feedback, t)
        max_active = max(max_active, sysm.n_active())
    witnesses = sysm.cannot_link + sysm.saturated
    true_hits = sum(int(best[a] != best[b]) for a, b in witnesses)
    # bridge audit against the planted comparator
    slots_now, decisions = [], []
    for x in range(n):
        if x in sysm.features:
            k, a = sysm.decide(x)
        else:
            k, a = 0, 0
        slots_now.append(k)
        decisions.append(a)
    router = align_labels(group, slots_now)
    a_star = [int(g % A) for g in range(groups)]
    bridge = bridge_decomposition(group, a_star, router, decisions, mu)
    return {"seed": seed, "p": p, "witnesses": len(witnesses), "true_witnesses": true_hits,
            "max_active": max_active, "K": K, "compression": bridge.compression,
            "eta_route": bridge.eta_route, "eta_read": bridge.eta_read, "total": bridge.total,
            "route_mass": bridge.route_mass, "bridge_ok": bridge.total <= bridge.bound + 1e-12}


def fuzz_slot_run(seed: int, steps: int, K: int, L: int, A: int = 3) -> dict:
    """Random features, rewards and item lengths; tracks capacity and summary budgets."""
    rng = np.random.default_rng(seed)
    sysm = SlotSystem(SlotConfig(K=K, L=L, tau_split=0.05, realization="both", n_min=1), A)
    n_ctx = 50
    feats = rng.normal(size=(n_ctx, 3))
    max_active, max_len = 0, 0
    for t in range(1, steps + 1):
        x = int(rng.integers(n_ctx))
        item = "x" * int(rng.integers(0, 2 * L + 2))
        r = float(rng.random())
        sysm.step(SlotContext(x, feats[x], item), lambda a, r=r: r, t)
        max_active = max(max_active, sysm.n_active())
        max_len = max(max_len, max(s.summary_length() for s in sysm.slots))
    return {"seed": seed, "max_active": max_active, "K": K, "max_summary": max_len, "L": L,
            "splits": len(sysm.cannot_link), "suppressed": len(sysm.saturated)}


def run_slot_audit(cfg: ExperimentConfig, threads: int = 1) -> tuple[list, list, dict]:
    p = cfg.params
    cells = []
    for noise in p.get("noise_grid", [0.0, 0.1, 0.2]):
        for s in cfg.seeds:
            cells.append(planted_slot_run(s, noise, int(p.get("K", 4)), int(p.get("groups", 4)),
                                          int(p.get("per_group", 5)), int(p.get("A", 4)),
                                          int(p.get("steps", 3000)), float(p.get("tau_split", 0.3)),
                                          int(p.get("n_min", 3))))
    summary = []
    for noise in p.get("noise_grid", [0.0, 0.1, 0.2]):
        cs = [c for c in cells if c["p"] == noise]
        fired = sum(c["witnesses"] for c in cs)
        summary.append({"p": noise, "runs": len(cs), "witnesses": fired,
                        "precision": sum(c["true_witnesses"] for c in cs) / fired if fired else 1.0,
                        "bridge_ok_all": all(c["bridge_ok"] for c in cs),
                        "max_active": max(c["max_active"] for c in cs)})
    fuzz = [fuzz_slot_run(s, int(p.get("fuzz_steps", 10_000)), int(p.get("fuzz_K", 5)), int(p.get("fuzz_L", 40)))
            for s in cfg.seeds[:3]]
    prec = [r["precision"] for r in summary]
    report = {"precision": prec,
              "precision_monotone": all(b <= a + 1e-12 for a, b in zip(prec, prec[1:])),
              "capacity_ok": all(c["max_active"] <= c["K"] for c in cells + fuzz),
              "summary_budget_ok": all(f["max_summary"] <= f["L"] for f in fuzz),
              "bridge_ok": all(c["bridge_ok"] for c in cells), "fuzz": fuzz}
    return cells, summary, report


# ---------------------------------------------------------------- entry point


def _write(out_dir: str, name: str, text: str, files: dict) -> None:
    path = os.path.join(out_dir, name)
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)
    files[name] = path


def run_experiment(cfg: ExperimentConfig, out_dir: str | None = None, threads: int = 1) -> ExperimentResult:
    cfg.validate()
    digest = cfg.digest()
    started = time.time()
    if cfg.kind in BANDIT_KINDS:
        cells, summary = run_bandit_grid(cfg, threads)
        report = _bandit_report(cfg.kind, cells, summary)
        sum_header, cell_header = SUMMARY_HEADER, CELL_HEADER
    else:
        runner = {"oracle_validation": run_oracle_validation, "certificate_audit": run_certificate_audit,
                  "nonstationary": run_nonstationary, "slot_audit": run_slot_audit}[cfg.kind]
        cells, summary, report = runner(cfg, threads)
        sum_header = list(summary[0].keys()) if summary else []
        cell_header = [k for k in (cells[0].keys() if cells else []) if k != "cumulative"]
    result = ExperimentResult(cfg, summary, cells, report)
    if out_dir is None:
        return result
    os.makedirs(out_dir, exist_ok=True)
    _write(out_dir, "summary.csv", _csv(summary, sum_header, digest), result.files)
    _write(out_dir, "cells.csv", _csv(cells, cell_header, digest), result.files)
    for c in cells:
        if "cumulative" in c:
            rows = [{"round": i + 1, "cumulative_regret": v} for i, v in enumerate(c["cumulative"])]
            name = f"rounds/{c['method']}_K{c['K']}_a{c['alpha']}_seed{c['seed']}.csv"
            _write(out_dir, name, _csv(rows, ["round", "cumulative_regret"], digest), result.files)
    _write(out_dir, "report.json", json.dumps({"manifest_digest": digest, **report}, sort_keys=True,
                                              indent=2, default=float) + "\n", result.files)
    manifest = {"manifest_digest": digest, "code_version": __version__, "config": cfg.canonical(),
                "seeds": list(cfg.seeds), "threads": threads, "elapsed_seconds": round(time.time() - started, 3)}
    _write(out_dir, "manifest.json", json.dumps(manifest, sort_keys=True, indent=2) + "\n", result.files)
    return result
