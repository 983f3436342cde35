"""Greedy epoch partitioning from cannot-link certificates.

At level ``alpha`` two observed contexts are joined by a cannot-link edge when
their certified lower decision distance exceeds ``alpha`` (strictly).  The
partition is a proper coloring of that graph with at most ``K`` colors,
found at the smallest candidate level where the smallest-last greedy
coloring is guaranteed to fit.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .certificates import CertificateSet, ObservationLedger
from .core import Partition
from .errors import CapacityError, DomainError

CHROMATIC_CAP = 12


@dataclass
class CannotLinkGraph:
    vertices: list
    adj: np.ndarray
    alpha: float

    @classmethod
    def at_level(cls, vertices, dlow: np.ndarray, alpha: float) -> "CannotLinkGraph":
        adj = dlow > alpha
        np.fill_diagonal(adj, False)
        return cls(list(vertices), adj, alpha)

    @classmethod
    def from_edges(cls, n: int, edges) -> "CannotLinkGraph":
        adj = np.zeros((n, n), dtype=bool)
        for u, v in edges:
            if u == v:
                raise DomainError("self-loops are not allowed")
            adj[u, v] = adj[v, u] = True
        return cls(list(range(n)), adj, 0.0)

    @property
    def n(self) -> int:
        return len(self.vertices)

    def edge_count(self) -> int:
        return int(self.adj.sum() // 2)

    def edges(self):
        iu, ju = np.nonzero(np.triu(self.adj, 1))
        return list(zip(iu.tolist(), ju.tolist()))


def degeneracy_order(g: CannotLinkGraph) -> tuple[list[int], int]:
    """Smallest-last ordering (the order to color in) and the graph degeneracy.

    Vertices are peeled by minimum remaining degree, lowest index first; the
    returned ordering is the reverse of the peeling, so each vertex has at
    most ``degeneracy`` neighbours colored before it.
    """
    alive = np.ones(g.n, dtype=bool)
    deg = g.adj.sum(axis=1).astype(np.int64)
    peel = []
    degen = 0
    big = g.n + 1
    for _ in range(g.n):
        v = int(np.argmin(np.where(alive, deg, big)))
        degen = max(degen, int(deg[v]))
        peel.append(v)
        alive[v] = False
        deg -= g.adj[v]
    return peel[::-1], degen


def greedy_color(g: CannotLinkGraph, ordering) -> list[int]:
    """Color vertices in ``ordering`` with the smallest color unused by colored neighbours."""
    colors = [-1] * g.n
    for v in ordering:
        taken = {colors[u] for u in np.flatnonzero(g.adj[v]) if colors[u] >= 0}
        c = 0
        while c in taken:
            c += 1
        colors[v] = c
    return colors


def is_proper(g: CannotLinkGraph, colors) -> bool:
    return all(colors[u] != colors[v] for u, v in g.edges())


def chromatic_number(g: CannotLinkGraph, cap: int = CHROMATIC_CAP) -> int:
    if g.n > cap:
        raise CapacityError(f"exact chromatic search supports at most {cap} vertices, got {g.n}")
    if g.n == 0:
        return 0
    order, degen = degeneracy_order(g)
    upper = max(greedy_color(g, order)) + 1
    nbrs = [np.flatnonzero(g.adj[v]).tolist() for v in order]
    pos = {v: i for i, v in enumerate(order)}
    nbrs = [[pos[u] for u in ns] for ns in nbrs]

    def colorable(k: int) -> bool:
        col = [-1] * g.n

        def rec(i: int, used: int) -> bool:
            if i == g.n:
                return True
            taken = {col[u] for u in nbrs[i] if col[u] >= 0}
            # symmetry break: never open more than one new color
            for c in range(min(used + 1, k)):
                if c not in taken:
                    col[i] = c
                    if rec(i + 1, max(used, c + 1)):
                        return True
            col[i] = -1
            return False

        return rec(0, 0)

    k = 1
    while k < upper and not colorable(k):
        k += 1
    return k


@dataclass
class EpochPartition:
    """Cluster assignment of the observed contexts plus its certified price."""

    assignment: dict
    k: int
    alpha: float
    eps_cert: float
    actions: list
    edges: int = 0
    degeneracy: int = 0
    colors_used: int = 0
    levels: int = 1
    stats: dict = field(default_factory=dict)

    def clusters(self) -> list[list[int]]:
        out = [[] for _ in range(self.k)]
        for x, m in sorted(self.assignment.items()):
            out[m].append(x)
        return out

    def to_partition(self, n: int) -> Partition:
        missing = [x for x in range(n) if x not in self.assignment]
        if missing:
            raise DomainError(f"contexts {missing[:5]} are not assigned by this epoch partition")
        return Partition(tuple(self.assignment[x] for x in range(n)), self.k)

    STATS_HEADER = ("observed", "alpha", "edges", "degeneracy", "colors_used", "eps_cert")

    def stats_row(self) -> tuple:
        return (len(self.assignment), self.alpha, self.edges, self.degeneracy, self.colors_used, self.eps_cert)


def candidate_levels(dlow: np.ndarray) -> np.ndarray:
    """Sorted distinct levels ``{0} U {d_low >= 0}`` over distinct pairs."""
    n = dlow.shape[0]
    if n < 2:
        return np.zeros(1)
    off = dlow[np.triu_indices(n, 1)]
    return np.unique(np.concatenate(([0.0], off[off >= 0.0])))


def _as_certs(source) -> CertificateSet:
    if isinstance(source, CertificateSet):
        return source
    if isinstance(source, ObservationLedger):
        return source.snapshot()
    raise DomainError("expected a CertificateSet or ObservationLedger")


def greedy_partition(source, observed, k: int, feasibility: str = "degeneracy") -> EpochPartition:
    """Binary-search the certified level and color the cannot-link graph.

    ``feasibility="degeneracy"`` accepts the smallest level with
    ``degeneracy + 1 <= K``.  ``"coloring"`` additionally scans the lower
    levels in increasing order and accepts the first one where the
    smallest-last greedy coloring happens to use at most ``K`` colors; the
    returned level is never above the degeneracy answer.
    """
    if k < 1:
        raise DomainError("budget K must be at least 1")
    if feasibility not in ("degeneracy", "coloring"):
        raise DomainError(f"unknown feasibility rule {feasibility!r}")
    certs = _as_certs(source)
    observed = sorted(set(int(x) for x in observed))
    if not observed:
        return EpochPartition({}, k, 0.0, 0.0, [0] * k)
    dlow = certs.pair_low_matrix(observed)
    levels = candidate_levels(dlow)

    def analyse(alpha):
        g = CannotLinkGraph.at_level(observed, dlow, alpha)
        order, degen = degeneracy_order(g)
        return g, order, degen

    lo, hi = 0, len(levels) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if analyse(levels[mid])[2] + 1 <= k:
            hi = mid
        else:
            lo = mid + 1
    g, order, degen = analyse(levels[lo])
    colors = greedy_color(g, order)
    if feasibility == "coloring":
        for j in range(lo):
            g2, order2, degen2 = analyse(levels[j])
            colors2 = greedy_color(g2, order2)
            if max(colors2) + 1 <= k:
                g, degen, colors, lo = g2, degen2, colors2, j
                break
    alpha = float(levels[lo])
    assignment = {x: colors[i] for i, x in enumerate(observed)}
    out = EpochPartition(assignment, k, alpha, 0.0, [0] * k, edges=g.edge_count(), degeneracy=degen,
                         colors_used=max(colors) + 1, levels=len(levels))
    eps = 0.0
    for m, members in enumerate(out.clusters()):
        if members:
            r, a = certs.rho_high(members)
            eps = max(eps, r)
            out.actions[m] = a
    out.eps_cert = eps
    return out


@dataclass(frozen=True)
class GraphGapReport:
    alpha_e: float
    alpha_star: float
    degeneracy_at_star: int
    k: int
    zero_gap_regime: bool

    def __post_init__(self):
        if self.alpha_e < self.alpha_star:
            raise AssertionError(f"greedy level {self.alpha_e} below the graph optimum {self.alpha_star}")
        if self.zero_gap_regime and self.alpha_e != self.alpha_star:
            raise AssertionError("degeneracy fits the budget at the optimum but greedy missed it")


def graph_gap_report(source, observed, k: int, feasibility: str = "degeneracy") -> GraphGapReport:
    """Greedy level against the exact smallest level whose graph is ``K``-colorable."""
    certs = _as_certs(source)
    observed = sorted(set(int(x) for x in observed))
    if len(observed) > CHROMATIC_CAP:
        raise CapacityError(f"graph gap report needs at most {CHROMATIC_CAP} contexts, got {len(observed)}")
    ep = greedy_partition(certs, observed, k, feasibility)
    dlow = certs.pair_low_matrix(observed)
    star = None
    for alpha in candidate_levels(dlow):
        g = CannotLinkGraph.at_level(observed, dlow, alpha)
        if chromatic_number(g) <= k:
            star = float(alpha)
            break
    g_star = CannotLinkGraph.at_level(observed, dlow, star)
    degen_star = degeneracy_order(g_star)[1]
    return GraphGapReport(ep.alpha, star, degen_star, k, degen_star + 1 <= k)

