"""Post-run statistics: clustering, in-degree quantiles, fitness groups, IKC."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse, stats
from scipy.sparse import csgraph

from . import kernels
from .graph import NodeKind, TemporalDiGraph

QUANTILES = {"min": 0.0, "median": 0.5, "q0.75": 0.75, "q0.90": 0.90, "q0.99": 0.99, "max": 1.0}
SUBSETS = ("all", "agents", "exclude_zero", "agents_exclude_zero")

# Right-closed groups: f1 = [1, 10], f2 = (10, 100], ..., f6 = (1e5, 1e6].
FITNESS_GROUPS = ("f1", "f2", "f3", "f4", "f5", "f6")
FITNESS_EDGES = (10, 100, 1_000, 10_000, 100_000)


def _undirected(g):
    if isinstance(g, TemporalDiGraph):
        return g.undirected_csr()
    return g


def triangles_and_degrees(g):
    indptr, indices = _undirected(g)
    return kernels.triangle_counts(indptr, indices), np.diff(indptr)


def global_clustering_coefficient(g) -> float:
    """Transitivity ``3 * triangles / wedges`` of the undirected projection."""
    t, d = triangles_and_degrees(g)
    wedges = float(np.sum(d * (d - 1) / 2.0))
    if wedges == 0:
        return 0.0
    # each triangle is counted at its three corners
    return float(t.sum()) / wedges


def local_clustering(g) -> np.ndarray:
    t, d = triangles_and_degrees(g)
    out = np.zeros(d.size, dtype=np.float64)
    ok = d >= 2
    out[ok] = 2.0 * t[ok] / (d[ok] * (d[ok] - 1.0))
    return out


def avg_local_clustering_coefficient(g) -> float:
    """Mean local coefficient; nodes of degree < 2 count as 0."""
    c = local_clustering(g)
    if c.size == 0:
        raise ValueError("clustering of an empty graph is undefined")
    return float(c.mean())


# --- quantiles ---------------------------------------------------------------


def nearest_rank(values, p: float):
    """Nearest-rank quantile: the ``ceil(p * n)``-th smallest value (1-based)."""
    v = np.sort(np.asarray(values))
    if v.size == 0:
        raise ValueError("quantile of an empty set")
    rank = max(1, math.ceil(p * v.size - 1e-9))
    return v[min(rank, v.size) - 1]


@dataclass(frozen=True)
class DegreeStats:
    min: int
    median: int
    q75: int
    q90: int
    q99: int
    max: int

    @classmethod
    def of(cls, values) -> DegreeStats:
        v = np.sort(np.asarray(values, dtype=np.int64))
        if v.size == 0:
            raise ValueError("degree statistics of an empty subset")
        return cls(*(int(nearest_rank(v, p)) for p in QUANTILES.values()))

    def as_dict(self) -> dict:
        return dict(zip(QUANTILES, (self.min, self.median, self.q75, self.q90, self.q99, self.max)))


def _subset_mask(g: TemporalDiGraph, subset: str) -> np.ndarray:
    if subset not in SUBSETS:
        raise ValueError(f"subset must be one of {SUBSETS}")
    mask = np.ones(g.node_count(), dtype=bool)
    if subset.startswith("agents"):
        mask &= g.kind == NodeKind.AGENT
    if subset.endswith("exclude_zero"):
        mask &= g.in_degrees > 0
    return mask


def in_degree_stats(g: TemporalDiGraph, subset: str = "all") -> DegreeStats:
    return DegreeStats.of(g.in_degrees[_subset_mask(g, subset)])


# --- fitness groups ----------------------------------------------------------


def fitness_group(fitness) -> np.ndarray:
    """Group index 0..5 (f1..f6); values above 1e6 land in f6."""
    return np.searchsorted(np.asarray(FITNESS_EDGES), np.asarray(fitness), side="left")


def fitness_group_summary(g: TemporalDiGraph, subset: str = "all") -> dict:
    """Per-group count, population share and in-degree statistics."""
    mask = _subset_mask(g, subset)
    fit = g.fitness[mask]
    deg = g.in_degrees[mask]
    grp = fitness_group(fit)
    total = int(mask.sum())
    out = {}
    for i, label in enumerate(FITNESS_GROUPS):
        sel = grp == i
        n = int(sel.sum())
        out[label] = {
            "count": n,
            "share": n / total if total else 0.0,
            "in_degree": DegreeStats.of(deg[sel]).as_dict() if n else None,
        }
    return out


def group_shares(fitness) -> np.ndarray:
    grp = fitness_group(fitness)
    return np.bincount(grp, minlength=len(FITNESS_GROUPS)) / max(len(grp), 1)


# --- IKC ---------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class IkcResult:
    clusters: list  # (members, k) with members a sorted int array
    n_nodes: int

    @property
    def cluster_sizes(self) -> list[int]:
        return [int(m.size) for m, _ in self.clusters]

    @property
    def cluster_count(self) -> int:
        return len(self.clusters)

    @property
    def node_coverage(self) -> float:
        """Percent of nodes in clusters of size >= 2."""
        covered = sum(s for s in self.cluster_sizes if s >= 2)
        return 100.0 * covered / self.n_nodes if self.n_nodes else 0.0

    def summary(self) -> dict:
        sizes = self.cluster_sizes
        ks = [k for _, k in self.clusters]
        return {
            "nc": self.node_coverage,
            "cc": self.cluster_count,
            "cs": float(np.median(sizes)) if sizes else 0.0,
            "k": float(np.median(ks)) if ks else 0.0,
        }


def _subgraph_csr(indptr, indices, keep: np.ndarray):
    """Induced subgraph on ``keep`` (mask), relabelled densely."""
    n = indptr.size - 1
    rows = np.repeat(np.arange(n), np.diff(indptr))
    sel = keep[rows] & keep[indices]
    new_id = np.cumsum(keep) - 1
    r, c = new_id[rows[sel]], new_id[indices[sel]]
    m = int(keep.sum())
    ip = np.zeros(m + 1, dtype=np.int64)
    np.cumsum(np.bincount(r, minlength=m), out=ip[1:])
    return ip, c.astype(np.int64)


def ikc_cluster(g, k_min: int = 10) -> IkcResult:
    """Iterative k-core clustering.

    Take the largest k with a non-empty k-core in what is left of the
    undirected projection, make each connected component of that core a
    cluster, remove those nodes and repeat while k >= ``k_min``.
    """
    if k_min < 1:
        raise ValueError("k_min must be >= 1")
    indptr, indices = _undirected(g)
    n = indptr.size - 1
    alive = np.ones(n, dtype=bool)
    clusters = []
    while alive.any():
        ip, ix = _subgraph_csr(indptr, indices, alive)
        labels = np.flatnonzero(alive)
        core = kernels.core_numbers(ip, ix)
        k = int(core.max()) if core.size else 0
        if k < k_min or k == 0:
            break
        in_core = core >= k
        cip, cix = _subgraph_csr(ip, ix, in_core)
        m = int(in_core.sum())
        adj = sparse.csr_matrix((np.ones(cix.size), cix, cip), shape=(m, m))
        ncomp, comp = csgraph.connected_components(adj, directed=False)
        members = labels[np.flatnonzero(in_core)]
        order = np.argsort(comp, kind="stable")
        cuts = np.flatnonzero(np.diff(comp[order])) + 1
        clusters += [(np.sort(part), k) for part in np.split(members[order], cuts)]
        alive[members] = False
    return IkcResult(clusters, n)


# --- out-degree effects ------------------------------------------------------


def agent_degree_pairs(g: TemporalDiGraph):
    agents = np.flatnonzero(g.kind == NodeKind.AGENT)
    return g.out_degrees()[agents], g.in_degrees[agents]


def outdegree_indegree_spearman(g: TemporalDiGraph):
    """Spearman rho and p-value between agent out-degree and in-degree."""
    out, inn = agent_degree_pairs(g)
    res = stats.spearmanr(out, inn)
    return float(res.statistic), float(res.pvalue)


def percentiles_by_outdegree(out_deg, in_deg, bins=None) -> list[dict]:
    """In-degree percentiles per out-degree bin (plot-ready rows)."""
    out_deg = np.asarray(out_deg)
    in_deg = np.asarray(in_deg)
    if bins is None:
        bins = np.unique(out_deg)
        groups = [(int(b), int(b), out_deg == b) for b in bins]
    else:
        edges = np.asarray(bins)
        groups = [(int(lo), int(hi) - 1, (out_deg >= lo) & (out_deg < hi)) for lo, hi in zip(edges[:-1], edges[1:])]
    rows = []
    for lo, hi, sel in groups:
        if not sel.any():
            continue
        st = DegreeStats.of(in_deg[sel])
        rows.append({"out_lo": lo, "out_hi": hi, "n": int(sel.sum()), "median": st.median,
                     "q0.75": st.q75, "q0.90": st.q90, "q0.99": st.q99})
    return rows


def report(g: TemporalDiGraph, k_min: int = 10) -> dict:
    """Everything the ``metrics`` subcommand prints."""
    out = {
        "nodes": g.node_count(),
        "edges": g.edge_count(),
        "gcc": global_clustering_coefficient(g),
        "alcc": avg_local_clustering_coefficient(g) if g.node_count() else 0.0,
    }
    for subset in ("all", "exclude_zero", "agents"):
        try:
            out[f"in_degree.{subset}"] = in_degree_stats(g, subset).as_dict()
        except ValueError:
            out[f"in_degree.{subset}"] = None
    out["fitness_groups"] = fitness_group_summary(g)
    out["ikc"] = ikc_cluster(g, k_min).summary()
    if np.any(g.kind == NodeKind.AGENT):
        rho, p = outdegree_indegree_spearman(g)
        out["spearman_out_in"] = {"rho": rho, "p": p}
    return out
