"""Append-only temporal citation digraph with per-year snapshots."""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .distributions import Phenotype

# year recorded on edges that came with the seed graph
SEED_EDGE_YEAR = -1

NEIGHBORHOOD_MODES = ("union", "out", "in")


class GraphError(ValueError):
    pass


class NodeKind(enum.IntEnum):
    SEED = 0
    AGENT = 1


@dataclass(frozen=True)
class NodeRecord:
    id: int
    pub_year: int
    fitness: int
    kind: NodeKind = NodeKind.AGENT
    phenotype: Phenotype | None = None
    out_quota: int = 0

    def __post_init__(self):
        if self.fitness < 1:
            raise GraphError(f"node {self.id}: fitness must be >= 1, got {self.fitness}")
        if self.kind == NodeKind.SEED:
            if self.phenotype is not None or self.out_quota != 0:
                raise GraphError(f"seed node {self.id} cannot carry a phenotype or quota")
        elif self.phenotype is None or self.out_quota < 1:
            raise GraphError(f"agent {self.id} needs a phenotype and out_quota >= 1")


def _csr(rows: np.ndarray, cols: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    order = np.lexsort((cols, rows))
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=n), out=indptr[1:])
    return indptr, cols[order].astype(np.int64)


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class YearSnapshot:
    """Frozen view of the graph as of the last commit."""

    n_nodes: int
    n_edges: int
    in_degree: np.ndarray
    pub_year: np.ndarray
    fitness: np.ndarray
    kind: np.ndarray
    out_indptr: np.ndarray
    out_indices: np.ndarray
    in_indptr: np.ndarray
    in_indices: np.ndarray
    year_counts: dict

    def neighborhood(self, v: int, mode: str = "union") -> np.ndarray:
        if not 0 <= v < self.n_nodes:
            raise GraphError(f"unknown node {v}")
        outs = self.out_indices[self.out_indptr[v] : self.out_indptr[v + 1]]
        ins = self.in_indices[self.in_indptr[v] : self.in_indptr[v + 1]]
        if mode == "out":
            nb = outs
        elif mode == "in":
            nb = ins
        elif mode == "union":
            nb = np.union1d(outs, ins)
        else:
            raise ValueError(f"neighborhood mode must be one of {NEIGHBORHOOD_MODES}")
        return nb[nb != v]

    @cached_property
    def agent_ids(self) -> np.ndarray:
        return np.flatnonzero(self.kind == NodeKind.AGENT)


class TemporalDiGraph:
    """Directed citation graph. Nodes and edges are only ever appended.

    Node ids are dense (``0..n-1``) in creation order; ``ext_id`` keeps the
    ids used in input/output files.
    """

    def __init__(self):
        self.ext_id = np.empty(0, dtype=np.int64)
        self.pub_year = np.empty(0, dtype=np.int64)
        self.fitness = np.empty(0, dtype=np.int64)
        self.kind = np.empty(0, dtype=np.int8)
        self.out_quota = np.empty(0, dtype=np.int64)
        self.phenotypes = np.empty((0, 4), dtype=np.float64)  # pw, rw, fw, alpha
        self.src = np.empty(0, dtype=np.int64)
        self.dst = np.empty(0, dtype=np.int64)
        self.edge_year = np.empty(0, dtype=np.int64)
        self._in_degree = np.empty(0, dtype=np.int64)
        self._edge_keys = np.empty(0, dtype=np.int64)  # sorted src<<32|dst
        self.year_counts: Counter = Counter()
        self._adj = None
        self._ext_index = None

    # -- sizes and lookups --------------------------------------------------

    def node_count(self) -> int:
        return int(self.pub_year.size)

    def edge_count(self) -> int:
        return int(self.src.size)

    def _check(self, v) -> int:
        v = int(v)
        if not 0 <= v < self.node_count():
            raise GraphError(f"unknown node {v}")
        return v

    def in_degree(self, v) -> int:
        return int(self._in_degree[self._check(v)])

    @property
    def in_degrees(self) -> np.ndarray:
        return self._in_degree

    def out_degrees(self) -> np.ndarray:
        return np.bincount(self.src, minlength=self.node_count()).astype(np.int64)

    def recount_in_degree(self) -> np.ndarray:
        return np.bincount(self.dst, minlength=self.node_count()).astype(np.int64)

    def record(self, v) -> NodeRecord:
        v = self._check(v)
        kind = NodeKind(int(self.kind[v]))
        pheno = None
        if kind == NodeKind.AGENT:
            pw, rw, fw, alpha = (float(x) for x in self.phenotypes[v])
            pheno = Phenotype(pw, rw, fw, alpha)
        return NodeRecord(v, int(self.pub_year[v]), int(self.fitness[v]), kind, pheno, int(self.out_quota[v]))

    def dense_id(self, ext) -> int:
        if self._ext_index is None:
            self._ext_index = {int(e): i for i, e in enumerate(self.ext_id)}
        try:
            return self._ext_index[int(ext)]
        except KeyError:
            raise GraphError(f"unknown external node id {ext}") from None

    def next_ext_id(self) -> int:
        return int(self.ext_id.max()) + 1 if self.ext_id.size else 0

    # -- mutation -----------------------------------------------------------

    def _append_nodes(self, years, fitness, kind, out_quota, phenotypes, ext_ids) -> None:
        years = np.asarray(years, dtype=np.int64)
        fitness = np.asarray(fitness, dtype=np.int64)
        if np.any(fitness < 1):
            raise GraphError("fitness must be >= 1")
        ext_ids = np.asarray(ext_ids, dtype=np.int64)
        if np.unique(ext_ids).size != ext_ids.size or (
            self.ext_id.size and np.isin(ext_ids, self.ext_id).any()
        ):
            raise GraphError("duplicate external node id")
        k = years.size
        self.ext_id = np.concatenate([self.ext_id, ext_ids])
        self.pub_year = np.concatenate([self.pub_year, years])
        self.fitness = np.concatenate([self.fitness, fitness])
        kinds = np.broadcast_to(np.asarray(kind, dtype=np.int8), (k,))
        self.kind = np.concatenate([self.kind, kinds])
        self.out_quota = np.concatenate([self.out_quota, np.asarray(out_quota, dtype=np.int64)])
        self.phenotypes = np.concatenate([self.phenotypes, np.asarray(phenotypes, dtype=np.float64).reshape(k, 4)])
        self._in_degree = np.concatenate([self._in_degree, np.zeros(k, dtype=np.int64)])
        self.year_counts.update(years.tolist())
        self._adj = None
        self._ext_index = None

    def add_seed_nodes(self, years, fitness, ext_ids=None) -> None:
        """Bulk-append seed nodes (years may differ)."""
        years = np.asarray(years, dtype=np.int64)
        k = years.size
        if ext_ids is None:
            start = self.next_ext_id()
            ext_ids = np.arange(start, start + k, dtype=np.int64)
        self._append_nodes(
            years, fitness, NodeKind.SEED, np.zeros(k, np.int64), np.full((k, 4), np.nan), ext_ids
        )

    def add_nodes_batch(self, records: list[NodeRecord]) -> None:
        """Append one year's worth of nodes; ids must continue the dense range."""
        if not records:
            return
        ids = [r.id for r in records]
        if len(set(ids)) != len(ids):
            raise GraphError("duplicate node id in batch")
        n = self.node_count()
        if ids != list(range(n, n + len(ids))):
            raise GraphError(f"batch ids must be the contiguous block {n}..{n + len(ids) - 1}")
        years = {r.pub_year for r in records}
        if len(years) != 1:
            raise GraphError(f"batch mixes publication years {sorted(years)}")
        kinds = {r.kind for r in records}
        if len(kinds) != 1:
            raise GraphError("batch mixes seeds and agents")
        kind = kinds.pop()
        ph = np.array(
            [
                (r.phenotype.pw, r.phenotype.rw, r.phenotype.fw, r.phenotype.alpha)
                if r.phenotype is not None
                else (np.nan,) * 4
                for r in records
            ]
        )
        start = self.next_ext_id()
        self._append_nodes(
            [r.pub_year for r in records],
            [r.fitness for r in records],
            kind,
            [r.out_quota for r in records],
            ph,
            np.arange(start, start + len(records), dtype=np.int64),
        )

    def _append_edges(self, src, dst, year) -> None:
        src = np.asarray(src, dtype=np.int64)
        dst = np.asarray(dst, dtype=np.int64)
        year = np.broadcast_to(np.asarray(year, dtype=np.int64), src.shape)
        if src.size == 0:
            return
        n = self.node_count()
        bad = (src < 0) | (src >= n) | (dst < 0) | (dst >= n)
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            raise GraphError(f"edge {int(src[i])}->{int(dst[i])} has an unknown endpoint")
        loops = src == dst
        if loops.any():
            i = int(np.flatnonzero(loops)[0])
            raise GraphError(f"self-loop on node {int(src[i])}")
        keys = (src << 32) | dst
        uniq, counts = np.unique(keys, return_counts=True)
        if uniq.size != keys.size:
            k = int(uniq[counts > 1][0])
            raise GraphError(f"duplicate edge {k >> 32}->{k & 0xFFFFFFFF} in batch")
        if self._edge_keys.size:
            pos = np.searchsorted(self._edge_keys, uniq)
            hit = (pos < self._edge_keys.size) & (self._edge_keys[np.minimum(pos, self._edge_keys.size - 1)] == uniq)
            if hit.any():
                k = int(uniq[hit][0])
                raise GraphError(f"edge {k >> 32}->{k & 0xFFFFFFFF} already exists")
            self._edge_keys = np.union1d(self._edge_keys, uniq)
        else:
            self._edge_keys = uniq
        self.src = np.concatenate([self.src, src])
        self.dst = np.concatenate([self.dst, dst])
        self.edge_year = np.concatenate([self.edge_year, year])
        self._in_degree += np.bincount(dst, minlength=n)
        self._adj = None

    def add_seed_edges(self, src, dst) -> None:
        self._append_edges(src, dst, SEED_EDGE_YEAR)

    def commit_edges_batch(self, edges) -> None:
        """Atomically add simulation edges ``(source, target, year)``.

        Sources must be agents and the edge year must not precede the
        source's publication year. Nothing is applied if any edge fails.
        """
        arr = np.asarray(edges, dtype=np.int64).reshape(-1, 3)
        if arr.size == 0:
            return
        src, dst, year = arr[:, 0], arr[:, 1], arr[:, 2]
        n = self.node_count()
        ok = (src >= 0) & (src < n)
        if ok.all():
            if np.any(self.kind[src] != NodeKind.AGENT):
                i = int(np.flatnonzero(self.kind[src] != NodeKind.AGENT)[0])
                raise GraphError(f"seed node {int(src[i])} cannot cite")
            if np.any(year < self.pub_year[src]):
                raise GraphError("edge year precedes its source's publication year")
        self._append_edges(src, dst, year)

    # -- views --------------------------------------------------------------

    def _adjacency(self):
        if self._adj is None:
            n = self.node_count()
            self._adj = (_csr(self.src, self.dst, n), _csr(self.dst, self.src, n))
        return self._adj

    def neighborhood_1hop(self, v, mode: str = "union") -> set[int]:
        v = self._check(v)
        return {int(x) for x in self.snapshot_view().neighborhood(v, mode)}

    def snapshot_view(self) -> YearSnapshot:
        """Snapshot sharing arrays with the graph (valid until the next commit)."""
        (oi, ox), (ii, ix) = self._adjacency()
        return YearSnapshot(
            self.node_count(), self.edge_count(), self._in_degree, self.pub_year, self.fitness,
            self.kind, oi, ox, ii, ix, dict(self.year_counts),
        )

    def snapshot(self) -> YearSnapshot:
        """Immutable copy of the current state."""
        (oi, ox), (ii, ix) = self._adjacency()
        return YearSnapshot(
            self.node_count(),
            self.edge_count(),
            _readonly(self._in_degree),
            _readonly(self.pub_year),
            _readonly(self.fitness),
            _readonly(self.kind),
            _readonly(oi),
            _readonly(ox),
            _readonly(ii),
            _readonly(ix),
            dict(self.year_counts),
        )

    def copy(self) -> TemporalDiGraph:
        g = TemporalDiGraph()
        for name in (
            "ext_id", "pub_year", "fitness", "kind", "out_quota", "phenotypes",
            "src", "dst", "edge_year", "_in_degree", "_edge_keys",
        ):
            setattr(g, name, getattr(self, name).copy())
        g.year_counts = Counter(self.year_counts)
        return g

    def undirected_csr(self) -> tuple[np.ndarray, np.ndarray]:
        """Simple undirected projection (no loops, no multi-edges), sorted rows."""
        n = self.node_count()
        a = np.minimum(self.src, self.dst)
        b = np.maximum(self.src, self.dst)
        keys = np.unique((a << 32) | b)
        a, b = keys >> 32, keys & 0xFFFFFFFF
        return _csr(np.concatenate([a, b]), np.concatenate([b, a]), n)

    @classmethod
    def from_edges(cls, n: int, edges, years=None, fitness=None) -> TemporalDiGraph:
        """Seed-only graph on ``n`` nodes, handy for analysis and tests."""
        g = cls()
        g.add_seed_nodes(
            np.zeros(n, np.int64) if years is None else years,
            np.ones(n, np.int64) if fitness is None else fitness,
        )
        e = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
        g.add_seed_edges(e[:, 0], e[:, 1])
        return g

    def same_as(self, other: TemporalDiGraph) -> bool:
        names = ("ext_id", "pub_year", "fitness", "kind", "out_quota", "src", "dst", "edge_year")
        return all(np.array_equal(getattr(self, k), getattr(other, k)) for k in names) and np.array_equal(
            self.phenotypes, other.phenotypes, equal_nan=True
        )
