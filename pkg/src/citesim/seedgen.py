"""Seed graphs: Erdős–Rényi G(n, m) comparison graphs (loaders live in tsvio)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distributions import ER_EDGES, ER_YEARS, SEED_FITNESS, FitnessLaw, RngStream, sample_fitness
from .graph import TemporalDiGraph
from .tsvio import load_seed

__all__ = ["ErSpec", "er_edges", "gen_erdos_renyi_gnm", "load_seed"]


@dataclass(frozen=True, eq=False)
class ErSpec:
    """G(n, m) parameters.

    Node years are either a permutation of ``years`` (one entry per node,
    e.g. an empirical node list's year column) or uniform on ``year_range``.
    """

    n: int
    m: int
    directed: bool = True
    years: np.ndarray | None = None
    year_range: tuple[int, int] = (1950, 1982)

    def __post_init__(self):
        if self.n < 1 or self.m < 0:
            raise ValueError(f"need n >= 1 and m >= 0, got n={self.n}, m={self.m}")
        if self.m > self.max_edges:
            raise ValueError(f"m={self.m} exceeds the {self.max_edges} possible edges on {self.n} nodes")
        if self.years is not None and len(self.years) != self.n:
            raise ValueError(f"year column has {len(self.years)} entries for {self.n} nodes")
        lo, hi = self.year_range
        if lo > hi:
            raise ValueError("year_range must satisfy lo <= hi")

    @property
    def max_edges(self) -> int:
        pairs = self.n * (self.n - 1)
        return pairs if self.directed else pairs // 2


def _decode_directed(slots: np.ndarray, n: int):
    i = slots // (n - 1)
    j = slots % (n - 1)
    return i, j + (j >= i)


def _decode_undirected(slots: np.ndarray, n: int):
    # row i holds pairs (i, i+1..n-1); offsets[i] = first slot of row i
    rows = np.arange(n, dtype=np.int64)
    offsets = rows * (2 * n - rows - 1) // 2
    i = np.searchsorted(offsets, slots, side="right") - 1
    return i, slots - offsets[i] + i + 1


def er_edges(spec: ErSpec, rng) -> np.ndarray:
    """``m`` distinct pairs drawn uniformly, as an ``(m, 2)`` array sorted by row."""
    if spec.m == 0:
        return np.empty((0, 2), dtype=np.int64)
    slots = rng.choice(spec.max_edges, size=spec.m, replace=False).astype(np.int64)
    if spec.directed:
        i, j = _decode_directed(slots, spec.n)
    else:
        i, j = _decode_undirected(slots, spec.n)
        flip = rng.integers(0, 2, size=spec.m).astype(bool)
        i, j = np.where(flip, j, i), np.where(flip, i, j)
    e = np.column_stack([i, j]).astype(np.int64)
    return e[np.lexsort((e[:, 1], e[:, 0]))]


def gen_erdos_renyi_gnm(spec: ErSpec, master_seed: int = 0, law: FitnessLaw | None = None) -> TemporalDiGraph:
    root = RngStream(master_seed)
    edges = er_edges(spec, root.child(ER_EDGES).generator())
    g_years = root.child(ER_YEARS).generator()
    if spec.years is not None:
        years = g_years.permutation(np.asarray(spec.years, dtype=np.int64))
    else:
        lo, hi = spec.year_range
        years = g_years.integers(lo, hi + 1, size=spec.n)
    fitness = sample_fitness(root.child(SEED_FITNESS).generator(), law or FitnessLaw(), size=spec.n)
    graph = TemporalDiGraph()
    graph.add_seed_nodes(years, fitness)
    graph.add_seed_edges(edges[:, 0], edges[:, 1])
    return graph
