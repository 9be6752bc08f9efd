"""Yearly simulation loop: agent batches, generator cloning, locality-split
citation quotas and batch commits."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from . import kernels
from .distributions import (
    AGENT_INIT,
    CITE,
    SAME_YEAR,
    FitnessLaw,
    OutDegreeDist,
    PhenotypeMode,
    RecencyTable,
    RngStream,
    sample_fitness,
    sample_phenotype,
)
from .graph import NEIGHBORHOOD_MODES, NodeKind, NodeRecord, TemporalDiGraph, YearSnapshot
from .sampling import WeightedPool, ares_select
from .scoring import ScoreParams, combine, score_fitness_raw, score_pref_raw, score_recency_raw

log = logging.getLogger(__name__)

SUPERSTAR_MIN_FITNESS = 10_000
DEFAULT_SUPERSTARS = ((1, 10_000), (1, 100_000), (1, 1_000_000))
GROWTH_ROUNDING = ("half_up", "ceil")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SimConfig:
    """Everything a run depends on besides the seed graph.

    ``superstars`` holds ``(year, fitness)`` pairs where year 1 is the first
    simulated year.
    """

    recency_table: RecencyTable | None = None
    growth_rate: float = 0.03
    years: int = 30
    same_year_percentage: float = 0.0
    same_year_consumes_quota: bool = True
    background: PhenotypeMode = field(default_factory=PhenotypeMode)
    out_degree: OutDegreeDist = field(default_factory=OutDegreeDist)
    fitness_law: FitnessLaw = field(default_factory=FitnessLaw)
    gamma: float = 3.0
    c: float = 1.0
    recency_multiplicity: bool = True
    superstars: tuple[tuple[int, int], ...] = DEFAULT_SUPERSTARS
    master_seed: int = 0
    threads: int = 1
    neighborhood: str = "union"
    generator_pool: str = "all"
    always_cite_generator: bool = True
    growth_rounding: str = "half_up"
    start_year: int | None = None

    def validate(self) -> None:
        if self.recency_table is None:
            raise ConfigError("missing recency table (config key 'inputs.recency')")
        if not self.growth_rate > 0:
            raise ConfigError(f"growth_rate must be > 0, got {self.growth_rate}")
        if self.years < 0:
            raise ConfigError(f"years must be >= 0, got {self.years}")
        if self.years > self.recency_table.max_age:
            raise ConfigError(
                f"recency table covers ages 0..{self.recency_table.max_age}, too short for {self.years} years"
            )
        if not 0.0 <= self.same_year_percentage <= 1.0:
            raise ConfigError("same_year_percentage must lie in [0, 1]")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if self.neighborhood not in NEIGHBORHOOD_MODES:
            raise ConfigError(f"neighborhood must be one of {NEIGHBORHOOD_MODES}")
        if self.generator_pool not in ("all", "agents"):
            raise ConfigError("generator_pool must be 'all' or 'agents'")
        if self.growth_rounding not in GROWTH_ROUNDING:
            raise ConfigError(f"growth_rounding must be one of {GROWTH_ROUNDING}")
        for year, fit in self.superstars:
            if fit < SUPERSTAR_MIN_FITNESS:
                raise ConfigError(f"superstar fitness {fit} below {SUPERSTAR_MIN_FITNESS}")
            # a zero-year run plants nothing, so the schedule is moot
            if self.years > 0 and not 1 <= year <= self.years:
                raise ConfigError(f"superstar year {year} outside the {self.years}-year horizon")


class QuotaSplit(NamedTuple):
    generator: int
    intra: int
    extra: int

    @property
    def total(self) -> int:
        return self.generator + self.intra + self.extra


@dataclass
class RunOutput:
    graph: TemporalDiGraph
    events: list
    n_seed: int
    start_year: int

    @property
    def agent_ids(self) -> np.ndarray:
        return np.arange(self.n_seed, self.graph.node_count())


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def agents_for_year(current_size: int, growth_rate: float, rounding: str = "half_up") -> int:
    """New agents in a year: ``growth_rate * current_size`` rounded, at least 1."""
    x = growth_rate * current_size
    n = math.ceil(x) if rounding == "ceil" else round_half_up(x)
    return max(1, n)


def growth_trajectory(n0: int, growth_rate: float, years: int, rounding: str = "half_up") -> list[int]:
    sizes = [n0]
    for _ in range(years):
        sizes.append(sizes[-1] + agents_for_year(sizes[-1], growth_rate, rounding))
    return sizes


def split_quota(out_quota: int, alpha: float, neighborhood_size: int, cite_generator: bool = True) -> QuotaSplit:
    """Divide a reference quota between generator, neighborhood and the rest.

    ``round(alpha * quota)`` slots go to the generator's neighborhood, one of
    them being the generator itself. When that rounds to zero the generator
    slot comes out of the outside budget instead. Slots the neighborhood
    cannot fill move to the outside budget.
    """
    if out_quota < 1:
        raise ValueError(f"out_quota must be >= 1, got {out_quota}")
    intra_total = int(alpha * out_quota + 0.5)  # round half up; both factors are >= 0
    if intra_total >= 1:
        intra = intra_total - 1
        if intra > neighborhood_size:
            intra = neighborhood_size if neighborhood_size > 0 else 0
        return QuotaSplit(1, intra, out_quota - 1 - intra)
    gen = 1 if cite_generator else 0
    return QuotaSplit(gen, 0, out_quota - gen)


def select_generator(snapshot: YearSnapshot, rng, pool: str = "all") -> int:
    if snapshot.n_nodes == 0:
        raise ValueError("cannot pick a generator from an empty graph")
    if pool == "agents" and snapshot.agent_ids.size:
        ids = snapshot.agent_ids
        return int(ids[rng.integers(ids.size)])
    return int(rng.integers(snapshot.n_nodes))


@dataclass(frozen=True, eq=False)
class YearContext:
    """Per-year read-only state shared by every agent of the batch."""

    snapshot: YearSnapshot
    year: int
    config: SimConfig
    p_raw: np.ndarray
    r_raw: np.ndarray
    f_raw: np.ndarray

    @classmethod
    def build(cls, snapshot: YearSnapshot, config: SimConfig, year: int, f_raw=None) -> YearContext:
        params = score_params(config, year, snapshot.year_counts)
        if f_raw is None:
            f_raw = np.atleast_1d(score_fitness_raw(snapshot.fitness, params))
        return cls(
            snapshot,
            year,
            config,
            np.atleast_1d(score_pref_raw(snapshot.in_degree, params)),
            np.atleast_1d(score_recency_raw(snapshot.pub_year, params)),
            f_raw,
        )


def score_params(config: SimConfig, year: int, year_counts: dict) -> ScoreParams:
    return ScoreParams(
        current_year=year,
        recency_table=config.recency_table,
        year_counts=year_counts,
        gamma=config.gamma,
        c=config.c,
        recency_multiplicity=config.recency_multiplicity,
    )


@dataclass(frozen=True, eq=False)
class AgentCitations:
    agent: int
    generator: int
    split: QuotaSplit
    targets: np.ndarray  # generator, neighborhood picks and outside picks
    carryover: int = 0
    shortfall: int = 0
    degenerate: tuple[str, ...] = ()


def cite_for_agent(agent: NodeRecord, ctx: YearContext, rng, reserved: int = 0) -> AgentCitations:
    """Pick the generator and every snapshot target for one agent.

    ``reserved`` slots (same-year citations) are taken out of the outside
    budget first, then out of the neighborhood budget.
    """
    snap, cfg = ctx.snapshot, ctx.config
    ph = agent.phenotype
    gen = select_generator(snap, rng, cfg.generator_pool)
    nb = snap.neighborhood(gen, cfg.neighborhood)
    split = split_quota(agent.out_quota, ph.alpha, nb.size, cfg.always_cite_generator)
    wanted_intra = max(round_half_up(ph.alpha * agent.out_quota) - split.generator, 0) if split.generator else 0
    carry = max(wanted_intra - split.intra, 0)
    intra_k, extra_k = split.intra, split.extra
    take = min(reserved, extra_k)
    extra_k -= take
    intra_k -= min(reserved - take, intra_k)

    degenerate = []
    picked = [np.array([gen], dtype=np.int64)] if split.generator else []
    if nb.size:
        u = rng.random(nb.size)
        if intra_k > 0:
            w, degen = combine(ctx.p_raw[nb], ctx.r_raw[nb], ctx.f_raw[nb], ph)
            if degen:
                degenerate.append("intra")
            chosen = ares_select(WeightedPool.from_weights(nb, w), intra_k, u[w > 0])
            extra_k += intra_k - chosen.size
            carry += intra_k - chosen.size
            picked.append(chosen)

    shortfall = 0
    if extra_k > 0:
        excluded = np.zeros(snap.n_nodes, dtype=bool)
        excluded[nb] = True
        excluded[gen] = True
        u = rng.random(snap.n_nodes)
        chosen, _, degen = kernels.composite_topk(
            ctx.p_raw, ctx.r_raw, ctx.f_raw, excluded, ph.pw, ph.rw, ph.fw, u, extra_k
        )
        if degen:
            degenerate.append("extra")
        shortfall = extra_k - chosen.size
        picked.append(chosen)
    targets = np.concatenate(picked) if picked else np.empty(0, dtype=np.int64)
    return AgentCitations(agent.id, gen, split, targets, carry, shortfall, tuple(degenerate))


def same_year_citations(batch_ids, out_quotas, percentage: float, rng, consumes_quota: bool = True) -> np.ndarray:
    """Edges between agents of the same batch, as an ``(m, 2)`` array.

    ``round(percentage * batch)`` agents each cite one other batch member
    chosen uniformly. When the edge eats into the quota, agents whose whole
    quota is the generator slot are not eligible.
    """
    batch_ids = np.asarray(batch_ids, dtype=np.int64)
    n = batch_ids.size
    m = round_half_up(percentage * n)
    if n < 2 or m == 0:
        return np.empty((0, 2), dtype=np.int64)
    slots = np.arange(n)
    if consumes_quota:
        slots = slots[np.asarray(out_quotas) >= 2]
    m = min(m, slots.size)
    citers = np.sort(rng.choice(slots, size=m, replace=False))
    t = rng.integers(0, n - 1, size=m)
    t = t + (t >= citers)
    return np.column_stack([batch_ids[citers], batch_ids[t]])


def plant_superstars(config: SimConfig, year_index: int) -> list[int]:
    """Fitness values to plant in the given simulated year (1-based)."""
    if year_index < 1 or year_index > config.years:
        raise ConfigError(f"year {year_index} outside the {config.years}-year horizon")
    for y, fit in config.superstars:
        if fit < SUPERSTAR_MIN_FITNESS:
            raise ConfigError(f"superstar fitness {fit} below {SUPERSTAR_MIN_FITNESS}")
        if not 1 <= y <= config.years:
            raise ConfigError(f"superstar year {y} outside the {config.years}-year horizon")
    return [fit for y, fit in config.superstars if y == year_index]


def init_agents(first_id: int, n: int, year: int, config: SimConfig, superstar_fitness=()) -> list[NodeRecord]:
    root = RngStream(config.master_seed)
    records = []
    for i in range(n):
        aid = first_id + i
        g = root.child(AGENT_INIT, aid).generator()
        ph = sample_phenotype(g, config.background)
        quota = int(config.out_degree.sample(g))
        fit = sample_fitness(g, config.fitness_law)
        if i < len(superstar_fitness):
            fit = int(superstar_fitness[i])
        records.append(NodeRecord(aid, year, fit, NodeKind.AGENT, ph, quota))
    return records


def _cite_chunk(records, reserved, ctx, master_seed):
    root = RngStream(master_seed)
    return [cite_for_agent(r, ctx, root.child(CITE, r.id).generator(), reserved.get(r.id, 0)) for r in records]


def run_simulation(config: SimConfig, seed_graph: TemporalDiGraph, progress=None) -> RunOutput:
    """Grow ``seed_graph`` for ``config.years`` years. The input is not modified."""
    config.validate()
    if seed_graph.node_count() == 0:
        raise ConfigError("seed graph is empty")
    graph = seed_graph.copy()
    n_seed = graph.node_count()
    start = config.start_year if config.start_year is not None else int(graph.pub_year.max()) + 1
    sizes = growth_trajectory(n_seed, config.growth_rate, config.years, config.growth_rounding)
    for y, fit in config.superstars if config.years else ():
        batch = sizes[y] - sizes[y - 1]
        if sum(1 for yy, _ in config.superstars if yy == y) > batch:
            raise ConfigError(f"year {y} batch of {batch} agents cannot hold all its superstars")

    events = []
    root = RngStream(config.master_seed)
    params0 = score_params(config, start, {})
    f_raw = np.atleast_1d(score_fitness_raw(graph.fitness, params0))
    pool = ThreadPoolExecutor(config.threads) if config.threads > 1 else None
    try:
        for t in range(1, config.years + 1):
            year = start + t - 1
            snap = graph.snapshot()
            ctx = YearContext.build(snap, config, year, f_raw)
            n_new = agents_for_year(snap.n_nodes, config.growth_rate, config.growth_rounding)
            stars = plant_superstars(config, t)
            records = init_agents(snap.n_nodes, n_new, year, config, stars)
            graph.add_nodes_batch(records)

            same = same_year_citations(
                [r.id for r in records],
                [r.out_quota for r in records],
                config.same_year_percentage,
                root.child(SAME_YEAR, year).generator(),
                config.same_year_consumes_quota,
            )
            reserved = {int(s): 1 for s in same[:, 0]} if config.same_year_consumes_quota else {}

            if pool is None:
                results = _cite_chunk(records, reserved, ctx, config.master_seed)
            else:
                chunks = np.array_split(np.arange(len(records)), config.threads)
                futs = [
                    pool.submit(_cite_chunk, [records[i] for i in c], reserved, ctx, config.master_seed)
                    for c in chunks
                    if c.size
                ]
                results = [r for f in futs for r in f.result()]

            same_by_src = {}
            for s, d in same:
                same_by_src.setdefault(int(s), []).append(int(d))
            rows = []
            carry_agents = carry_slots = 0
            for res in results:
                tg = np.sort(np.concatenate([res.targets, np.asarray(same_by_src.get(res.agent, []), dtype=np.int64)]))
                rows.append(np.column_stack([np.full(tg.size, res.agent), tg, np.full(tg.size, year)]))
                if res.carryover:
                    carry_agents += 1
                    carry_slots += res.carryover
                if res.shortfall:
                    events.append({"event": "shortfall", "year": year, "agent": res.agent, "missing": res.shortfall})
                for where in res.degenerate:
                    events.append({"event": "degenerate_pool", "year": year, "agent": res.agent, "pool": where})
            edges = np.concatenate(rows) if rows else np.empty((0, 3), dtype=np.int64)
            graph.commit_edges_batch(edges)
            f_raw = np.concatenate([f_raw, np.atleast_1d(score_fitness_raw([r.fitness for r in records], params0))])

            events.append(
                {
                    "event": "year",
                    "year": year,
                    "step": t,
                    "agents": n_new,
                    "first_agent": records[0].id,
                    "edges": int(edges.shape[0]),
                    "same_year_edges": int(same.shape[0]),
                    "carryover_agents": carry_agents,
                    "carryover_slots": carry_slots,
                    "superstars": [int(x) for x in stars],
                    "nodes": graph.node_count(),
                }
            )
            log.info("year %d: %d agents, %d edges", year, n_new, edges.shape[0])
            if progress is not None:
                progress(t, config.years)
    finally:
        if pool is not None:
            pool.shutdown()
    return RunOutput(graph, events, n_seed, start)


def with_overrides(config: SimConfig, **kw) -> SimConfig:
    return replace(config, **kw)
