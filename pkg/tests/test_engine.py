import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from citesim.distributions import OutDegreeDist, Phenotype, PhenotypeMode, RngStream
from citesim.engine import (
    ConfigError,
    QuotaSplit,
    SimConfig,
    YearContext,
    agents_for_year,
    cite_for_agent,
    growth_trajectory,
    plant_superstars,
    run_simulation,
    same_year_citations,
    select_generator,
    split_quota,
)
from citesim.graph import NodeKind, NodeRecord, TemporalDiGraph

from conftest import flat_recency, static


def test_split_quota_examples():
    assert split_quota(30, 0.5, 14) == QuotaSplit(1, 14, 15)
    assert split_quota(30, 0.5, 500) == QuotaSplit(1, 14, 15)
    assert split_quota(20, 0.5, 4) == QuotaSplit(1, 4, 15)
    for nb in (0, 5, 100):
        assert split_quota(10, 0.0, nb) == QuotaSplit(1, 0, 9)
    assert split_quota(10, 0.0, 5, cite_generator=False) == QuotaSplit(0, 0, 10)
    assert split_quota(1, 1.0, 50) == QuotaSplit(1, 0, 0)
    with pytest.raises(ValueError):
        split_quota(0, 0.5, 3)


@settings(max_examples=300, deadline=None)
@given(st.integers(1, 249), st.floats(0, 1), st.integers(0, 300))
def test_split_quota_conserves(q, a, nb):
    s = split_quota(q, a, nb)
    assert s.total == q
    assert s.generator == 1 and 0 <= s.intra <= nb and s.extra >= 0


def test_agents_for_year_examples():
    assert agents_for_year(1000, 0.03) == 30
    assert agents_for_year(10, 0.03) == 1
    assert agents_for_year(50, 0.03) == 2  # 1.5 rounds up
    assert agents_for_year(10, 0.03, "ceil") == 1
    assert agents_for_year(1001, 0.03, "ceil") == 31


def test_growth_from_sj_size():
    final = growth_trajectory(491_532, 0.03, 30)[-1]
    assert abs(final - 1_193_102) / 1_193_102 < 0.001
    assert growth_trajectory(491_532, 0.03, 30, "ceil")[-1] == 1_193_102


def test_one_year_from_1000(recency):
    seed = TemporalDiGraph.from_edges(1000, [(i, i + 1) for i in range(999)], years=np.full(1000, 1980))
    cfg = SimConfig(recency_table=recency, years=1, superstars=(), out_degree=OutDegreeDist(kind="uniform", min=2, max=6))
    out = run_simulation(cfg, seed)
    assert out.graph.node_count() == 1030
    assert out.start_year == 1981


def test_zero_years_returns_seed(small_seed, small_config):
    from dataclasses import replace

    out = run_simulation(replace(small_config, years=0), small_seed)
    assert out.graph.same_as(small_seed)
    assert out.events == []


def test_run_invariants(small_seed, small_config):
    out = run_simulation(small_config, small_seed)
    g = out.graph
    sizes = growth_trajectory(small_seed.node_count(), 0.03, small_config.years)
    assert g.node_count() == sizes[-1]
    sim = g.edge_year >= 0
    # only agents cite, in their own publication year
    assert np.all(g.kind[g.src[sim]] == NodeKind.AGENT)
    assert np.array_equal(g.edge_year[sim], g.pub_year[g.src[sim]])
    # quota conservation (no shortfall expected on a 300-node pool)
    agents = out.agent_ids
    assert np.array_equal(g.out_degrees()[agents], g.out_quota[agents])
    assert not any(e["event"] == "shortfall" for e in out.events)
    assert np.array_equal(g.in_degrees, g.recount_in_degree())
    # seed input untouched
    assert small_seed.node_count() == 300
    years = [e for e in out.events if e["event"] == "year"]
    assert [e["nodes"] for e in years] == sizes[1:]


def test_agents_cite_existing_or_same_year_nodes_only(small_seed, small_config):
    from dataclasses import replace

    out = run_simulation(replace(small_config, same_year_percentage=0.5), small_seed)
    g = out.graph
    sim = g.edge_year >= 0
    assert np.all(g.pub_year[g.dst[sim]] <= g.edge_year[sim])
    same = sim & (g.pub_year[g.dst] == g.edge_year) & (g.kind[g.dst] == NodeKind.AGENT)
    assert same.sum() > 0
    agents = out.agent_ids
    assert np.array_equal(g.out_degrees()[agents], g.out_quota[agents])


def test_thread_count_does_not_change_output(small_seed, small_config):
    from dataclasses import replace

    a = run_simulation(small_config, small_seed).graph
    b = run_simulation(replace(small_config, threads=3), small_seed).graph
    assert a.same_as(b)


def test_seed_changes_output(small_seed, small_config):
    from dataclasses import replace

    a = run_simulation(small_config, small_seed).graph
    b = run_simulation(replace(small_config, master_seed=6), small_seed).graph
    assert not a.same_as(b)


def test_default_superstars_planted(small_seed, small_config):
    from citesim.engine import DEFAULT_SUPERSTARS
    from dataclasses import replace

    cfg = replace(small_config, superstars=DEFAULT_SUPERSTARS)
    assert plant_superstars(cfg, 1) == [10_000, 100_000, 1_000_000]
    assert plant_superstars(cfg, 2) == []
    out = run_simulation(cfg, small_seed)
    first = out.n_seed
    assert out.graph.fitness[first : first + 3].tolist() == [10_000, 100_000, 1_000_000]
    assert out.graph.pub_year[first] == out.start_year


def test_superstar_errors(recency):
    with pytest.raises(ConfigError):
        plant_superstars(SimConfig(recency_table=recency, years=3, superstars=((5, 10_000),)), 1)
    with pytest.raises(ConfigError):
        SimConfig(recency_table=recency, years=3, superstars=((1, 9_999),)).validate()
    with pytest.raises(ConfigError, match="inputs.recency"):
        SimConfig().validate()


def test_empty_superstars_baseline(small_config):
    assert plant_superstars(small_config, 1) == []


def _context(graph, cfg, year=2000):
    snap = graph.snapshot()
    return YearContext.build(snap, cfg, year)


def _agent(i, quota, ph, year=2000):
    return NodeRecord(i, year, 1, NodeKind.AGENT, ph, quota)


def test_quota_one_cites_only_generator():
    g = TemporalDiGraph.from_edges(6, [(0, 1), (1, 2)], years=np.full(6, 1999))
    cfg = SimConfig(recency_table=flat_recency(), years=1, superstars=())
    ctx = _context(g, cfg)
    for a in (0.0, 0.5, 1.0):
        res = cite_for_agent(_agent(6, 1, Phenotype(alpha=a)), ctx, np.random.default_rng(0))
        assert res.targets.tolist() == [res.generator]


def test_shortfall_when_pool_is_small():
    g = TemporalDiGraph.from_edges(4, [], years=np.full(4, 1999))
    cfg = SimConfig(recency_table=flat_recency(), years=1, superstars=())
    res = cite_for_agent(_agent(4, 10, Phenotype(alpha=0.0)), _context(g, cfg), np.random.default_rng(0))
    assert sorted(res.targets.tolist()) == [0, 1, 2, 3]
    assert res.shortfall == 6


def test_intra_carryover_goes_outside():
    # generator 0 has a single neighbor; alpha=1 wants 9 intra slots
    g = TemporalDiGraph.from_edges(30, [(1, 0)], years=np.full(30, 1999))
    g_fixed = g.copy()
    cfg = SimConfig(recency_table=flat_recency(), years=1, superstars=(), generator_pool="all")
    ctx = _context(g_fixed, cfg)
    rng = np.random.default_rng(0)
    for _ in range(20):
        res = cite_for_agent(_agent(30, 10, Phenotype(alpha=1.0)), ctx, rng)
        assert res.targets.size == 10 and np.unique(res.targets).size == 10
        if res.generator == 0:
            assert 1 in res.targets and res.carryover == 8


def test_fitness_superstar_dominates_extra_step():
    n = 200
    fit = np.ones(n, dtype=np.int64)
    fit[123] = 10**6
    g = TemporalDiGraph.from_edges(n, [], years=np.full(n, 1999), fitness=fit)
    cfg = SimConfig(recency_table=flat_recency(), years=1, superstars=())
    ctx = _context(g, cfg)
    ph = Phenotype(0.0, 0.0, 1.0, 0.0)
    hits = 0
    trials = 300
    for t in range(trials):
        res = cite_for_agent(_agent(n, 2, ph), ctx, RngStream(t).generator())
        extra = set(res.targets.tolist()) - {res.generator}
        hits += 123 in extra or res.generator == 123
    assert hits / trials > 0.99


def test_select_generator_uniform_and_snapshot_only():
    g = TemporalDiGraph.from_edges(10, [], years=np.full(10, 1999))
    snap = g.snapshot()
    rng = np.random.default_rng(0)
    draws = np.array([select_generator(snap, rng) for _ in range(100_000)])
    assert draws.max() < 10
    assert stats.chisquare(np.bincount(draws, minlength=10)).pvalue > 0.001
    one = TemporalDiGraph.from_edges(1, []).snapshot()
    assert select_generator(one, rng) == 0
    with pytest.raises(ValueError):
        select_generator(TemporalDiGraph().snapshot(), rng)


def test_same_year_examples():
    rng = np.random.default_rng(0)
    assert same_year_citations([5, 6, 7], [3, 3, 3], 0.0, rng).shape == (0, 2)
    e = same_year_citations([5, 6], [3, 3], 1.0, rng)
    assert sorted(map(tuple, e.tolist())) == [(5, 6), (6, 5)]
    assert same_year_citations([5], [3], 1.0, rng).shape == (0, 2)
    # agents with quota 1 only cite their generator
    e = same_year_citations([5, 6, 7], [1, 1, 4], 1.0, rng)
    assert e[:, 0].tolist() == [7]


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 40), st.floats(0, 1), st.integers(0, 2**32))
def test_same_year_never_self_loops(n, pct, seed):
    ids = np.arange(100, 100 + n)
    e = same_year_citations(ids, np.full(n, 5), pct, np.random.default_rng(seed))
    assert np.all(e[:, 0] != e[:, 1])
    assert np.unique(e[:, 0]).size == e.shape[0]
    assert set(e.ravel().tolist()) <= set(ids.tolist())


def test_config_validation(recency):
    bad = [
        dict(growth_rate=0),
        dict(years=-1),
        dict(years=200),
        dict(same_year_percentage=2.0),
        dict(threads=0),
        dict(neighborhood="both"),
        dict(generator_pool="seeds"),
        dict(growth_rounding="floor"),
    ]
    for kw in bad:
        with pytest.raises(ConfigError):
            SimConfig(recency_table=recency, superstars=(), **kw).validate()


def test_superstar_batch_too_small(recency):
    seed = TemporalDiGraph.from_edges(20, [], years=np.full(20, 1999))
    cfg = SimConfig(recency_table=recency, years=2)
    with pytest.raises(ConfigError, match="cannot hold"):
        run_simulation(cfg, seed)


def test_random_background_phenotypes_recorded(small_seed, small_config):
    from dataclasses import replace

    out = run_simulation(replace(small_config, background=PhenotypeMode.random()), small_seed)
    ph = out.graph.phenotypes[out.agent_ids]
    assert np.allclose(ph[:, :3].sum(axis=1), 1.0)
    assert ph[:, 3].std() > 0.1
    assert np.isnan(out.graph.phenotypes[: out.n_seed]).all()


def test_static_alpha_zero_still_cites_generator(small_seed, small_config):
    from dataclasses import replace

    out = run_simulation(replace(small_config, background=static(alpha=0.0)), small_seed)
    assert all(e["carryover_slots"] == 0 for e in out.events if e["event"] == "year")
