import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from citesim.distributions import FitnessLaw
from citesim.seedgen import ErSpec, er_edges, gen_erdos_renyi_gnm, load_seed
from citesim.tsvio import DataError, read_node_list


def test_no_edges():
    g = gen_erdos_renyi_gnm(ErSpec(10, 0))
    assert g.node_count() == 10 and g.edge_count() == 0


def test_saturated_directed():
    g = gen_erdos_renyi_gnm(ErSpec(3, 6))
    assert set(zip(g.src.tolist(), g.dst.tolist())) == {(i, j) for i in range(3) for j in range(3) if i != j}


def test_too_many_edges():
    with pytest.raises(ValueError):
        ErSpec(3, 7)
    with pytest.raises(ValueError):
        ErSpec(3, 4, directed=False)
    with pytest.raises(ValueError):
        ErSpec(0, 0)


def test_directed_edge_sets_uniform():
    spec = ErSpec(5, 3)
    rng = np.random.default_rng(0)
    index = {c: i for i, c in enumerate(itertools.combinations(range(20), 3))}
    counts = np.zeros(len(index))
    for _ in range(60_000):
        e = er_edges(spec, rng)
        slots = tuple(sorted(int(a * 4 + (b - (b > a))) for a, b in e))
        counts[index[slots]] += 1
    assert stats.chisquare(counts).pvalue > 0.001


def test_undirected_pairs_uniform_and_oriented_randomly():
    spec = ErSpec(4, 2, directed=False)
    rng = np.random.default_rng(1)
    pairs = {}
    forward = 0
    trials = 30_000
    for _ in range(trials):
        e = er_edges(spec, rng)
        key = tuple(sorted(tuple(sorted(p)) for p in e.tolist()))
        pairs[key] = pairs.get(key, 0) + 1
        forward += int((e[:, 0] < e[:, 1]).sum())
    assert len(pairs) == 15
    assert stats.chisquare(list(pairs.values())).pvalue > 0.001
    assert abs(forward / (2 * trials) - 0.5) < 0.01


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 40), st.data(), st.booleans())
def test_er_edges_are_simple(n, data, directed):
    spec_max = n * (n - 1) // (1 if directed else 2)
    m = data.draw(st.integers(0, min(spec_max, 200)))
    e = er_edges(ErSpec(n, m, directed=directed), np.random.default_rng(data.draw(st.integers(0, 999))))
    assert e.shape == (m, 2)
    assert np.all(e[:, 0] != e[:, 1])
    keys = set(map(tuple, e.tolist()))
    assert len(keys) == m
    if not directed:
        assert len({tuple(sorted(k)) for k in keys}) == m


def test_seeded_generation_is_deterministic():
    a = gen_erdos_renyi_gnm(ErSpec(200, 400), 7)
    b = gen_erdos_renyi_gnm(ErSpec(200, 400), 7)
    c = gen_erdos_renyi_gnm(ErSpec(200, 400), 8)
    assert a.same_as(b) and not a.same_as(c)


def test_sj_density_has_isolated_nodes():
    g = gen_erdos_renyi_gnm(ErSpec(4915, 8990))
    deg = g.in_degrees + g.out_degrees()
    assert (deg == 0).sum() > 0


def test_years_are_permuted_from_column():
    years = np.arange(1950, 1960).repeat(3)
    g = gen_erdos_renyi_gnm(ErSpec(30, 10, years=years), 1)
    assert sorted(g.pub_year.tolist()) == sorted(years.tolist())
    with pytest.raises(ValueError):
        ErSpec(5, 1, years=np.arange(4))


def test_load_two_node_seed(tmp_path):
    (tmp_path / "e.tsv").write_text("100\t200\n")
    (tmp_path / "n.tsv").write_text("100\t1990\n200\t1985\n")
    g = load_seed(tmp_path / "e.tsv", tmp_path / "n.tsv")
    assert g.in_degrees.tolist() == [0, 1]
    assert g.ext_id.tolist() == [100, 200]
    assert g.fitness.min() >= 1
    again = load_seed(tmp_path / "e.tsv", tmp_path / "n.tsv")
    assert again.same_as(g)


def test_load_keeps_given_fitness(tmp_path):
    (tmp_path / "e.tsv").write_text("")
    (tmp_path / "n.tsv").write_text("1\t1990\t42\n2\t1991\t7\n")
    g = load_seed(tmp_path / "e.tsv", tmp_path / "n.tsv", FitnessLaw())
    assert g.fitness.tolist() == [42, 7] and g.edge_count() == 0


def test_unknown_endpoint_names_line(tmp_path):
    (tmp_path / "e.tsv").write_text("# header\n1\t2\n2\t9\n")
    (tmp_path / "n.tsv").write_text("1\t1990\n2\t1991\n")
    with pytest.raises(DataError, match=r"e\.tsv:3: edge endpoint 9"):
        load_seed(tmp_path / "e.tsv", tmp_path / "n.tsv")


@pytest.mark.parametrize(
    "text,match",
    [("1\t1990\n1\t1991\n", ":2: duplicate node id 1"), ("1\t1990\nx\t1\n", ":2:"), ("1\t1990\t0\n", ":1: fitness")],
)
def test_bad_node_lists(tmp_path, text, match):
    (tmp_path / "n.tsv").write_text(text)
    with pytest.raises(DataError, match=match):
        read_node_list(tmp_path / "n.tsv")


def test_duplicate_seed_edge_rejected(tmp_path):
    (tmp_path / "e.tsv").write_text("1\t2\n1\t2\n")
    (tmp_path / "n.tsv").write_text("1\t1990\n2\t1991\n")
    with pytest.raises(DataError, match="duplicate"):
        load_seed(tmp_path / "e.tsv", tmp_path / "n.tsv")


def test_missing_file(tmp_path):
    with pytest.raises(DataError, match="no such file"):
        read_node_list(tmp_path / "nope.tsv")
