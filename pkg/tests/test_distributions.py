import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from citesim.distributions import (
    FitnessLaw,
    OutDegreeDist,
    Phenotype,
    PhenotypeMode,
    RecencyTable,
    RngStream,
    fitness_pmf,
    recency_likelihood,
    sample_fitness,
    sample_out_degree,
    sample_phenotype,
    synthetic_recency_table,
)

LAW = FitnessLaw()


def test_pmf_at_one():
    assert fitness_pmf(1) == pytest.approx(6.37429 * 0.072)
    assert fitness_pmf(1) == pytest.approx(0.45895, abs=1e-5)


def test_pmf_ratio_follows_exponent():
    assert fitness_pmf(10) / fitness_pmf(1) == pytest.approx(10**-1.634)


def test_pmf_plus_outlier_is_one():
    assert LAW.probabilities.sum() + LAW.outlier_probability == pytest.approx(1.0, abs=1e-9)
    assert LAW.outlier_probability == pytest.approx(1.4328e-6, rel=1e-3)


def test_pmf_out_of_range():
    with pytest.raises(ValueError):
        fitness_pmf(0)
    with pytest.raises(ValueError):
        fitness_pmf(1001)


def test_rescaled_law_sums_to_one():
    law = FitnessLaw(allow_outlier=False)
    assert law.probabilities.sum() == pytest.approx(1.0, abs=1e-9)
    assert law.pmf(1) == pytest.approx(law.probabilities[0])


def test_law_rejects_mass_above_one():
    with pytest.raises(ValueError):
        FitnessLaw(scale=10.0)


@pytest.fixture(scope="module")
def million():
    return sample_fitness(np.random.default_rng(1), LAW, size=1_000_000)


def test_sampler_ks_distance(million):
    inside = million[million <= 1000]
    ecdf = np.cumsum(np.bincount(inside, minlength=1001)[1:]) / million.size
    assert np.max(np.abs(ecdf - LAW._cdf)) < 0.005


def test_sampler_chi_square_on_decades(million):
    cdf = LAW._cdf
    expected = np.array([cdf[9], cdf[99] - cdf[9], cdf[999] - cdf[99]]) / cdf[999]
    obs = np.histogram(million[million <= 1000], bins=[1, 11, 101, 1001])[0]
    assert stats.chisquare(obs, expected * obs.sum()).pvalue > 0.001


def test_no_outlier_when_suppressed():
    x = sample_fitness(RngStream(3), FitnessLaw(allow_outlier=False), size=200_000)
    assert x.min() >= 1 and x.max() <= 1000


def test_outlier_draws_land_in_tail():
    u = np.linspace(0, 1, 101)
    x = LAW._outlier(u)
    assert x.min() == 1001 and x.max() <= 10**6
    assert np.all(np.diff(x) >= 0)


def test_scalar_draw():
    v = sample_fitness(RngStream(0, (1,)), LAW)
    assert isinstance(v, int) and 1 <= v


def test_streams_are_reproducible():
    a = RngStream(42).child(2, 7).generator().random(5)
    b = RngStream(42).child(2, 7).generator().random(5)
    c = RngStream(42).child(2, 8).generator().random(5)
    assert np.array_equal(a, b) and not np.array_equal(a, c)


# --- out-degree --------------------------------------------------------------


def test_uniform_out_degree_is_flat():
    d = OutDegreeDist(kind="uniform")
    v, p = d.pmf()
    assert v[0] == 5 and v[-1] == 249
    assert np.allclose(p, 1 / 245)
    x = d.sample(np.random.default_rng(0), 245_000)
    counts = np.bincount(x - 5, minlength=245)
    assert stats.chisquare(counts).pvalue > 0.001


def test_normal_out_degree_mean():
    d = OutDegreeDist()
    x = sample_out_degree(np.random.default_rng(2), d, 1_000_000)
    v, p = d.pmf()
    assert abs(x.mean() - 127) < 0.5
    assert x.mean() == pytest.approx((v * p).sum(), abs=0.15)


def test_normal_clipping_mass_small():
    v, p = OutDegreeDist().pmf()
    assert p[0] + p[-1] < 0.01
    assert p.sum() == pytest.approx(1.0, abs=1e-9)


def test_degenerate_support():
    for kind in ("normal", "uniform", "powerlaw"):
        x = OutDegreeDist(kind=kind, min=7, max=7).sample(np.random.default_rng(0), 100)
        assert np.all(x == 7)


def test_powerlaw_density_increases():
    d = OutDegreeDist(kind="powerlaw")
    x = d.sample(np.random.default_rng(4), 400_000)
    counts = np.histogram(x, bins=np.linspace(5, 250, 8))[0]
    assert np.all(np.diff(counts) > 0)
    v, p = d.pmf()
    assert p.sum() == pytest.approx(1.0, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(
    st.sampled_from(["normal", "powerlaw", "uniform"]),
    st.integers(1, 50),
    st.integers(0, 200),
    st.integers(0, 2**32),
)
def test_out_degree_in_range(kind, lo, width, seed):
    d = OutDegreeDist(kind=kind, min=lo, max=lo + width)
    x = d.sample(np.random.default_rng(seed), 500)
    assert x.min() >= lo and x.max() <= lo + width
    assert d.pmf()[1].sum() == pytest.approx(1.0, abs=1e-9)


def test_empirical_table(tmp_path):
    path = tmp_path / "od.tsv"
    path.write_text("# out_degree\tprobability\n5\t0.25\n9\t0.75\n")
    d = OutDegreeDist.from_table(path)
    assert (d.min, d.max) == (5, 9)
    x = d.sample(np.random.default_rng(0), 40_000)
    assert set(np.unique(x)) == {5, 9}
    assert (x == 9).mean() == pytest.approx(0.75, abs=0.01)
    path.write_text("5\tx\n")
    with pytest.raises(ValueError, match=":1:"):
        OutDegreeDist.from_table(path)


def test_decaying_table_mean():
    v, p = OutDegreeDist.decaying().pmf()
    assert (v * p).sum() == pytest.approx(18.5, abs=0.5)


@pytest.mark.parametrize("kw", [{"kind": "bogus"}, {"min": 0}, {"min": 9, "max": 5}, {"sd": 0}])
def test_invalid_out_degree(kw):
    with pytest.raises(ValueError):
        OutDegreeDist(**kw)


# --- recency -----------------------------------------------------------------


def test_recency_lookup():
    t = RecencyTable((1.0, 2.0, 0.5))
    assert recency_likelihood(t, 1) == 2.0
    assert recency_likelihood(t, 3) == 0.0
    with pytest.raises(ValueError):
        recency_likelihood(t, -1)
    assert t.lookup([0, 2, 3, 10]).tolist() == [1.0, 0.5, 0.0, 0.0]


def test_recency_tsv(tmp_path):
    t = synthetic_recency_table(10)
    t.to_tsv(tmp_path / "r.tsv")
    assert RecencyTable.from_tsv(tmp_path / "r.tsv") == t
    (tmp_path / "gap.tsv").write_text("0\t1\n2\t1\n")
    with pytest.raises(ValueError, match="contiguous"):
        RecencyTable.from_tsv(tmp_path / "gap.tsv")
    with pytest.raises(ValueError):
        RecencyTable((0.0, 0.0))


# --- phenotypes --------------------------------------------------------------


def test_static_default():
    ph = sample_phenotype(None, PhenotypeMode.static())
    assert (ph.pw, ph.rw, ph.fw, ph.alpha) == (1 / 3, 1 / 3, 1 / 3, 0.5)


def test_static_rejects_bad_simplex():
    with pytest.raises(ValueError):
        Phenotype(0.5, 0.5, 0.5, 0.5)
    with pytest.raises(ValueError):
        Phenotype(alpha=1.5)


def test_random_weights_are_uniform_on_simplex():
    g = np.random.default_rng(9)
    draws = np.array([[p.pw, p.rw, p.fw, p.alpha] for p in (sample_phenotype(g, PhenotypeMode.random()) for _ in range(100_000))])
    assert np.allclose(draws[:, :3].mean(axis=0), 1 / 3, atol=0.004)
    # uniform simplex marginals are Beta(1, 2)
    assert stats.kstest(draws[:, 0], stats.beta(1, 2).cdf).pvalue > 0.001
    assert stats.kstest(draws[:, 3], "uniform").pvalue > 0.001


def test_random_weights_mean_at_million_draws():
    w = np.random.default_rng(10).dirichlet(np.ones(3), 1_000_000)
    assert np.allclose(w.mean(axis=0), 1 / 3, atol=0.002)


def test_hybrid_fixes_alpha():
    g = np.random.default_rng(0)
    mode = PhenotypeMode.hybrid(alpha=0.5)
    phs = [sample_phenotype(g, mode) for _ in range(500)]
    assert all(p.alpha == 0.5 for p in phs)
    assert np.std([p.pw for p in phs]) > 0.1


def test_hybrid_fixed_weight_shares_remaining_mass():
    g = np.random.default_rng(0)
    for _ in range(200):
        p = sample_phenotype(g, PhenotypeMode.hybrid(fw=0.6))
        assert p.fw == 0.6 and p.pw + p.rw == pytest.approx(0.4)
    with pytest.raises(ValueError):
        PhenotypeMode.hybrid(pw=0.7, rw=0.7)
