import pytest

from citesim.config import (
    DEFAULTS,
    build_sim_config,
    config_hash,
    load_config,
    parse_superstars,
    parse_value,
)
from citesim.distributions import synthetic_recency_table
from citesim.engine import ConfigError


@pytest.fixture
def rec(tmp_path):
    synthetic_recency_table().to_tsv(tmp_path / "rec.tsv")
    return tmp_path / "rec.tsv"


def test_defaults():
    cfg = load_config()
    assert cfg == DEFAULTS and cfg is not DEFAULTS


def test_dotted_and_table_forms_agree(tmp_path):
    (tmp_path / "a.toml").write_text('engine.growth_rate = 0.05\nphenotype.background = "random"\n')
    (tmp_path / "b.toml").write_text('[engine]\ngrowth_rate = 0.05\n[phenotype]\nbackground = "random"\n')
    assert load_config(tmp_path / "a.toml") == load_config(tmp_path / "b.toml")


def test_set_beats_file(tmp_path):
    (tmp_path / "c.toml").write_text("engine.years = 12\n")
    cfg = load_config(tmp_path / "c.toml", ["engine.years=3", "phenotype.alpha=0.25"])
    assert cfg["engine.years"] == 3 and cfg["phenotype.alpha"] == 0.25


def test_relative_paths_resolve_against_file(tmp_path, rec):
    sub = tmp_path / "cfg"
    sub.mkdir()
    (sub / "c.toml").write_text('inputs.recency = "../rec.tsv"\n')
    cfg = load_config(sub / "c.toml")
    assert cfg["inputs.recency"] == str(rec.resolve())


@pytest.mark.parametrize("text", ["engine.bogus = 1\n", "[nope]\nx = 1\n"])
def test_unknown_keys_rejected(tmp_path, text):
    (tmp_path / "c.toml").write_text(text)
    with pytest.raises(ConfigError, match="unknown config key"):
        load_config(tmp_path / "c.toml")


def test_bad_toml(tmp_path):
    (tmp_path / "c.toml").write_text("engine.years = = 3\n")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "c.toml")


def test_set_syntax():
    with pytest.raises(ConfigError):
        load_config(None, ["engine.years"])
    assert parse_value("3") == 3 and parse_value("true") is True
    assert parse_value("hybrid") == "hybrid"
    assert parse_value("[[1, 10000]]") == [[1, 10000]]


def test_missing_recency_names_key():
    with pytest.raises(ConfigError, match="inputs.recency"):
        build_sim_config(load_config())


def test_build_sim_config(rec):
    cfg = load_config(None, [f'inputs.recency="{rec}"', "phenotype.background=hybrid", "phenotype.alpha=0.2",
                             "out_degree.kind=uniform", "engine.superstars=[]"])
    sim = build_sim_config(cfg)
    assert sim.background.kind == "hybrid" and sim.background.fixed.alpha == 0.2
    assert sim.out_degree.kind == "uniform" and sim.superstars == ()
    assert sim.recency_table.max_age == 80


def test_static_override_fields(rec):
    cfg = load_config(None, [f'inputs.recency="{rec}"', "phenotype.pw=1.0", "phenotype.rw=0.0", "phenotype.fw=0.0"])
    ph = build_sim_config(cfg).background.fixed
    assert (ph.pw, ph.rw, ph.fw, ph.alpha) == (1.0, 0.0, 0.0, 0.5)


@pytest.mark.parametrize(
    "item",
    ["phenotype.background=weird", "phenotype.pw=0.9", "out_degree.kind=empirical", "fitness.scale=100.0"],
)
def test_invalid_values_raise_config_error(rec, item):
    with pytest.raises(ConfigError):
        build_sim_config(load_config(None, [f'inputs.recency="{rec}"', item]))


def test_superstar_parsing():
    assert parse_superstars("none") == []
    assert parse_superstars("1:10000,2:100000") == [[1, 10000], [2, 100000]]
    with pytest.raises(ConfigError):
        parse_superstars("1-10000")


def test_hash_ignores_threads_and_output():
    a = load_config(None, ["engine.threads=1", 'output.dir="x"'])
    b = load_config(None, ["engine.threads=8", 'output.dir="y"'])
    c = load_config(None, ["engine.seed=1"])
    assert config_hash(a) == config_hash(b) != config_hash(c)
