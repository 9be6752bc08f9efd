"""Run configuration files.

Config files are TOML. Keys may be written flat with dots
(``engine.growth_rate = 0.03``) or grouped under tables (``[engine]``);
both forms flatten to the same dotted keys. Precedence, lowest first:
built-in defaults, the config file, ``--set key=value``, dedicated CLI flags.
"""

from __future__ import annotations

import hashlib
import json
import sys
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .distributions import FitnessLaw, OutDegreeDist, Phenotype, PhenotypeMode, RecencyTable
from .engine import DEFAULT_SUPERSTARS, ConfigError, SimConfig

DEFAULTS = {
    "engine.growth_rate": 0.03,
    "engine.years": 30,
    "engine.same_year_percentage": 0.0,
    "engine.same_year_consumes_quota": True,
    "engine.threads": 1,
    "engine.neighborhood": "union",
    "engine.generator_pool": "all",
    "engine.always_cite_generator": True,
    "engine.growth_rounding": "half_up",
    "engine.start_year": None,
    "engine.seed": 0,
    "engine.superstars": [list(s) for s in DEFAULT_SUPERSTARS],
    "phenotype.background": "static",
    "phenotype.alpha": None,
    "phenotype.pw": None,
    "phenotype.rw": None,
    "phenotype.fw": None,
    "scoring.gamma": 3.0,
    "scoring.c": 1.0,
    "scoring.recency_multiplicity": True,
    "fitness.scale": 6.37429,
    "fitness.coeff": 0.072,
    "fitness.exponent": -1.634,
    "fitness.min": 1,
    "fitness.max": 1000,
    "fitness.allow_outlier": True,
    "fitness.outlier_max": 10**6,
    "out_degree.kind": "normal",
    "out_degree.min": 5,
    "out_degree.max": 249,
    "out_degree.mean": 127.0,
    "out_degree.sd": 40.0,
    "out_degree.shape": 3.0,
    "out_degree.table": None,
    "inputs.edges": None,
    "inputs.nodes": None,
    "inputs.recency": None,
    "output.dir": None,
}
PATH_KEYS = ("out_degree.table", "inputs.edges", "inputs.nodes", "inputs.recency", "output.dir")


def _flatten(d: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        else:
            out[key] = v
    return out


def parse_value(text: str):
    """Parse a ``--set`` value as a TOML value, falling back to a bare string."""
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def load_config(path=None, sets=()) -> dict:
    """Resolved flat config: defaults, then file, then ``key=value`` overrides.

    Relative paths in the file are taken relative to the file's directory.
    """
    cfg = dict(DEFAULTS)
    if path is not None:
        path = Path(path)
        try:
            data = tomllib.loads(path.read_text())
        except (OSError, tomllib.TOMLDecodeError) as exc:
            raise ConfigError(f"{path}: {exc}") from None
        flat = _flatten(data)
        for key in PATH_KEYS:
            if flat.get(key) is not None:
                flat[key] = str((path.parent / flat[key]).resolve())
        _merge(cfg, flat, str(path))
    return apply_sets(cfg, sets)


def apply_sets(cfg: dict, sets) -> dict:
    """Apply ``key=value`` overrides in place."""
    for item in sets:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        _merge(cfg, {key.strip(): parse_value(value.strip())}, "--set")
    return cfg


def _merge(cfg: dict, flat: dict, origin: str) -> None:
    unknown = sorted(set(flat) - set(DEFAULTS))
    if unknown:
        raise ConfigError(f"{origin}: unknown config key(s) {unknown}")
    cfg.update(flat)


def parse_superstars(text: str) -> list[list[int]]:
    """``"1:10000,1:100000"`` or ``"none"``."""
    text = text.strip()
    if text.lower() in ("", "none"):
        return []
    out = []
    for item in text.split(","):
        try:
            year, fit = item.split(":")
            out.append([int(year), int(fit)])
        except ValueError:
            raise ConfigError(f"bad superstar spec {item!r}; expected YEAR:FITNESS") from None
    return out


def phenotype_mode(cfg: dict) -> PhenotypeMode:
    kind = cfg["phenotype.background"]
    given = {k: cfg[f"phenotype.{k}"] for k in ("pw", "rw", "fw", "alpha") if cfg[f"phenotype.{k}"] is not None}
    try:
        if kind == "static":
            return PhenotypeMode.static(Phenotype(**{**{"pw": 1 / 3, "rw": 1 / 3, "fw": 1 / 3, "alpha": 0.5}, **given}))
        if kind == "random":
            return PhenotypeMode.random()
        if kind == "hybrid":
            return PhenotypeMode.hybrid(**given)
    except ValueError as exc:
        raise ConfigError(f"phenotype: {exc}") from None
    raise ConfigError(f"phenotype.background must be static, random or hybrid, got {kind!r}")


def out_degree_dist(cfg: dict) -> OutDegreeDist:
    try:
        if cfg["out_degree.kind"] == "empirical":
            if cfg["out_degree.table"] is None:
                raise ConfigError("empirical out-degree needs config key 'out_degree.table'")
            return OutDegreeDist.from_table(cfg["out_degree.table"])
        return OutDegreeDist(
            kind=cfg["out_degree.kind"],
            min=int(cfg["out_degree.min"]),
            max=int(cfg["out_degree.max"]),
            mean=float(cfg["out_degree.mean"]),
            sd=float(cfg["out_degree.sd"]),
            shape=float(cfg["out_degree.shape"]),
        )
    except (OSError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"out_degree: {exc}") from None


def fitness_law(cfg: dict) -> FitnessLaw:
    try:
        return FitnessLaw(
            scale=float(cfg["fitness.scale"]),
            coeff=float(cfg["fitness.coeff"]),
            exponent=float(cfg["fitness.exponent"]),
            lo=int(cfg["fitness.min"]),
            hi=int(cfg["fitness.max"]),
            allow_outlier=bool(cfg["fitness.allow_outlier"]),
            outlier_max=int(cfg["fitness.outlier_max"]),
        )
    except ValueError as exc:
        raise ConfigError(f"fitness: {exc}") from None


def build_sim_config(cfg: dict, require_recency: bool = True) -> SimConfig:
    recency = None
    if cfg["inputs.recency"] is not None:
        try:
            recency = RecencyTable.from_tsv(cfg["inputs.recency"])
        except (OSError, ValueError) as exc:
            raise ConfigError(f"inputs.recency: {exc}") from None
    elif require_recency:
        raise ConfigError("missing required config key 'inputs.recency' (recency table TSV)")
    try:
        return SimConfig(
            recency_table=recency,
            growth_rate=float(cfg["engine.growth_rate"]),
            years=int(cfg["engine.years"]),
            same_year_percentage=float(cfg["engine.same_year_percentage"]),
            same_year_consumes_quota=bool(cfg["engine.same_year_consumes_quota"]),
            background=phenotype_mode(cfg),
            out_degree=out_degree_dist(cfg),
            fitness_law=fitness_law(cfg),
            gamma=float(cfg["scoring.gamma"]),
            c=float(cfg["scoring.c"]),
            recency_multiplicity=bool(cfg["scoring.recency_multiplicity"]),
            superstars=tuple((int(y), int(f)) for y, f in cfg["engine.superstars"]),
            master_seed=int(cfg["engine.seed"]),
            threads=int(cfg["engine.threads"]),
            neighborhood=cfg["engine.neighborhood"],
            generator_pool=cfg["engine.generator_pool"],
            always_cite_generator=bool(cfg["engine.always_cite_generator"]),
            growth_rounding=cfg["engine.growth_rounding"],
            start_year=None if cfg["engine.start_year"] is None else int(cfg["engine.start_year"]),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None


# keys that never change the simulated output
_OUTPUT_ONLY = ("output.dir", "engine.threads")


def config_hash(cfg: dict) -> str:
    canon = {k: v for k, v in sorted(cfg.items()) if k not in _OUTPUT_ONLY}
    return hashlib.sha256(json.dumps(canon, sort_keys=True).encode()).hexdigest()


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()
