"""Stochastic sources: fitness law, out-degree laws, recency table, phenotypes
and the keyed random streams every sampler draws from."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy import stats

# Stream domain tags. A stream is keyed by (tag, *ids) so no sampler's output
# depends on how many draws another sampler made.
AGENT_INIT = 1
CITE = 2
SAME_YEAR = 3
SEED_FITNESS = 4
ER_EDGES = 5
ER_YEARS = 6


@dataclass(frozen=True)
class RngStream:
    """A deterministic random stream derived from ``master_seed`` and ``key``."""

    master_seed: int
    key: tuple[int, ...] = ()

    def child(self, *key: int) -> RngStream:
        return RngStream(self.master_seed, self.key + tuple(int(k) for k in key))

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(self.master_seed & (2**64 - 1), spawn_key=self.key)
        return np.random.default_rng(seq)


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


# --- fitness ---------------------------------------------------------------


@dataclass(frozen=True)
class FitnessLaw:
    """Discrete power law ``scale * coeff * x**exponent`` on ``[lo, hi]``.

    With ``allow_outlier`` the mass missing from ``[lo, hi]`` is the chance
    of drawing one ultra-high value from the continued tail on
    ``(hi, outlier_max]``. Without it, the scale is renormalised so the law
    sums to one on ``[lo, hi]``.
    """

    scale: float = 6.37429
    coeff: float = 0.072
    exponent: float = -1.634
    lo: int = 1
    hi: int = 1000
    allow_outlier: bool = True
    outlier_max: int = 10**6

    def __post_init__(self):
        if not (1 <= self.lo <= self.hi):
            raise ValueError(f"fitness range must satisfy 1 <= lo <= hi, got [{self.lo}, {self.hi}]")
        if self.scale <= 0 or self.coeff <= 0:
            raise ValueError("fitness scale and coefficient must be positive")
        total = self._raw.sum()
        if self.allow_outlier and total > 1 + 1e-12:
            raise ValueError(f"fitness pmf sums to {total:.9f} > 1 on [{self.lo}, {self.hi}]; no room for an outlier")
        if self.allow_outlier and self.outlier_max <= self.hi:
            raise ValueError("outlier_max must exceed hi")

    @cached_property
    def _support(self) -> np.ndarray:
        return np.arange(self.lo, self.hi + 1, dtype=np.int64)

    @cached_property
    def _raw(self) -> np.ndarray:
        return self.scale * self.coeff * self._support.astype(np.float64) ** self.exponent

    @property
    def effective_scale(self) -> float:
        if self.allow_outlier:
            return self.scale
        return self.scale / self._raw.sum()

    @cached_property
    def probabilities(self) -> np.ndarray:
        """pmf over ``lo..hi`` (sums to ``1 - outlier_probability``)."""
        if self.allow_outlier:
            return self._raw
        return self._raw / self._raw.sum()

    @property
    def outlier_probability(self) -> float:
        return max(0.0, 1.0 - float(self._raw.sum())) if self.allow_outlier else 0.0

    @cached_property
    def _cdf(self) -> np.ndarray:
        return np.cumsum(self.probabilities)

    def pmf(self, x):
        xa = np.asarray(x)
        if np.any((xa < self.lo) | (xa > self.hi)):
            raise ValueError(f"fitness {x} outside [{self.lo}, {self.hi}]")
        val = self.effective_scale * self.coeff * xa.astype(np.float64) ** self.exponent
        return float(val) if val.ndim == 0 else val

    def cdf(self, x):
        """P(fitness <= x) for integer ``x`` in ``[lo, hi]``."""
        xa = np.asarray(x, dtype=np.int64)
        return self._cdf[np.clip(xa, self.lo, self.hi) - self.lo]

    def _outlier(self, u: np.ndarray) -> np.ndarray:
        # continuous inverse CDF of x**exponent on [hi + 1, outlier_max + 1), floored
        e1 = self.exponent + 1.0
        a = float(self.hi + 1) ** e1
        b = float(self.outlier_max + 1) ** e1
        x = np.floor((a + u * (b - a)) ** (1.0 / e1)).astype(np.int64)
        return np.clip(x, self.hi + 1, self.outlier_max)


def fitness_pmf(x, law: FitnessLaw | None = None):
    return (law or FitnessLaw()).pmf(x)


def sample_fitness(rng, law: FitnessLaw, size=None):
    """Draw fitness values; a scalar when ``size`` is None."""
    g = as_generator(rng)
    n = 1 if size is None else size
    u = g.random(n)
    idx = np.searchsorted(law._cdf, u, side="right")
    out = law.lo + np.minimum(idx, law.hi - law.lo).astype(np.int64)
    tail = idx > law.hi - law.lo
    if law.allow_outlier and tail.any():
        out[tail] = law._outlier(g.random(int(tail.sum())))
    return int(out[0]) if size is None else out


# --- out-degree ------------------------------------------------------------

OUT_DEGREE_KINDS = ("empirical", "normal", "powerlaw", "uniform")


@dataclass(frozen=True)
class OutDegreeDist:
    """Reference-count law on the integers ``[min, max]``.

    ``normal`` rounds a Normal(mean, sd) draw and clips it into range;
    ``powerlaw`` scales a density ``shape * t**(shape - 1)`` on ``[0, 1]``
    to the range and rounds; ``empirical`` is a value/probability table.
    """

    kind: str = "normal"
    min: int = 5
    max: int = 249
    mean: float = 127.0
    sd: float = 40.0
    shape: float = 3.0
    values: tuple[int, ...] = ()
    probs: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in OUT_DEGREE_KINDS:
            raise ValueError(f"unknown out-degree kind {self.kind!r}; expected one of {OUT_DEGREE_KINDS}")
        if self.kind == "empirical":
            if not self.values or len(self.values) != len(self.probs):
                raise ValueError("empirical out-degree needs equal-length value and probability lists")
            if min(self.values) < 1:
                raise ValueError("out-degree values must be >= 1")
            if any(p < 0 for p in self.probs):
                raise ValueError("negative probability in out-degree table")
            total = sum(self.probs)
            if not 0.999 <= total <= 1.001:
                raise ValueError(f"out-degree probabilities sum to {total}, outside [0.999, 1.001]")
            object.__setattr__(self, "min", int(min(self.values)))
            object.__setattr__(self, "max", int(max(self.values)))
        elif not 1 <= self.min <= self.max:
            raise ValueError(f"out-degree range must satisfy 1 <= min <= max, got [{self.min}, {self.max}]")
        if self.kind == "normal" and self.sd <= 0:
            raise ValueError("normal out-degree needs sd > 0")
        if self.kind == "powerlaw" and self.shape <= 0:
            raise ValueError("powerlaw out-degree needs shape > 0")

    @classmethod
    def decaying(cls, min: int = 5, max: int = 249, exponent: float = 2.0) -> OutDegreeDist:
        """Table with ``p(k) ~ k**-exponent`` on ``[min, max]``.

        The default has mean ~18.5 references, close to the per-agent mean of
        full-scale runs, and serves as a stand-in empirical law.
        """
        k = np.arange(min, max + 1, dtype=np.float64)
        p = k**-exponent
        return cls(kind="empirical", values=tuple(int(x) for x in k), probs=tuple((p / p.sum()).tolist()))

    @classmethod
    def from_table(cls, path) -> OutDegreeDist:
        vals, probs = [], []
        for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            try:
                vals.append(int(parts[0]))
                probs.append(float(parts[1]))
            except (ValueError, IndexError):
                raise ValueError(f"{path}:{lineno}: expected 'out_degree<TAB>probability', got {line!r}") from None
        return cls(kind="empirical", values=tuple(vals), probs=tuple(probs))

    def pmf(self) -> tuple[np.ndarray, np.ndarray]:
        """Exact ``(values, probabilities)`` of the realised integer law."""
        if self.kind == "empirical":
            v = np.asarray(self.values, dtype=np.int64)
            p = np.asarray(self.probs, dtype=np.float64)
            order = np.argsort(v, kind="stable")
            v, p = v[order], p[order]
            uniq, inv = np.unique(v, return_inverse=True)
            return uniq, np.bincount(inv, weights=p) / p.sum()
        v = np.arange(self.min, self.max + 1, dtype=np.int64)
        if self.kind == "uniform":
            return v, np.full(v.size, 1.0 / v.size)
        # P(round(X) = v) with round-half-up and clipping into [min, max]
        edges = v.astype(np.float64) - 0.5
        edges = np.append(edges, self.max + 0.5)
        if self.kind == "normal":
            cdf = stats.norm.cdf(edges, loc=self.mean, scale=self.sd)
        else:
            span = self.max - self.min
            t = np.clip((edges - self.min) / span, 0.0, 1.0) if span > 0 else (edges >= self.min).astype(float)
            cdf = t**self.shape
        cdf[0], cdf[-1] = 0.0, 1.0
        return v, np.diff(cdf)

    def sample(self, rng, size=None):
        g = as_generator(rng)
        n = 1 if size is None else size
        if self.kind == "uniform":
            out = g.integers(self.min, self.max + 1, size=n)
        elif self.kind == "normal":
            x = g.normal(self.mean, self.sd, size=n)
            out = np.clip(np.floor(x + 0.5), self.min, self.max)
        elif self.kind == "powerlaw":
            t = g.random(n) ** (1.0 / self.shape)
            out = np.floor(self.min + (self.max - self.min) * t + 0.5)
        else:
            v, p = self.pmf()
            out = v[np.minimum(np.searchsorted(np.cumsum(p), g.random(n), side="right"), v.size - 1)]
        out = np.asarray(out, dtype=np.int64)
        return int(out[0]) if size is None else out


def sample_out_degree(rng, dist: OutDegreeDist, size=None):
    return dist.sample(rng, size)


# --- recency ---------------------------------------------------------------


@dataclass(frozen=True)
class RecencyTable:
    """Likelihood of citing a node that is ``age`` years old, ages 0..max_age."""

    likelihood: tuple[float, ...]

    def __post_init__(self):
        lk = tuple(float(x) for x in self.likelihood)
        if not lk:
            raise ValueError("recency table is empty")
        if any(x < 0 or not math.isfinite(x) for x in lk):
            raise ValueError("recency likelihoods must be finite and non-negative")
        if not any(x > 0 for x in lk):
            raise ValueError("recency table needs at least one positive entry")
        object.__setattr__(self, "likelihood", lk)

    @property
    def max_age(self) -> int:
        return len(self.likelihood) - 1

    @cached_property
    def array(self) -> np.ndarray:
        return np.asarray(self.likelihood, dtype=np.float64)

    @classmethod
    def from_tsv(cls, path) -> RecencyTable:
        rows = {}
        for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            try:
                age, lk = int(parts[0]), float(parts[1])
            except (ValueError, IndexError):
                raise ValueError(f"{path}:{lineno}: expected 'age<TAB>likelihood', got {line!r}") from None
            if age in rows:
                raise ValueError(f"{path}:{lineno}: duplicate age {age}")
            rows[age] = lk
        if not rows:
            raise ValueError(f"{path}: recency table is empty")
        ages = sorted(rows)
        if ages != list(range(len(ages))):
            raise ValueError(f"{path}: ages must be contiguous from 0, got {ages[0]}..{ages[-1]} with gaps")
        return cls(tuple(rows[a] for a in ages))

    def to_tsv(self, path) -> None:
        Path(path).write_text("".join(f"{a}\t{x!r}\n" for a, x in enumerate(self.likelihood)))

    def lookup(self, ages) -> np.ndarray:
        """Vectorised likelihood; ages past the table give 0."""
        a = np.asarray(ages, dtype=np.int64)
        if np.any(a < 0):
            raise ValueError("negative recency age")
        out = np.zeros(a.shape, dtype=np.float64)
        ok = a <= self.max_age
        out[ok] = self.array[a[ok]]
        return out


def recency_likelihood(table: RecencyTable, age: int) -> float:
    if age < 0:
        raise ValueError(f"negative recency age {age}")
    return table.likelihood[age] if age <= table.max_age else 0.0


def synthetic_recency_table(max_age: int = 80, scale: float = 4.0) -> RecencyTable:
    """Unimodal age kernel ``(age + 1) * exp(-age / scale)``, normalised.

    A stand-in for desk runs when no empirical table is at hand.
    """
    a = np.arange(max_age + 1, dtype=np.float64)
    lk = (a + 1.0) * np.exp(-a / scale)
    return RecencyTable(tuple(lk / lk.sum()))


# --- phenotypes ------------------------------------------------------------


@dataclass(frozen=True)
class Phenotype:
    pw: float = 1 / 3
    rw: float = 1 / 3
    fw: float = 1 / 3
    alpha: float = 0.5

    def __post_init__(self):
        for name in ("pw", "rw", "fw", "alpha"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"phenotype {name}={v} outside [0, 1]")
        s = self.pw + self.rw + self.fw
        if abs(s - 1.0) > 1e-9:
            raise ValueError(f"phenotype weights sum to {s}, not 1")


BACKGROUNDS = ("static", "random", "hybrid")
_WEIGHTS = ("pw", "rw", "fw")


@dataclass(frozen=True)
class PhenotypeMode:
    """How agents get phenotypes.

    ``static`` hands every agent ``fixed`` (default: equal weights, alpha 0.5).
    ``random`` draws alpha ~ U[0, 1] and weights uniformly on the simplex.
    ``hybrid`` keeps the fields named in ``fixed_fields`` and draws the rest;
    free weights share the simplex mass the fixed ones leave.
    """

    kind: str = "static"
    fixed: Phenotype = field(default_factory=Phenotype)
    fixed_fields: frozenset[str] = frozenset()

    def __post_init__(self):
        if self.kind not in BACKGROUNDS:
            raise ValueError(f"unknown agent background {self.kind!r}; expected one of {BACKGROUNDS}")
        bad = set(self.fixed_fields) - {"pw", "rw", "fw", "alpha"}
        if bad:
            raise ValueError(f"unknown phenotype fields {sorted(bad)}")
        object.__setattr__(self, "fixed_fields", frozenset(self.fixed_fields))
        if self.kind == "hybrid":
            fixed_w = [w for w in _WEIGHTS if w in self.fixed_fields]
            mass = sum(getattr(self.fixed, w) for w in fixed_w)
            if mass > 1 + 1e-9:
                raise ValueError("fixed hybrid weights exceed 1")
            if len(fixed_w) == 3 and abs(mass - 1) > 1e-9:
                raise ValueError("all three weights fixed but they do not sum to 1")

    @classmethod
    def static(cls, phenotype: Phenotype | None = None) -> PhenotypeMode:
        return cls("static", phenotype or Phenotype())

    @classmethod
    def random(cls) -> PhenotypeMode:
        return cls("random")

    @classmethod
    def hybrid(cls, **fixed: float) -> PhenotypeMode:
        """``PhenotypeMode.hybrid(alpha=0.5)`` fixes alpha, randomises weights."""
        base = {"pw": 0.0, "rw": 0.0, "fw": 0.0, "alpha": 0.0}
        base.update(fixed)
        free = [w for w in _WEIGHTS if w not in fixed]
        if free:
            # placeholder weights that satisfy the simplex; free ones are redrawn
            rest = 1.0 - sum(base[w] for w in _WEIGHTS if w in fixed)
            for w in free:
                base[w] = max(rest, 0.0) / len(free)
        return cls("hybrid", Phenotype(**base), frozenset(fixed))


def sample_phenotype(rng, mode: PhenotypeMode) -> Phenotype:
    if mode.kind == "static":
        return mode.fixed
    g = as_generator(rng)
    if mode.kind == "random":
        w = g.dirichlet(np.ones(3))
        return Phenotype(float(w[0]), float(w[1]), max(0.0, float(1.0 - w[0] - w[1])), float(g.random()))
    fixed = mode.fixed_fields
    vals = {k: getattr(mode.fixed, k) for k in fixed}
    free = [w for w in _WEIGHTS if w not in fixed]
    if free:
        rest = 1.0 - sum(vals[w] for w in _WEIGHTS if w in fixed)
        draw = g.dirichlet(np.ones(len(free))) * max(rest, 0.0) if len(free) > 1 else np.array([max(rest, 0.0)])
        for name, x in zip(free, draw):
            vals[name] = float(x)
        # keep the simplex exact after scaling
        vals[free[-1]] = max(0.0, 1.0 - sum(vals[w] for w in _WEIGHTS if w != free[-1]))
    if "alpha" not in fixed:
        vals["alpha"] = float(g.random())
    return Phenotype(vals["pw"], vals["rw"], vals["fw"], vals["alpha"])
