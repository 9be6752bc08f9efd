"""Candidate weights from preferential attachment, recency and fitness."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .distributions import Phenotype, RecencyTable


@dataclass(frozen=True)
class ScoreParams:
    current_year: int
    recency_table: RecencyTable
    year_counts: dict = field(default_factory=dict)
    gamma: float = 3.0
    c: float = 1.0
    recency_multiplicity: bool = True

    def __post_init__(self):
        if not (np.isfinite(self.gamma) and np.isfinite(self.c)):
            raise ValueError("gamma and c must be finite")
        if any(v < 0 for v in self.year_counts.values()):
            raise ValueError("year counts must be non-negative")


@dataclass(frozen=True, eq=False)
class CandidateScores:
    ids: np.ndarray
    weights: np.ndarray
    degenerate: bool = False


def score_pref_raw(in_deg, params: ScoreParams):
    """``in_deg ** gamma + c``."""
    x = np.asarray(in_deg, dtype=np.float64)
    if np.any(x < 0):
        raise ValueError("in-degree must be non-negative")
    out = x**params.gamma + params.c
    return float(out) if out.ndim == 0 else out


def score_fitness_raw(fitness, params: ScoreParams):
    """``fitness ** gamma + c``; superstar values reach ~1e18."""
    x = np.asarray(fitness, dtype=np.float64)
    if np.any(x < 1):
        raise ValueError("fitness must be >= 1")
    out = x**params.gamma + params.c
    return float(out) if out.ndim == 0 else out


def score_recency_raw(node_year, params: ScoreParams):
    """Table likelihood for the node's age, times the size of its year cohort."""
    y = np.asarray(node_year, dtype=np.int64)
    if np.any(y > params.current_year):
        raise ValueError(f"node year after current year {params.current_year}")
    out = params.recency_table.lookup(params.current_year - y)
    if params.recency_multiplicity:
        out = out * _cohort_sizes(y, params.year_counts)
    return float(out) if out.ndim == 0 else out


def _cohort_sizes(years: np.ndarray, year_counts: dict) -> np.ndarray:
    if years.ndim == 0:
        return np.float64(year_counts.get(int(years), 0))
    uniq, inv = np.unique(years, return_inverse=True)
    sizes = np.array([year_counts.get(int(u), 0) for u in uniq], dtype=np.float64)
    return sizes[inv].reshape(years.shape)


def family_scores(in_deg, fitness, years, params: ScoreParams):
    """Raw (P, R, F) vectors for a set of nodes."""
    return (
        np.atleast_1d(score_pref_raw(in_deg, params)),
        np.atleast_1d(score_recency_raw(years, params)),
        np.atleast_1d(score_fitness_raw(fitness, params)),
    )


def _normalized(raw: np.ndarray) -> np.ndarray:
    s = raw.sum()
    if s > 0 and np.isfinite(s):
        return raw / s
    return np.zeros_like(raw)


def combine(p_raw, r_raw, f_raw, phenotype: Phenotype) -> tuple[np.ndarray, bool]:
    """Pool-normalise each family and mix them with the phenotype weights.

    A family with no mass contributes nothing (its weight is not handed to
    the others). If the whole mix is zero the pool falls back to uniform
    weights and the second return value is True.
    """
    total = phenotype.pw * _normalized(p_raw) + phenotype.rw * _normalized(r_raw) + phenotype.fw * _normalized(f_raw)
    s = total.sum()
    if s > 0:
        return total, False
    return np.full(total.size, 1.0 / total.size), True


def composite_scores(ids, in_deg, fitness, years, phenotype: Phenotype, params: ScoreParams) -> CandidateScores:
    ids = np.asarray(ids, dtype=np.int64)
    if ids.size == 0:
        raise ValueError("empty candidate pool")
    p, r, f = family_scores(in_deg, fitness, years, params)
    w, degenerate = combine(p, r, f, phenotype)
    return CandidateScores(ids, w, degenerate)
