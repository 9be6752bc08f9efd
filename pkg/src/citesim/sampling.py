"""Weighted sampling without replacement (A-res, Efraimidis & Spirakis)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .distributions import as_generator


@dataclass(frozen=True, eq=False)
class WeightedPool:
    items: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        items = np.asarray(self.items, dtype=np.int64)
        weights = np.asarray(self.weights, dtype=np.float64)
        if items.shape != weights.shape:
            raise ValueError("items and weights differ in length")
        if np.any(~(weights > 0)) or not np.all(np.isfinite(weights)):
            raise ValueError("pool weights must be positive and finite")
        object.__setattr__(self, "items", items)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def from_weights(cls, items, weights) -> WeightedPool:
        """Build a pool, dropping zero-weight items (they can never be drawn)."""
        items = np.asarray(items, dtype=np.int64)
        weights = np.asarray(weights, dtype=np.float64)
        keep = weights > 0
        return cls(items[keep], weights[keep])

    def __len__(self):
        return int(self.items.size)


def ares_keys(weights, u) -> np.ndarray:
    """``log(u) / w``: a monotone transform of ``u ** (1 / w)`` that does not
    underflow for tiny weights."""
    with np.errstate(divide="ignore"):
        return np.log(u) / weights


def ares_select(pool: WeightedPool, k: int, u) -> np.ndarray:
    """A-res with the uniforms supplied; returns sorted item ids."""
    if k < 0:
        raise ValueError(f"sample size must be >= 0, got {k}")
    return kernels.topk_keys(ares_keys(pool.weights, u), pool.items, int(k))


def ares_sample(pool: WeightedPool, k: int, rng) -> np.ndarray:
    """Draw ``min(k, len(pool))`` distinct items, heavier items more likely."""
    if k < 0:
        raise ValueError(f"sample size must be >= 0, got {k}")
    u = as_generator(rng).random(len(pool))
    return ares_select(pool, k, u)
