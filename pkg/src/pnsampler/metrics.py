"""Weighted empirical distributions, TVD, estimators and the Donuts bias suite."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable, Mapping, NamedTuple

import numpy as np


@dataclass
class WeightedEmpirical:
    """Multiplicity mass per state key."""

    mass: Counter = field(default_factory=Counter)

    @property
    def total(self) -> int:
        return sum(self.mass.values())

    @classmethod
    def from_keys(cls, keys: Iterable[int], multiplicities: Iterable[int] | None = None):
        keys = np.asarray(keys, dtype=np.int64)
        mults = np.ones(len(keys), np.int64) if multiplicities is None else np.asarray(multiplicities)
        if np.any(mults < 1):
            raise ValueError("multiplicities must be positive")
        uk, inv = np.unique(keys, return_inverse=True)
        sums = np.bincount(inv, weights=mults.astype(np.float64), minlength=len(uk))
        return cls(Counter({int(k): int(m) for k, m in zip(uk, sums)}))

    @classmethod
    def from_chain(cls, chain) -> "WeightedEmpirical":
        return cls.from_keys(chain.keys, chain.multiplicities)

    def merge(self, other: "WeightedEmpirical") -> "WeightedEmpirical":
        return WeightedEmpirical(self.mass + other.mass)

    def probability(self, key: int) -> float:
        return self.mass.get(int(key), 0) / self.total

    def dense(self, size: int) -> np.ndarray:
        """Probability vector over keys ``0 .. size - 1``."""
        if self.mass and (max(self.mass) >= size or min(self.mass) < 0):
            raise ValueError(f"empirical has keys outside the {size}-state space")
        p = np.zeros(size)
        total = self.total
        for k, m in self.mass.items():
            p[k] = m / total
        return p


def _as_vector(d, size: int | None) -> np.ndarray:
    if isinstance(d, WeightedEmpirical):
        if size is None:
            raise ValueError("cannot compare two empiricals without a state-space size")
        return d.dense(size)
    if isinstance(d, Mapping):
        if size is None:
            raise ValueError("cannot compare mappings without a state-space size")
        v = np.zeros(size)
        for k, p in d.items():
            if not 0 <= int(k) < size:
                raise ValueError(f"key {k} outside the {size}-state space")
            v[int(k)] = p
        return v
    v = np.asarray(d, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError("probability tables must be 1-D")
    return v


def tvd(p, q, size: int | None = None) -> float:
    """``0.5 * sum |p - q|`` over a shared finite space.

    Either argument may be a :class:`WeightedEmpirical`, a key->probability
    mapping or a dense vector indexed by key. Missing keys count as zero.
    """
    if size is None:
        for d in (p, q):
            if not isinstance(d, (WeightedEmpirical, Mapping)):
                size = len(d)
                break
    a, b = _as_vector(p, size), _as_vector(q, size)
    if a.shape != b.shape:
        raise ValueError(f"state spaces differ: {a.shape[0]} vs {b.shape[0]}")
    return float(min(1.0, 0.5 * np.abs(a - b).sum()))


def estimate(chain, h: Callable) -> float:
    """``sum M_k h(J_k) / sum M_k``."""
    m = np.asarray(chain.multiplicities, dtype=np.float64)
    if m.size == 0:
        raise ValueError("empty chain")
    states = chain.states
    vals = np.array([h(s) for s in states], dtype=np.float64)
    return float(np.dot(m, vals) / m.sum())


class DonutsBias(NamedTuple):
    first: float
    second: float
    fourth: float
    positive: float


@lru_cache(maxsize=8)
def donuts_reference_moments(
    mu0: float, sigma: float, draws: int = 10**7, seed: int = 20220801
) -> tuple[float, float]:
    """``(E X1^2, E X1^4)`` by direct simulation of ``(mu, theta)``.

    ``theta`` is stratified into ``draws`` equal cells with one uniform point
    each, which removes almost all angular noise; ``mu`` is plain Monte Carlo
    from the zero-truncated normal. Both coordinates share these values.
    """
    rng = np.random.default_rng(seed)
    s2 = s4 = 0.0
    chunk = 1 << 20
    for lo in range(0, draws, chunk):
        n = min(chunk, draws - lo)
        mu = rng.normal(mu0, sigma, n)
        bad = mu < 0
        while bad.any():
            mu[bad] = rng.normal(mu0, sigma, int(bad.sum()))
            bad = mu < 0
        theta = 2.0 * np.pi * (np.arange(lo, lo + n) + rng.random(n)) / draws
        c2 = np.cos(theta) ** 2
        s2 += float(np.sum(mu * c2))
        s4 += float(np.sum(mu * mu * c2 * c2))
    return s2 / draws, s4 / draws


def donuts_bias_suite(chain, mu0: float = 9.0, sigma: float = 0.1, **oracle) -> DonutsBias:
    """Bias sums over ``X1`` and ``X2`` for degree-1, 2, 4 moments and ``1(X > 0)``.

    ``chain`` needs ``states`` of shape ``(K, 2)`` and ``multiplicities``.
    """
    x = np.asarray(chain.states, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != 2:
        raise ValueError(f"expected 2-D states, got shape {x.shape}")
    w = np.asarray(chain.multiplicities, dtype=np.float64)
    w = w / w.sum()
    m2, m4 = donuts_reference_moments(float(mu0), float(sigma), **oracle)

    def bias(f, ref):
        return float(sum(abs(np.dot(w, f(x[:, c])) - ref) for c in range(2)))

    return DonutsBias(
        first=bias(lambda v: v, 0.0),
        second=bias(lambda v: v * v, m2),
        fourth=bias(lambda v: v**4, m4),
        positive=bias(lambda v: (v > 0).astype(np.float64), 0.5),
    )


def starting_distribution(last_states: Iterable[int], exact) -> float:
    """TVD between the empirical of replication end states (unit mass each) and ``exact``."""
    keys = np.asarray(list(last_states), dtype=np.int64)
    if keys.size == 0:
        raise ValueError("need at least one replication")
    return tvd(WeightedEmpirical.from_keys(keys), exact)
