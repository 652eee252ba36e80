"""Target-model interfaces and partial neighbor set construction.

Discrete models expose their moves as integer labels ``0 .. n_moves - 1``.
Applying label ``j`` to a state and then applying ``j`` again returns the
original state, so any set of labels is automatically symmetric: if ``y`` is
reachable from ``x`` through the set, ``x`` is reachable from ``y`` through the
same set. Partial neighbor sets are therefore sets of labels and never depend
on the current state.

All index sets here are 0-based.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Protocol, runtime_checkable

import numpy as np


class SchemeError(ValueError):
    """Invalid partial neighbor scheme parameters."""


@runtime_checkable
class DiscreteModel(Protocol):
    """Unnormalized target over a discrete space with labelled moves.

    ``move(state, j)`` returns the neighbor reached by label ``j`` or ``None``
    when the label is not a valid move at ``state``. ``proposal_weight`` is
    ``q(x, y)`` for that neighbor and must be positive exactly when the move
    is valid.
    """

    n_moves: int

    def log_weight(self, state: Any) -> float: ...

    def move(self, state: Any, j: int) -> Any: ...

    def proposal_weight(self, state: Any, j: int) -> float: ...

    def key(self, state: Any) -> int: ...


@runtime_checkable
class ContinuousModel(Protocol):
    """Unnormalized log density on R^dim; ``-inf`` off the support."""

    dimension: int

    def log_density(self, x: np.ndarray) -> float: ...


class SchemeKind(str, Enum):
    FULL = "full"
    SYSTEMATIC = "systematic"
    RANDOM = "random"
    CONTINUOUS_PAIRS = "pairs"


@dataclass(frozen=True)
class PartialNeighborScheme:
    """Rule producing the active neighbor subset for each ``L0`` window.

    ``set_size`` is the number of move labels per set for the discrete
    variants and the number of +/- offset pairs for ``CONTINUOUS_PAIRS``.
    """

    kind: SchemeKind = SchemeKind.FULL
    set_size: int | None = None
    budget_L0: int = 100

    def __post_init__(self):
        object.__setattr__(self, "kind", SchemeKind(self.kind))
        if self.budget_L0 < 1:
            raise SchemeError(f"L0 must be positive, got {self.budget_L0}")
        if self.kind is not SchemeKind.FULL:
            if self.set_size is None or self.set_size < 1:
                raise SchemeError(f"{self.kind.value} scheme needs a positive set_size")

    @classmethod
    def full(cls, L0: int = 100) -> "PartialNeighborScheme":
        return cls(SchemeKind.FULL, None, L0)

    @classmethod
    def systematic(cls, set_size: int, L0: int = 100) -> "PartialNeighborScheme":
        return cls(SchemeKind.SYSTEMATIC, set_size, L0)

    @classmethod
    def random(cls, set_size: int, L0: int = 100) -> "PartialNeighborScheme":
        return cls(SchemeKind.RANDOM, set_size, L0)

    @classmethod
    def pairs(cls, num_pairs: int, L0: int = 1000) -> "PartialNeighborScheme":
        return cls(SchemeKind.CONTINUOUS_PAIRS, num_pairs, L0)

    @property
    def candidate_count(self) -> int:
        """Candidates per state for a pairs scheme: both signs of every offset."""
        if self.kind is not SchemeKind.CONTINUOUS_PAIRS:
            raise SchemeError("candidate_count applies to the pairs scheme")
        return 2 * self.set_size

    def effective_size(self, n_moves: int) -> int:
        if self.kind is SchemeKind.CONTINUOUS_PAIRS:
            raise SchemeError("pair offsets only apply to continuous models")
        if self.kind is SchemeKind.FULL:
            return n_moves
        if self.set_size > n_moves:
            raise SchemeError(f"set_size {self.set_size} exceeds {n_moves} moves")
        return self.set_size

    def systematic_sets(self, n_moves: int) -> np.ndarray:
        """All sets of one full systematic cycle, shape ``(n_sets, set_size)``.

        ``FULL`` yields the single set of every label. ``RANDOM`` has no fixed
        cycle and is rejected.
        """
        if self.kind is SchemeKind.FULL:
            return np.arange(n_moves, dtype=np.int64)[None, :]
        if self.kind is not SchemeKind.SYSTEMATIC:
            raise SchemeError(f"{self.kind.value} scheme has no systematic cycle")
        n = self.effective_size(n_moves)
        return np.stack([systematic_index_set(n_moves, n, i) for i in range(cycle_length(n_moves, n))])


def _check_sizes(N: int, n: int) -> None:
    if N < 1 or n < 1 or n > N:
        raise SchemeError(f"need 1 <= n <= N, got n={n}, N={N}")


def cycle_length(N: int, n: int) -> int:
    """Number of distinct systematic sets before the sequence repeats."""
    _check_sizes(N, n)
    return N // math.gcd(N, n)


def systematic_index_set(N: int, n: int, i: int) -> np.ndarray:
    """The ``i``-th systematic set: ``n`` consecutive labels starting at ``i*n mod N``.

    Blocks wrap around, so for ``N=16, n=14`` the second set is
    ``{14, 15, 0, ..., 11}``.
    """
    _check_sizes(N, n)
    if i < 0:
        raise SchemeError(f"set index must be nonnegative, got {i}")
    start = (i * n) % N
    return (start + np.arange(n, dtype=np.int64)) % N


def random_index_set(N: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform ``n``-subset of ``range(N)`` via a partial Fisher-Yates shuffle.

    Consumes exactly ``n`` uniform doubles from ``rng``; the kernels draw
    subsets the same way so replays agree. Returned in draw order.
    """
    _check_sizes(N, n)
    pool = list(range(N))
    for k in range(n):
        r = k + int(rng.random() * (N - k))
        pool[k], pool[r] = pool[r], pool[k]
    return np.array(pool[:n], dtype=np.int64)


def symmetric_pair_offsets(dim: int, num_pairs: int, rng: np.random.Generator) -> np.ndarray:
    """``2 * num_pairs`` offsets ``delta_1, -delta_1, delta_2, -delta_2, ...``.

    The ``delta_i`` are iid standard-normal rows. Interleaving the pairs makes
    the sum exactly zero under any floating-point summation order.
    """
    if dim < 1 or num_pairs < 1:
        raise SchemeError(f"need dim >= 1 and num_pairs >= 1, got {dim}, {num_pairs}")
    return pair_up(rng.standard_normal((num_pairs, dim)))


def pair_up(delta: np.ndarray) -> np.ndarray:
    out = np.empty((2 * delta.shape[0], delta.shape[1]))
    out[0::2] = delta
    out[1::2] = -delta
    return out
