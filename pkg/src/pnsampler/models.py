"""Built-in discrete targets: QUBO, a three-state triangle and a 16-state hypercube."""
from __future__ import annotations

import math
import os
from typing import Sequence

import numpy as np

from . import kernels

#: Largest state space ``exact_distribution`` will enumerate by default.
MAX_EXACT_STATES = 2**20


class CapacityError(ValueError):
    """State space too large to enumerate."""


def _logsumexp(a: np.ndarray) -> float:
    m = float(np.max(a))
    return m + math.log(float(np.sum(np.exp(a - m))))


class QuboModel:
    """``pi(x) ∝ exp(x^T Q x)`` over bit vectors, single-flip moves with ``q = 1/N``.

    ``q_matrix`` is stored upper-triangular. A full matrix is folded
    (``Q_ij + Q_ji`` onto ``i < j``), which leaves ``x^T Q x`` unchanged.
    States are uint8 arrays; keys pack bit ``i`` into ``1 << i``.
    """

    uniform_proposal = True

    def __init__(self, q_matrix: np.ndarray):
        q = np.array(q_matrix, dtype=np.float64)
        if q.ndim != 2 or q.shape[0] != q.shape[1] or q.shape[0] < 1:
            raise ValueError(f"Q must be a non-empty square matrix, got shape {q.shape}")
        self.q_matrix = np.triu(q) + np.triu(q.T, 1)
        self.q_matrix.setflags(write=False)
        self.n_bits = q.shape[0]
        off = self.q_matrix + self.q_matrix.T
        np.fill_diagonal(off, 0.0)
        self._off = off
        self._diag = np.diag(self.q_matrix).copy()

    @property
    def n_moves(self) -> int:
        return self.n_bits

    @property
    def dimension(self) -> int:
        return self.n_bits

    @property
    def n_states(self) -> int:
        return 2**self.n_bits

    def _bits(self, state) -> np.ndarray:
        x = np.asarray(state, dtype=np.uint8)
        if x.shape != (self.n_bits,):
            raise ValueError(f"state must have {self.n_bits} bits, got shape {x.shape}")
        return x

    def log_weight(self, state) -> float:
        x = self._bits(state).astype(np.float64)
        return float(x @ self.q_matrix @ x)

    def flip_delta(self, state, i: int) -> float:
        return qubo_flip_delta(self, state, i)

    # DiscreteModel protocol
    def move(self, state, j: int):
        y = self._bits(state).copy()
        y[j] ^= 1
        return y

    def proposal_weight(self, state, j: int) -> float:
        return 1.0 / self.n_bits

    def log_ratio(self, state, j: int) -> float:
        return qubo_flip_delta(self, state, j)

    def key(self, state) -> int:
        x = self._bits(state)
        return int(np.sum(x.astype(np.int64) << np.arange(self.n_bits, dtype=np.int64)))

    def decode(self, key: int) -> np.ndarray:
        return ((int(key) >> np.arange(self.n_bits)) & 1).astype(np.uint8)

    def random_state(self, rng: np.random.Generator) -> np.ndarray:
        return (rng.random(self.n_bits) < 0.5).astype(np.uint8)

    def make_target(self, state):
        return kernels.QuboTarget(self._off, self._diag, self._bits(state))

    def log_weights_table(self) -> np.ndarray:
        """``log w`` for every key ``0 .. 2^N - 1``."""
        keys = np.arange(self.n_states, dtype=np.int64)
        out = np.empty(self.n_states)
        chunk = 1 << 16
        for lo in range(0, self.n_states, chunk):
            k = keys[lo : lo + chunk]
            x = ((k[:, None] >> np.arange(self.n_bits)) & 1).astype(np.float64)
            out[lo : lo + chunk] = np.einsum("si,ij,sj->s", x, self.q_matrix, x)
        return out

    # plain-text format: N, then the upper triangle row-major
    @classmethod
    def load(cls, path: str | os.PathLike) -> "QuboModel":
        with open(path) as fh:
            tokens = fh.read().split()
        if not tokens:
            raise ValueError(f"{path}: empty QUBO file")
        n = int(tokens[0])
        need = n * (n + 1) // 2
        if n < 1 or len(tokens) - 1 != need:
            raise ValueError(f"{path}: expected {need} entries for N={n}, found {len(tokens) - 1}")
        q = np.zeros((n, n))
        q[np.triu_indices(n)] = np.array(tokens[1:], dtype=np.float64)
        return cls(q)

    def save(self, path: str | os.PathLike) -> None:
        vals = self.q_matrix[np.triu_indices(self.n_bits)]
        with open(path, "w") as fh:
            fh.write(f"{self.n_bits}\n")
            fh.write(" ".join(repr(float(v)) for v in vals))
            fh.write("\n")


def qubo_flip_delta(model: QuboModel, state, i: int) -> float:
    """Change in ``x^T Q x`` when bit ``i`` (0-based) flips. O(N)."""
    if not 0 <= i < model.n_bits:
        raise IndexError(f"bit index {i} out of range for N={model.n_bits}")
    x = model._bits(state)
    h = model._diag[i] + float(model._off[i] @ x.astype(np.float64))
    return (1 - 2 * int(x[i])) * h


def make_qubo_random(n_bits: int, std_dev: float = 10.0, seed: int | None = None) -> QuboModel:
    """Upper-triangular ``Q`` with iid ``Normal(0, std_dev^2)`` entries."""
    if n_bits < 1:
        raise ValueError(f"n_bits must be positive, got {n_bits}")
    if not std_dev > 0:
        raise ValueError(f"std_dev must be positive, got {std_dev}")
    rng = np.random.default_rng(seed)
    q = np.zeros((n_bits, n_bits))
    iu = np.triu_indices(n_bits)
    q[iu] = rng.normal(0.0, std_dev, size=len(iu[0]))
    return QuboModel(q)


class TabularModel:
    """Explicit finite space with involutive move labels.

    ``targets[s, j]`` is the state reached from ``s`` by label ``j`` or ``-1``
    when ``j`` is not a move at ``s``; applying ``j`` at the target must lead
    back to ``s``. ``qprop[s, j]`` is ``q(s, targets[s, j])``.
    """

    def __init__(
        self,
        names: Sequence[str],
        log_weights: Sequence[float],
        targets: np.ndarray,
        qprop: np.ndarray | None = None,
    ):
        self.names = tuple(names)
        self.log_weights = np.asarray(log_weights, dtype=np.float64)
        self.targets = np.asarray(targets, dtype=np.int64)
        n_states, n_moves = self.targets.shape
        if len(self.names) != n_states or self.log_weights.shape != (n_states,):
            raise ValueError("names, log_weights and targets disagree on the number of states")
        if qprop is None:
            valid = self.targets >= 0
            qprop = valid / valid.sum(axis=1, keepdims=True)
        self.qprop = np.where(self.targets >= 0, np.asarray(qprop, dtype=np.float64), 0.0)
        self._validate()
        self.n_moves = n_moves
        self.uniform_proposal = bool(
            np.all(self.targets >= 0) and np.all(self.qprop == self.qprop.flat[0])
        )

    def _validate(self) -> None:
        for s, row in enumerate(self.targets):
            for j, t in enumerate(row):
                if t < 0:
                    continue
                if t >= len(self.names) or self.targets[t, j] != s:
                    raise ValueError(f"label {j} is not an involution at state {s}")
                if not self.qprop[s, j] > 0:
                    raise ValueError(f"valid move ({s}, {j}) needs a positive proposal weight")
        if not np.allclose(self.qprop.sum(axis=1), 1.0, atol=1e-12):
            raise ValueError("proposal rows must sum to 1")
        if not np.all(np.isfinite(self.log_weights)):
            raise ValueError("log weights must be finite")

    @property
    def n_states(self) -> int:
        return len(self.names)

    @property
    def dimension(self) -> int:
        return self.n_moves

    def log_weight(self, state) -> float:
        return float(self.log_weights[int(state)])

    def move(self, state, j: int):
        t = int(self.targets[int(state), j])
        return None if t < 0 else t

    def proposal_weight(self, state, j: int) -> float:
        return float(self.qprop[int(state), j])

    def key(self, state) -> int:
        return int(state)

    def decode(self, key: int) -> int:
        return int(key)

    def random_state(self, rng: np.random.Generator) -> int:
        return int(rng.random() * self.n_states)

    def make_target(self, state):
        return kernels.TableTarget(self.targets, self.qprop, self.log_weights, int(state))

    def log_weights_table(self) -> np.ndarray:
        return self.log_weights.copy()

    def neighbors(self, state) -> list[int]:
        return [int(t) for t in self.targets[int(state)] if t >= 0]


def triangle() -> TabularModel:
    """States A, B, C with ``pi ∝ (1, 2, 3)``; each state sees the other two with ``q = 1/2``.

    Move labels are the edges AB, AC, BC.
    """
    targets = np.array([[1, 2, -1], [0, -1, 2], [-1, 0, 1]])
    return TabularModel(("A", "B", "C"), np.log([1.0, 2.0, 3.0]), targets)


def hypercube16() -> TabularModel:
    """The 4-bit hypercube with ``pi(x) ∝ exp(popcount(x))``; label ``j`` flips bit ``j``."""
    states = np.arange(16)
    targets = states[:, None] ^ (1 << np.arange(4))[None, :]
    weights = np.array([bin(s).count("1") for s in states], dtype=np.float64)
    names = [format(s, "04b")[::-1] for s in states]
    return TabularModel(names, weights, targets)


def exact_distribution(model, max_states: int = MAX_EXACT_STATES) -> np.ndarray:
    """Normalized ``pi`` indexed by state key."""
    n = int(model.n_states)
    if n > max_states:
        raise CapacityError(f"{n} states exceeds the enumeration limit {max_states}")
    lw = model.log_weights_table()
    p = np.exp(lw - _logsumexp(lw))
    return p / p.sum()
