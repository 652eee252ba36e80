"""Simulated Annealing, Optimization Rejection-Free and Optimization PNS.

All three track the running maximum of ``log pi``. Optimization PNS also
serves as a warm-start burn-in for the samplers (:func:`hybrid_burn_in`).
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Any

import numpy as np

from . import kernels
from .samplers import BurnIn, JumpChain, SamplerConfig, _rf_alt, _target, run
from .schemes import PartialNeighborScheme, SchemeKind


@dataclass(frozen=True)
class CoolingSchedule:
    """``T(k) = T_start * ratio**k``; ``ratio = 1`` is a constant schedule."""

    T_start: float = 1.0
    ratio: float = 1.0

    def __post_init__(self):
        if not self.T_start > 0:
            raise ValueError(f"temperature must be positive, got {self.T_start}")
        if not 0 < self.ratio <= 1:
            raise ValueError(f"ratio must lie in (0, 1], got {self.ratio}")

    @classmethod
    def constant(cls, T: float = 1.0) -> "CoolingSchedule":
        return cls(T, 1.0)

    @classmethod
    def geometric(cls, T_start: float, ratio: float) -> "CoolingSchedule":
        return cls(T_start, ratio)

    def evaluate(self, k: int) -> float:
        return self.T_start * self.ratio**k


@dataclass
class OptimizationResult:
    best_state: Any
    best_log_weight: float
    trajectory_length: int
    final_state: Any = None


def _start(model, start, gen):
    return start if start is not None else model.random_state(gen)


def run_sa(
    model,
    schedule: CoolingSchedule | None = None,
    steps: int = 1000,
    seed: int = 0,
    *,
    start=None,
) -> OptimizationResult:
    """Tempered Metropolis accepting with ``min(1, (pi(y)/pi(x))**(1/T(k)))``."""
    if steps < 1:
        raise ValueError(f"steps must be positive, got {steps}")
    schedule = schedule or CoolingSchedule.constant(1.0)
    gen = np.random.default_rng(seed)
    t = _target(model, _start(model, start, gen))
    best, best_state = kernels.sa_run(t, gen, steps, schedule.T_start, schedule.ratio)
    return OptimizationResult(best_state, float(best), steps, t.snapshot())


def run_opt_rf(model, steps: int = 1000, seed: int = 0, *, start=None) -> OptimizationResult:
    """Rejection-free moves over the full neighbor set; multiplicities are skipped."""
    if steps < 1:
        raise ValueError(f"steps must be positive, got {steps}")
    gen = np.random.default_rng(seed)
    t = _target(model, _start(model, start, gen))
    best, best_state = kernels.opt_run(t, gen, steps, model.n_moves)
    return OptimizationResult(best_state, float(best), steps, t.snapshot())


def _subset_size(model, scheme) -> int:
    if isinstance(scheme, int):
        return scheme
    if scheme.kind is SchemeKind.FULL:
        return model.n_moves
    return scheme.effective_size(model.n_moves)


def run_opt_pns(
    model,
    scheme: PartialNeighborScheme | int,
    steps: int = 1000,
    seed: int = 0,
    *,
    start=None,
) -> OptimizationResult:
    """Rejection-free moves over a fresh random subset of labels at every step."""
    if steps < 1:
        raise ValueError(f"steps must be positive, got {steps}")
    n = _subset_size(model, scheme)
    if not 1 <= n <= model.n_moves:
        raise ValueError(f"subset size must lie in [1, {model.n_moves}], got {n}")
    gen = np.random.default_rng(seed)
    t = _target(model, _start(model, start, gen))
    best, best_state = kernels.opt_run(t, gen, steps, n)
    return OptimizationResult(best_state, float(best), steps, t.snapshot())


def hybrid_burn_in(
    model,
    opt_steps: int,
    config: SamplerConfig,
    *,
    set_size: int | None = None,
    start_from_best: bool = False,
) -> tuple[Any, JumpChain]:
    """Optimization PNS for ``opt_steps`` from a uniform state, then ``config``'s sampler.

    The sampler starts from the optimizer's final state (or its best state
    with ``start_from_best``) and runs without any further burn-in.
    Returns ``(start_state, chain)``.
    """
    if opt_steps < 0:
        raise ValueError(f"opt_steps must be nonnegative, got {opt_steps}")
    gen = np.random.default_rng(config.seed)
    state = _start(model, config.start, gen)
    if opt_steps:
        n = set_size or config.scheme.set_size or max(1, model.n_moves // 2)
        t = _target(model, state)
        _, best_state = kernels.opt_run(t, gen, opt_steps, min(n, model.n_moves))
        state = best_state if start_from_best else t.snapshot()
    seed = int(gen.integers(0, 2**63))
    chain = run(
        model,
        SamplerConfig(config.method, config.budget, config.scheme, seed, BurnIn.none(), state),
    )
    return state, chain


def last_states(
    model,
    method: str,
    K1: int,
    K0: int = 0,
    replications: int = 1000,
    seed: int = 0,
    *,
    scheme: PartialNeighborScheme | None = None,
    opt_set_size: int | None = None,
) -> tuple[np.ndarray, float]:
    """Final-state keys of ``replications`` short chains, and their total CPU seconds.

    Each chain starts uniformly at random, runs ``K0`` Optimization PNS steps,
    then ``K1`` original samples of ``method`` (``"rf"`` or ``"unbiased_pns"``).
    All replications share one generator seeded by ``seed``.
    """
    if K1 < 1 or K0 < 0 or replications < 1:
        raise ValueError("need K1 >= 1, K0 >= 0 and replications >= 1")
    if method not in ("rf", "unbiased_pns"):
        raise ValueError(f"unsupported method {method!r}")
    scheme = scheme or PartialNeighborScheme.systematic(model.n_moves // 2, 100)
    n_opt = opt_set_size or max(1, model.n_moves // 2)
    full = np.arange(model.n_moves, dtype=np.int64)[None, :]
    gen = np.random.default_rng(seed)
    keys = np.empty(replications, dtype=np.int64)
    t0 = time.process_time()
    for r in range(replications):
        t = _target(model, model.random_state(gen))
        if K0:
            kernels.opt_run(t, gen, K0, n_opt)
        if method == "rf":
            kernels.rf_chain(t, gen, K1, full, K1 + 1)
        else:
            _rf_alt(t, gen, K1, model, scheme)
        keys[r] = t.state_key()
    return keys, time.process_time() - t0
