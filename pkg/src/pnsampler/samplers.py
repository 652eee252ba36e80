"""Discrete chains: M-H, Rejection-Free, Basic PNS, alternating chains and Unbiased PNS.

Every sampler spends exactly ``budget`` original samples and returns a
:class:`JumpChain` of distinct consecutive states with multiplicities. For
M-H style methods, equal consecutive states are merged for storage only.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable

import numpy as np

from . import kernels
from .schemes import PartialNeighborScheme, SchemeError, SchemeKind


class Method(str, Enum):
    MH = "mh"
    RF = "rf"
    BASIC_PNS = "basic_pns"
    MH_ALTERNATING = "mh_alternating"
    RF_ALTERNATING = "rf_alternating"
    UNBIASED_PNS = "unbiased_pns"
    UNBIASED_PNS_NAIVE = "unbiased_pns_naive"


@dataclass(frozen=True)
class BurnIn:
    """What happens before the recorded chain starts.

    ``discard`` runs the same sampler for ``count`` original samples (``None``
    means "as many as the budget") and drops them. ``optimize`` runs
    Optimization PNS for ``count`` steps and starts from its final state.
    """

    kind: str = "discard"
    count: int | None = None
    set_size: int | None = None

    def __post_init__(self):
        if self.kind not in ("none", "discard", "optimize"):
            raise ValueError(f"unknown burn-in kind {self.kind!r}")
        if self.count is not None and self.count < 0:
            raise ValueError(f"burn-in count must be nonnegative, got {self.count}")
        if self.kind == "optimize" and self.count is None:
            raise ValueError("optimize burn-in needs a step count")

    @classmethod
    def none(cls) -> "BurnIn":
        return cls("none")

    @classmethod
    def discard(cls, count: int | None = None) -> "BurnIn":
        return cls("discard", count)

    @classmethod
    def optimize(cls, steps: int, set_size: int | None = None) -> "BurnIn":
        return cls("optimize", steps, set_size)

    def discard_count(self, budget: int) -> int:
        if self.kind != "discard":
            return 0
        return budget if self.count is None else self.count


@dataclass(frozen=True)
class SamplerConfig:
    method: Method
    budget: int
    scheme: PartialNeighborScheme = field(default_factory=PartialNeighborScheme.full)
    seed: int = 0
    burn_in: BurnIn = field(default_factory=BurnIn.discard)
    start: Any = None

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        if self.budget < 1:
            raise ValueError(f"budget must be positive, got {self.budget}")


@dataclass
class JumpChain:
    """Jump states (as integer keys) with their multiplicities."""

    keys: np.ndarray
    multiplicities: np.ndarray
    model: Any = None
    stats: dict = field(default_factory=dict)
    final_state: Any = None

    def __post_init__(self):
        self.keys = np.asarray(self.keys, dtype=np.int64)
        self.multiplicities = np.asarray(self.multiplicities, dtype=np.int64)

    @property
    def original_size(self) -> int:
        return int(self.multiplicities.sum())

    @property
    def jump_size(self) -> int:
        return len(self.keys)

    @property
    def states(self) -> list:
        if self.model is None:
            return list(self.keys)
        return [self.model.decode(k) for k in self.keys]

    def __len__(self) -> int:
        return self.jump_size


def _target(model, state):
    make = getattr(model, "make_target", None)
    if make is not None:
        return make(state)
    return kernels.ModelTarget(model, state)


def _window_args(model, scheme: PartialNeighborScheme):
    """``(sets, random_n)`` for the kernel window rotation."""
    if scheme.kind is SchemeKind.RANDOM:
        return None, scheme.effective_size(model.n_moves)
    if scheme.kind is SchemeKind.CONTINUOUS_PAIRS:
        raise SchemeError("pair offsets only apply to continuous models")
    return scheme.systematic_sets(model.n_moves), 0


def _full_sets(model):
    return np.arange(model.n_moves, dtype=np.int64)[None, :]


def _mh(t, gen, budget, model, scheme):
    return kernels.mh_chain(t, gen, budget, _full_sets(model), budget + 1)


def _rf(t, gen, budget, model, scheme):
    return kernels.rf_chain(t, gen, budget, _full_sets(model), budget + 1)


def _basic(t, gen, budget, model, scheme):
    # only the set size matters: the subset is redrawn at every jump
    if scheme.kind is SchemeKind.CONTINUOUS_PAIRS:
        raise SchemeError("pair offsets only apply to continuous models")
    return kernels.basic_pns_chain(t, gen, budget, scheme.effective_size(model.n_moves))


def _mh_alt(t, gen, budget, model, scheme):
    sets, rn = _window_args(model, scheme)
    return kernels.mh_chain(t, gen, budget, sets, scheme.budget_L0, rn)


def _rf_alt(t, gen, budget, model, scheme):
    sets, rn = _window_args(model, scheme)
    return kernels.rf_chain(t, gen, budget, sets, scheme.budget_L0, rn, True)


_KERNELS: dict[Method, Callable] = {
    Method.MH: _mh,
    Method.RF: _rf,
    Method.BASIC_PNS: _basic,
    Method.MH_ALTERNATING: _mh_alt,
    Method.RF_ALTERNATING: _rf_alt,
    Method.UNBIASED_PNS: _rf_alt,
    # one proposal per step over the active set: the M-H alternating chain
    Method.UNBIASED_PNS_NAIVE: _mh_alt,
}


def prepare(model, config: SamplerConfig, gen: np.random.Generator):
    """Live kernel target positioned after the configured burn-in."""
    start = config.start if config.start is not None else model.random_state(gen)
    t = _target(model, start)
    bi = config.burn_in
    if bi.kind == "optimize" and bi.count:
        n = bi.set_size or config.scheme.set_size or max(1, model.n_moves // 2)
        kernels.opt_run(t, gen, bi.count, min(n, model.n_moves))
    elif bi.kind == "discard":
        count = bi.discard_count(config.budget)
        if count:
            _KERNELS[config.method](t, gen, count, model, config.scheme)
    return t


def sample(model, config: SamplerConfig, t, gen: np.random.Generator) -> JumpChain:
    """Record ``config.budget`` original samples from the target's current state."""
    keys, mults, stats = _KERNELS[config.method](t, gen, config.budget, model, config.scheme)
    return JumpChain(keys, mults, model, stats, t.snapshot())


def run(model, config: SamplerConfig) -> JumpChain:
    """Run ``config.method`` on ``model``; see the per-method wrappers."""
    gen = np.random.default_rng(config.seed)
    return sample(model, config, prepare(model, config, gen), gen)


def _as(method: Method, model, config: SamplerConfig) -> JumpChain:
    if config.method is not method:
        config = SamplerConfig(method, config.budget, config.scheme, config.seed, config.burn_in, config.start)
    return run(model, config)


def run_mh(model, config: SamplerConfig) -> JumpChain:
    """Metropolis-Hastings over the full neighbor set, one uniform per step."""
    return _as(Method.MH, model, config)


def run_rf(model, config: SamplerConfig) -> JumpChain:
    """Rejection-Free jump chain over the full neighbor set."""
    return _as(Method.RF, model, config)


def run_basic_pns(model, config: SamplerConfig) -> JumpChain:
    """Basic PNS: a fresh random subset at every jump. Biased by design."""
    return _as(Method.BASIC_PNS, model, config)


def run_mh_alternating(model, config: SamplerConfig) -> JumpChain:
    """M-H restricted to the active set, switching sets every ``L0`` steps."""
    return _as(Method.MH_ALTERNATING, model, config)


def run_rf_alternating(model, config: SamplerConfig) -> JumpChain:
    """Rejection-Free within windows of ``L0`` original samples, forced repeat at each window end."""
    return _as(Method.RF_ALTERNATING, model, config)


def run_unbiased_pns(model, config: SamplerConfig) -> JumpChain:
    """Unbiased PNS over systematic or random partial neighbor sets."""
    return _as(Method.UNBIASED_PNS, model, config)


def run_unbiased_pns_naive(model, config: SamplerConfig) -> JumpChain:
    """Unbiased PNS without the rejection-free step; the reference oracle."""
    return _as(Method.UNBIASED_PNS_NAIVE, model, config)
