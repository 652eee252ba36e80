"""Continuous targets: the Donuts ring density, random-walk M-H and Unbiased PNS."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .schemes import PartialNeighborScheme, SchemeError, SchemeKind


class DonutsModel:
    """Ring density on R^2: ``log f(x) = -(|x|^2 - mu0)^2 / (2 sigma^2)``.

    Equivalently ``X = sqrt(mu) (cos theta, sin theta)`` with
    ``mu ~ Normal+(mu0, sigma^2)`` truncated at zero and ``theta`` uniform on
    ``[0, 2 pi)``.
    """

    dimension = 2

    def __init__(self, mu0: float = 9.0, sigma: float = 0.1):
        if not sigma > 0:
            raise ValueError(f"sigma must be positive, got {sigma}")
        self.mu0 = float(mu0)
        self.sigma = float(sigma)

    def log_density(self, x) -> float:
        x = np.asarray(x, dtype=np.float64)
        r = x[..., 0] ** 2 + x[..., 1] ** 2 - self.mu0
        return -(r * r) / (2.0 * self.sigma**2)

    def make_target(self):
        return kernels.DonutsTarget(self.mu0, self.sigma)

    def sample_exact(self, size: int, rng: np.random.Generator) -> np.ndarray:
        """Direct draws through ``(mu, theta)``; negative ``mu`` are redrawn."""
        mu = rng.normal(self.mu0, self.sigma, size)
        bad = mu < 0
        while bad.any():
            mu[bad] = rng.normal(self.mu0, self.sigma, int(bad.sum()))
            bad = mu < 0
        theta = rng.uniform(0.0, 2.0 * np.pi, size)
        r = np.sqrt(mu)
        return np.column_stack([r * np.cos(theta), r * np.sin(theta)])


@dataclass
class ContinuousChain:
    states: np.ndarray
    multiplicities: np.ndarray
    stats: dict = field(default_factory=dict)

    def __post_init__(self):
        self.states = np.asarray(self.states, dtype=np.float64)
        self.multiplicities = np.asarray(self.multiplicities, dtype=np.int64)

    @property
    def original_size(self) -> int:
        return int(self.multiplicities.sum())

    @property
    def jump_size(self) -> int:
        return len(self.multiplicities)

    def __len__(self) -> int:
        return self.jump_size


def _target(model):
    make = getattr(model, "make_target", None)
    return make() if make is not None else kernels.DensityTarget(model)


def _start(model, x0) -> list[float]:
    if x0 is None:
        return [0.0] * int(model.dimension)
    x0 = np.asarray(x0, dtype=np.float64)
    if x0.shape != (model.dimension,):
        raise ValueError(f"x0 must have shape ({model.dimension},), got {x0.shape}")
    return x0.tolist()


def run_mh_continuous(
    model,
    step: float = 1.0,
    budget: int = 10_000,
    seed: int | np.random.Generator = 0,
    *,
    x0=None,
    burn_in: int | None = None,
) -> ContinuousChain:
    """Gaussian random-walk Metropolis with proposal ``N(x, step^2 I)``.

    ``burn_in`` original samples (default: ``budget``) are drawn and dropped
    first; the recorded chain continues from where they end.
    """
    if budget < 1:
        raise ValueError(f"budget must be positive, got {budget}")
    if not step > 0:
        raise ValueError(f"step must be positive, got {step}")
    gen = np.random.default_rng(seed)
    t = _target(model)
    x = _start(model, x0)
    nb = budget if burn_in is None else burn_in
    if nb:
        states, _, _ = kernels.mh_continuous(t, gen, x, step, nb)
        x = states[-1].tolist()
    states, mults, stats = kernels.mh_continuous(t, gen, x, step, budget)
    return ContinuousChain(states, mults, stats)


def run_unbiased_pns_continuous(
    model,
    scheme: PartialNeighborScheme | None = None,
    budget: int = 10_000,
    seed: int | np.random.Generator = 0,
    *,
    x0=None,
    burn_in: int | None = None,
) -> ContinuousChain:
    """Unbiased PNS with ``2 * num_pairs`` symmetric offset candidates per window.

    The offsets are redrawn after every window of ``L0`` original samples.
    A window in which every candidate has zero acceptance weight is spent
    in place and counted in ``stats["forced_repeats"]``.
    """
    scheme = scheme or PartialNeighborScheme.pairs(25, 1000)
    if scheme.kind is not SchemeKind.CONTINUOUS_PAIRS:
        raise SchemeError("continuous PNS needs a pairs scheme")
    if budget < 1:
        raise ValueError(f"budget must be positive, got {budget}")
    gen = np.random.default_rng(seed)
    t = _target(model)
    x = _start(model, x0)
    nb = budget if burn_in is None else burn_in
    if nb:
        states, _, _ = kernels.pns_continuous(t, gen, x, scheme.set_size, scheme.budget_L0, nb)
        x = states[-1].tolist()
    states, mults, stats = kernels.pns_continuous(
        t, gen, x, scheme.set_size, scheme.budget_L0, budget
    )
    return ContinuousChain(states, mults, stats)
