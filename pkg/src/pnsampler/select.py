"""Transition weights, proportional selection and multiplicity draws.

These are the reference Python versions of the primitives every
rejection-free sampler relies on. The compiled kernels inline the same
arithmetic and consume the random stream in the same order.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Any, Iterable

import numpy as np

#: Upper bound on a single geometric draw; guards ``p`` close to zero.
MULTIPLICITY_CAP = 2**62

_cap_hits = 0


def _exp(d: float) -> float:
    try:
        return math.exp(d)
    except OverflowError:
        return math.inf


def cap_hits() -> int:
    """How many multiplicity draws were clipped at ``MULTIPLICITY_CAP`` so far."""
    return _cap_hits


class NoCandidateError(ValueError):
    """Every candidate weight is zero, so nothing can be selected."""


@dataclass(frozen=True)
class TransitionWeights:
    weights: np.ndarray
    escape_probability: float


def transition_weights(
    model: Any,
    state: Any,
    moves: Iterable[int],
    *,
    restricted: bool = True,
) -> TransitionWeights:
    """Acceptance-weighted proposal mass for each candidate move.

    The proposal is renormalized over the valid labels in ``moves``. With
    ``restricted=True`` the reverse proposal is renormalized over the same
    labels at the target state, which gives the Hastings correction for an
    alternating partial set. With ``restricted=False`` the ratio uses the
    unrestricted proposal (the per-step subsets of basic PNS have no
    reverse counterpart).

    Density ratios only enter as ``exp(log w(y) - log w(x))`` and are capped
    by ``min``, so overflow cannot leak into the weights.
    """
    moves = [int(j) for j in moves]
    if not moves:
        raise ValueError("empty candidate set")
    log_ratio = getattr(model, "log_ratio", None)
    lx = model.log_weight(state)
    targets = [model.move(state, j) for j in moves]
    forward = np.array(
        [model.proposal_weight(state, j) if y is not None else 0.0 for j, y in zip(moves, targets)]
    )
    total = forward.sum()
    weights = np.zeros(len(moves))
    if total <= 0.0:
        return TransitionWeights(weights, 0.0)
    for c, (j, y) in enumerate(zip(moves, targets)):
        if y is None:
            continue
        d = log_ratio(state, j) if log_ratio is not None else model.log_weight(y) - lx
        q_xy = forward[c] / total
        q_back = model.proposal_weight(y, j)
        if restricted:
            back_total = sum(
                model.proposal_weight(y, k) for k in moves if model.move(y, k) is not None
            )
            weights[c] = min(q_xy, _exp(d) * q_back / back_total)
        else:
            weights[c] = q_xy * min(1.0, _exp(d) * q_back / forward[c])
    return TransitionWeights(weights, min(float(weights.sum()), 1.0))


def select_proportional(weights: Iterable[float], rng: np.random.Generator) -> int:
    """Index drawn with probability proportional to ``weights``.

    Draws ``R ~ Uniform(0, 1]`` for each positive entry, in order, and
    returns the argmin of ``-log(R) / w``. Zero entries draw nothing and are
    never chosen. Ties go to the lowest index.
    """
    w = np.asarray(weights, dtype=np.float64)
    positive = np.flatnonzero(w > 0.0)
    if positive.size == 0:
        raise NoCandidateError("all weights are zero")
    r = 1.0 - rng.random(positive.size)
    best, best_d = -1, math.inf
    for idx, ri in zip(positive.tolist(), r.tolist()):
        d = -math.log(ri) / w[idx]
        if d < best_d:
            best, best_d = idx, d
    return best


def sample_multiplicity(
    p: float,
    rng: np.random.Generator,
    cap: int | None = MULTIPLICITY_CAP,
) -> int:
    """``1 + G`` with ``G ~ Geometric(p)`` on ``{0, 1, ...}``, by inversion.

    ``p = 1`` returns 1 without consuming randomness. Draws above ``cap`` are
    clipped and counted (see :func:`cap_hits`).
    """
    global _cap_hits
    if not p > 0.0:
        raise ValueError(f"escape probability must be positive, got {p}")
    if p >= 1.0:
        return 1
    u = 1.0 - rng.random()
    g = math.floor(math.log(u) / math.log1p(-p))
    if cap is not None and g > cap:
        _cap_hits += 1
        warnings.warn(f"geometric draw clipped at {cap} (p={p:g})", RuntimeWarning, stacklevel=2)
        g = cap
    return 1 + g
