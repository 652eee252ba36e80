"""Exact reference computations used by the tests (no sampling)."""
from __future__ import annotations

import itertools
import math

import numpy as np


def basic_pns_limit(model, set_size: int) -> np.ndarray:
    """Long-run time fraction of Basic PNS on a tabular model, computed exactly.

    Each jump draws a uniform ``set_size``-subset of the valid labels. For a
    subset ``S`` the escape mass is ``p_S = sum_{j in S} a_j`` with
    ``a_j = q_S(j) min(1, pi(y) q(y, x) / (pi(x) q(x, y)))``. The embedded
    jump chain has ``P(x, y) = E_S[a_y / p_S]`` and the mean holding time is
    ``E_S[1 / p_S]``; by renewal-reward the time fraction is proportional to
    ``nu(x) E_S[1 / p_S]`` where ``nu`` is stationary for ``P``.
    """
    n = model.n_states
    P = np.zeros((n, n))
    hold = np.zeros(n)
    for x in range(n):
        labels = [j for j in range(model.n_moves) if model.move(x, j) is not None]
        k = min(set_size, len(labels))
        subsets = list(itertools.combinations(labels, k))
        for S in subsets:
            qs = np.array([model.proposal_weight(x, j) for j in S])
            qf = qs / qs.sum()
            a = []
            for c, j in enumerate(S):
                y = model.move(x, j)
                r = math.exp(model.log_weight(y) - model.log_weight(x))
                r *= model.proposal_weight(y, j) / model.proposal_weight(x, j)
                a.append(qf[c] * min(1.0, r))
            p = sum(a)
            hold[x] += (1.0 / p) / len(subsets)
            for c, j in enumerate(S):
                P[x, model.move(x, j)] += a[c] / p / len(subsets)
    w, v = np.linalg.eig(P.T)
    nu = np.real(v[:, np.argmin(np.abs(w - 1.0))])
    nu = nu / nu.sum()
    f = nu * hold
    return f / f.sum()


def chi2_sf(stat: float, dof: int) -> float:
    """Upper tail of the chi-square distribution (regularized gamma)."""
    from scipy.stats import chi2

    return float(chi2.sf(stat, dof))
