"""Pure-Python chain kernels.

Line-for-line counterpart of ``_ckernels.pyx``. Both consume the
``numpy.random.Generator`` stream in the same order (one ``random()`` per
uniform, blocks of ``NORMAL_BLOCK`` normals), so a seed replays to the same
chain under either backend.
"""
from __future__ import annotations

import math

import numpy as np

NAME = "python"
MULTIPLICITY_CAP = 2.0**62
NORMAL_BLOCK = 4096


class NoExitError(ValueError):
    """The current state has no exit mass under the active neighbor set."""


def _exp(d):
    # C's exp saturates to inf; math.exp raises instead
    try:
        return math.exp(d)
    except OverflowError:
        return math.inf


# ---------------------------------------------------------------------------
# discrete targets


class QuboTarget:
    """Mutable bit-vector state for ``w(x) = x^T Q x`` with O(1) flip deltas.

    ``off`` is the symmetrized off-diagonal coupling ``Q + Q^T`` with a zero
    diagonal; ``diag`` holds ``Q_ii``. ``field[j]`` is the energy change of
    setting bit ``j`` from 0 to 1 given the other bits.
    """

    uniform = True

    def __init__(self, off: np.ndarray, diag: np.ndarray, bits: np.ndarray):
        self.off = np.ascontiguousarray(off, dtype=np.float64)
        self.diag = np.ascontiguousarray(diag, dtype=np.float64)
        self.n_moves = self.diag.shape[0]
        self.x = np.array(bits, dtype=np.uint8)
        self.field = self.diag + self.off @ self.x.astype(np.float64)
        xf = self.x.astype(np.float64)
        self.energy = float(xf @ self.diag + 0.5 * xf @ self.off @ xf)

    def valid(self, j):
        return True

    def delta(self, j):
        return self.field[j] if self.x[j] == 0 else -self.field[j]

    def q(self, j):
        return 1.0 / self.n_moves

    def q_back(self, j):
        return 1.0 / self.n_moves

    def back_mass(self, j, active):
        return len(active) / self.n_moves

    def apply(self, j):
        s = 1.0 if self.x[j] == 0 else -1.0
        self.energy += s * self.field[j]
        self.x[j] ^= 1
        self.field += s * self.off[j]

    def key(self):
        if self.n_moves > 62:
            raise OverflowError("state keys need n_bits <= 62")
        k = 0
        for i in range(self.n_moves):
            if self.x[i]:
                k |= 1 << i
        return k

    def log_weight(self):
        return self.energy

    def snapshot(self):
        return self.x.copy()

    # public helpers shared with the compiled backend
    def move_delta(self, j):
        return float(self.delta(j))

    def apply_move(self, j):
        self.apply(j)

    def state_key(self):
        return self.key()


class TableTarget:
    """Explicit finite space: ``targets[s, j]`` is the state reached by label ``j``
    (``-1`` when invalid) and ``qprop[s, j]`` its proposal weight."""

    def __init__(self, targets: np.ndarray, qprop: np.ndarray, logw: np.ndarray, start: int):
        self.targets = np.ascontiguousarray(targets, dtype=np.int64)
        self.qprop = np.ascontiguousarray(qprop, dtype=np.float64)
        self.logw = np.ascontiguousarray(logw, dtype=np.float64)
        self.n_moves = self.targets.shape[1]
        self.s = int(start)
        self.uniform = bool(np.all(self.targets >= 0) and np.all(self.qprop == self.qprop.flat[0]))

    def valid(self, j):
        return self.targets[self.s, j] >= 0

    def delta(self, j):
        return self.logw[self.targets[self.s, j]] - self.logw[self.s]

    def q(self, j):
        return self.qprop[self.s, j]

    def q_back(self, j):
        return self.qprop[self.targets[self.s, j], j]

    def back_mass(self, j, active):
        t = self.targets[self.s, j]
        total = 0.0
        for k in active:
            if self.targets[t, k] >= 0:
                total += self.qprop[t, k]
        return total

    def apply(self, j):
        self.s = int(self.targets[self.s, j])

    def key(self):
        return self.s

    def log_weight(self):
        return float(self.logw[self.s])

    def snapshot(self):
        return self.s

    def move_delta(self, j):
        return float(self.delta(j))

    def apply_move(self, j):
        self.apply(j)

    def state_key(self):
        return self.key()


class ModelTarget:
    """Adapter running any ``DiscreteModel`` through the kernels (slow path)."""

    def __init__(self, model, state):
        self.model = model
        self.state = state
        self.n_moves = int(model.n_moves)
        self.uniform = bool(getattr(model, "uniform_proposal", False))
        self._lw = float(model.log_weight(state))

    def _target(self, j):
        return self.model.move(self.state, int(j))

    def valid(self, j):
        return self._target(j) is not None

    def delta(self, j):
        return float(self.model.log_weight(self._target(j))) - self._lw

    def q(self, j):
        return float(self.model.proposal_weight(self.state, int(j)))

    def q_back(self, j):
        return float(self.model.proposal_weight(self._target(j), int(j)))

    def back_mass(self, j, active):
        y = self._target(j)
        total = 0.0
        for k in active:
            if self.model.move(y, int(k)) is not None:
                total += float(self.model.proposal_weight(y, int(k)))
        return total

    def apply(self, j):
        self.state = self._target(j)
        self._lw = float(self.model.log_weight(self.state))

    def key(self):
        return int(self.model.key(self.state))

    def log_weight(self):
        return self._lw

    def snapshot(self):
        return self.state

    def move_delta(self, j):
        return self.delta(j)

    def apply_move(self, j):
        self.apply(j)

    def state_key(self):
        return self.key()


# ---------------------------------------------------------------------------
# shared step primitives


def _weights(t, active, restricted):
    """Per-candidate weights over ``active`` and their sum."""
    n = len(active)
    a = [0.0] * n
    p = 0.0
    if t.uniform:
        inv = 1.0 / n
        for c in range(n):
            d = t.delta(active[c])
            a[c] = inv if d >= 0.0 else inv * math.exp(d)
            p += a[c]
        return a, p
    sx = 0.0
    for j in active:
        if t.valid(j):
            sx += t.q(j)
    if sx <= 0.0:
        return a, 0.0
    for c in range(n):
        j = active[c]
        if not t.valid(j):
            continue
        d = t.delta(j)
        qf = t.q(j) / sx
        if restricted:
            w = _exp(d) * t.q_back(j) / t.back_mass(j, active)
            a[c] = qf if qf < w else w
        else:
            w = _exp(d) * t.q_back(j) / t.q(j)
            a[c] = qf if w >= 1.0 else qf * w
        p += a[c]
    return a, p


def _select(gen, a):
    best, best_d = -1, math.inf
    for c in range(len(a)):
        if a[c] > 0.0:
            r = 1.0 - gen.random()
            d = -math.log(r) / a[c]
            if d < best_d:
                best, best_d = c, d
    return best


def _multiplicity(gen, p, stats):
    """Geometric holding time as a float so huge draws compare safely."""
    if p >= 1.0:
        return 1.0
    u = 1.0 - gen.random()
    g = math.floor(math.log(u) / math.log1p(-p))
    if g > MULTIPLICITY_CAP:
        g = MULTIPLICITY_CAP
        stats["cap_hits"] += 1
    return 1.0 + g


def _random_subset(gen, pool, n):
    pool = list(pool)
    m = len(pool)
    for k in range(n):
        r = k + int(gen.random() * (m - k))
        pool[k], pool[r] = pool[r], pool[k]
    return pool[:n]


def _propose(gen, t, active):
    """Draw a label from ``active`` proportional to ``q``; ``-1`` if none is valid."""
    if t.uniform:
        return active[int(gen.random() * len(active))]
    total = 0.0
    last = -1
    for j in active:
        if t.valid(j):
            total += t.q(j)
            last = j
    if last < 0:
        return -1
    target = gen.random() * total
    acc = 0.0
    for j in active:
        if t.valid(j):
            acc += t.q(j)
            if acc > target:
                return j
    return last


class _Windows:
    """Cycles systematic sets or redraws a random set at each window end."""

    def __init__(self, gen, sets, random_n, n_moves):
        self.gen = gen
        self.random_n = int(random_n)
        self.sets = [] if self.random_n else [list(map(int, s)) for s in np.asarray(sets, dtype=np.int64)]
        self.n_moves = n_moves
        self.i = 0
        self.windows = 0
        self.active = self._draw() if self.random_n else self.sets[0]

    def _draw(self):
        return _random_subset(self.gen, range(self.n_moves), self.random_n)

    def advance(self):
        self.windows += 1
        if self.random_n:
            self.active = self._draw()
        else:
            self.i = (self.i + 1) % len(self.sets)
            self.active = self.sets[self.i]


def _new_stats():
    return {"cap_hits": 0, "forced_repeats": 0, "windows": 0, "accepted": 0}


def _arrays(keys, mults):
    return np.array(keys, dtype=np.int64), np.array(mults, dtype=np.int64)


# ---------------------------------------------------------------------------
# discrete chains


def mh_chain(t, gen, budget, sets, L0, random_n=0):
    """Metropolis-Hastings over the active set, switching every ``L0`` steps.

    With a single full set this is plain M-H. Output is run-length encoded.
    """
    budget = int(budget)
    L0 = int(L0)
    win = _Windows(gen, sets, random_n, t.n_moves)
    stats = _new_stats()
    keys, mults = [], []
    L = L0
    for _ in range(budget):
        active = win.active
        j = _propose(gen, t, active)
        if j >= 0:
            u = gen.random()
            d = t.delta(j)
            if t.uniform:
                ratio = _exp(d)
            else:
                sx = 0.0
                for k in active:
                    if t.valid(k):
                        sx += t.q(k)
                ratio = _exp(d) * (t.q_back(j) / t.back_mass(j, active)) / (t.q(j) / sx)
            if u < ratio:
                t.apply(j)
                stats["accepted"] += 1
        k = t.key()
        if keys and keys[-1] == k:
            mults[-1] += 1
        else:
            keys.append(k)
            mults.append(1)
        L -= 1
        if L == 0:
            L = L0
            win.advance()
    stats["windows"] = win.windows
    return (*_arrays(keys, mults), stats)


def rf_chain(t, gen, budget, sets, L0, random_n=0, windowed=False):
    """Rejection-free jump chain; windowed mode is the alternating/unbiased PNS rule.

    Without windows a state with zero exit mass raises :class:`NoExitError`.
    With windows it stays for the rest of the window instead.
    """
    remaining = float(budget)
    L0f = float(L0)
    win = _Windows(gen, sets, random_n, t.n_moves)
    stats = _new_stats()
    keys, mults = [], []
    L = L0f
    while remaining > 0:
        a, p = _weights(t, win.active, True)
        if p > 0.0:
            m = _multiplicity(gen, p, stats)
        elif windowed:
            m = math.inf
        else:
            raise NoExitError(f"state {t.key()} has no exit mass")
        if not windowed or m <= L:
            rec = m if m < remaining else remaining
            keys.append(t.key())
            mults.append(int(rec))
            remaining -= rec
            if windowed:
                L -= m
            if remaining <= 0:
                break
            t.apply(win.active[_select(gen, a)])
        else:
            if p <= 0.0:
                stats["forced_repeats"] += 1
            if L > 0:
                rec = L if L < remaining else remaining
                keys.append(t.key())
                mults.append(int(rec))
                remaining -= rec
            L = L0f
            win.advance()
    stats["windows"] = win.windows
    return (*_arrays(keys, mults), stats)


def basic_pns_chain(t, gen, budget, set_size):
    """Rejection-free moves over a fresh random subset of valid labels each step."""
    remaining = float(budget)
    n = int(set_size)
    stats = _new_stats()
    keys, mults = [], []
    labels = range(t.n_moves)
    while remaining > 0:
        pool = labels if t.uniform else [j for j in labels if t.valid(j)]
        active = _random_subset(gen, pool, min(n, len(pool)))
        if not active:
            raise NoExitError(f"state {t.key()} has no valid moves")
        a, p = _weights(t, active, False)
        if not p > 0.0:
            raise NoExitError(f"state {t.key()} has no exit mass")
        m = _multiplicity(gen, p, stats)
        rec = m if m < remaining else remaining
        keys.append(t.key())
        mults.append(int(rec))
        remaining -= rec
        if remaining <= 0:
            break
        t.apply(active[_select(gen, a)])
    return (*_arrays(keys, mults), stats)


# ---------------------------------------------------------------------------
# optimizers


def sa_run(t, gen, steps, T0, ratio):
    """Tempered Metropolis with running maximum; temperature ``T0 * ratio**k``."""
    best = t.log_weight()
    best_state = t.snapshot()
    T = float(T0)
    labels = list(range(t.n_moves))
    for _ in range(int(steps)):
        j = _propose(gen, t, labels)
        if j >= 0:
            u = gen.random()
            d = t.delta(j)
            if u < _exp(d / T):
                t.apply(j)
                lw = t.log_weight()
                if lw > best:
                    best = lw
                    best_state = t.snapshot()
        T *= ratio
    return best, best_state


def opt_run(t, gen, steps, set_size):
    """Optimization RF (``set_size >= n_moves``) or optimization PNS, with running max."""
    best = t.log_weight()
    best_state = t.snapshot()
    n = int(set_size)
    labels = list(range(t.n_moves))
    full = n >= t.n_moves
    for _ in range(int(steps)):
        pool = labels if t.uniform else [j for j in labels if t.valid(j)]
        if full:
            active = pool
        else:
            active = _random_subset(gen, pool, min(n, len(pool)))
        if not active:
            continue
        a, p = _weights(t, active, False)
        if not p > 0.0:
            continue
        t.apply(active[_select(gen, a)])
        lw = t.log_weight()
        if lw > best:
            best = lw
            best_state = t.snapshot()
    return best, best_state


# ---------------------------------------------------------------------------
# continuous targets and chains


class DonutsTarget:
    """Ring density ``-(|x|^2 - mu0)^2 / (2 sigma^2)`` on R^2."""

    def __init__(self, mu0, sigma):
        self.mu0 = float(mu0)
        self.sigma = float(sigma)
        self.dim = 2
        self._scale = 1.0 / (2.0 * self.sigma * self.sigma)

    def logdens(self, x):
        r = x[0] * x[0] + x[1] * x[1] - self.mu0
        return -r * r * self._scale

    def log_density(self, x):
        return self.logdens(np.asarray(x, dtype=np.float64))


class DensityTarget:
    """Adapter for any ``ContinuousModel``."""

    def __init__(self, model):
        self.model = model
        self.dim = int(model.dimension)

    def logdens(self, x):
        return float(self.model.log_density(np.array(x, dtype=np.float64)))

    def log_density(self, x):
        return self.logdens(x)


class _Normals:
    def __init__(self, gen):
        self.gen = gen
        self.buf = []
        self.pos = 0

    def next(self):
        if self.pos == len(self.buf):
            self.buf = self.gen.standard_normal(NORMAL_BLOCK).tolist()
            self.pos = 0
        z = self.buf[self.pos]
        self.pos += 1
        return z


def mh_continuous(t, gen, x0, step, budget):
    """Gaussian random-walk Metropolis; run-length encoded output."""
    dim = t.dim
    x = [float(v) for v in x0]
    lx = t.logdens(x)
    normals = _Normals(gen)
    stats = _new_stats()
    states, mults = [], []
    y = [0.0] * dim
    for _ in range(int(budget)):
        for c in range(dim):
            y[c] = x[c] + step * normals.next()
        ly = t.logdens(y)
        u = gen.random()
        if u < _exp(ly - lx):
            x, y = y, x
            lx = ly
            stats["accepted"] += 1
            states.append(list(x))
            mults.append(1)
        elif states:
            mults[-1] += 1
        else:
            states.append(list(x))
            mults.append(1)
    return np.array(states, dtype=np.float64).reshape(-1, dim), np.array(mults, dtype=np.int64), stats


def pns_continuous(t, gen, x0, num_pairs, L0, budget):
    """Unbiased PNS with a fresh set of +/- offset pairs at every window end."""
    dim = t.dim
    n = 2 * int(num_pairs)
    x = [float(v) for v in x0]
    stats = _new_stats()
    states, mults = [], []
    remaining = float(budget)
    L0f = float(L0)
    L = L0f
    inv = 1.0 / n

    def draw_offsets():
        delta = gen.standard_normal((int(num_pairs), dim))
        out = np.empty((n, dim))
        out[0::2] = delta
        out[1::2] = -delta
        return out.tolist()

    offsets = draw_offsets()
    y = [0.0] * dim
    while remaining > 0:
        lx = t.logdens(x)
        a = [0.0] * n
        p = 0.0
        for c in range(n):
            off = offsets[c]
            for e in range(dim):
                y[e] = x[e] + off[e]
            d = t.logdens(y) - lx
            if d >= 0.0:
                a[c] = inv
            elif d > -math.inf:
                a[c] = inv * math.exp(d)
            p += a[c]
        m = _multiplicity(gen, p, stats) if p > 0.0 else math.inf
        if m <= L:
            rec = m if m < remaining else remaining
            states.append(list(x))
            mults.append(int(rec))
            remaining -= rec
            L -= m
            if remaining <= 0:
                break
            off = offsets[_select(gen, a)]
            x = [x[e] + off[e] for e in range(dim)]
        else:
            if p <= 0.0:
                stats["forced_repeats"] += 1
            if L > 0:
                rec = L if L < remaining else remaining
                states.append(list(x))
                mults.append(int(rec))
                remaining -= rec
            L = L0f
            stats["windows"] += 1
            offsets = draw_offsets()
    return np.array(states, dtype=np.float64).reshape(-1, dim), np.array(mults, dtype=np.int64), stats
