# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled chain kernels.

Mirror of ``_pykernels.py``: same algorithms, same arithmetic, same order
of draws from the shared ``numpy.random.Generator`` bit stream.
"""
import numpy as np
cimport numpy as cnp
from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.math cimport exp, log, log1p, floor, INFINITY
from numpy.random cimport bitgen_t

cnp.import_array()

NAME = "cython"
MULTIPLICITY_CAP = 2.0 ** 62
NORMAL_BLOCK = 4096
cdef double CAP = 2.0 ** 62


class NoExitError(ValueError):
    """The current state has no exit mass under the active neighbor set."""


cdef inline bitgen_t* _bitgen(gen) except NULL:
    return <bitgen_t*> PyCapsule_GetPointer(gen.bit_generator.capsule, "BitGenerator")


cdef inline double _uniform(bitgen_t* bg) noexcept nogil:
    return bg.next_double(bg.state)


# ---------------------------------------------------------------------------
# growable output buffers


cdef class _KeyBuffer:
    cdef cnp.int64_t[::1] keys
    cdef cnp.int64_t[::1] mults
    cdef Py_ssize_t n
    cdef object _k, _m

    def __cinit__(self, Py_ssize_t capacity=1024):
        self._k = np.empty(capacity, dtype=np.int64)
        self._m = np.empty(capacity, dtype=np.int64)
        self.keys = self._k
        self.mults = self._m
        self.n = 0

    cdef void _grow(self):
        cdef Py_ssize_t cap = 2 * self.keys.shape[0]
        self._k = np.resize(self._k, cap)
        self._m = np.resize(self._m, cap)
        self.keys = self._k
        self.mults = self._m

    cdef inline void push(self, long long key, long long mult):
        if self.n == self.keys.shape[0]:
            self._grow()
        self.keys[self.n] = key
        self.mults[self.n] = mult
        self.n += 1

    cdef inline void push_merge(self, long long key):
        if self.n > 0 and self.keys[self.n - 1] == key:
            self.mults[self.n - 1] += 1
        else:
            self.push(key, 1)

    def result(self):
        return self._k[:self.n].copy(), self._m[:self.n].copy()


cdef class _VecBuffer:
    cdef double[:, ::1] states
    cdef cnp.int64_t[::1] mults
    cdef Py_ssize_t n
    cdef int dim
    cdef object _s, _m

    def __cinit__(self, int dim, Py_ssize_t capacity=1024):
        self.dim = dim
        self._s = np.empty((capacity, dim), dtype=np.float64)
        self._m = np.empty(capacity, dtype=np.int64)
        self.states = self._s
        self.mults = self._m
        self.n = 0

    cdef void push(self, double* x, long long mult):
        cdef Py_ssize_t cap
        cdef int e
        if self.n == self.mults.shape[0]:
            cap = 2 * self.mults.shape[0]
            self._s = np.resize(self._s, (cap, self.dim))
            self._m = np.resize(self._m, cap)
            self.states = self._s
            self.mults = self._m
        for e in range(self.dim):
            self.states[self.n, e] = x[e]
        self.mults[self.n] = mult
        self.n += 1

    def result(self):
        return self._s[:self.n].copy(), self._m[:self.n].copy()


# ---------------------------------------------------------------------------
# discrete targets


cdef class DiscreteTarget:
    cdef public int n_moves
    cdef public bint uniform

    cdef bint valid(self, int j):
        return True

    cdef double delta(self, int j):
        return 0.0

    cdef double q(self, int j):
        return 1.0 / self.n_moves

    cdef double q_back(self, int j):
        return 1.0 / self.n_moves

    cdef double back_mass(self, int j, cnp.int64_t* active, int n):
        return n / <double> self.n_moves

    cdef void apply(self, int j):
        pass

    cdef long long key(self) except? -1:
        return 0

    cdef double logw(self):
        return 0.0

    def snapshot(self):
        return None

    def log_weight(self):
        return self.logw()

    def move_delta(self, int j):
        return self.delta(j)

    def apply_move(self, int j):
        self.apply(j)

    def state_key(self):
        return self.key()


cdef class QuboTarget(DiscreteTarget):
    cdef double[:, ::1] off
    cdef double[::1] field
    cdef cnp.uint8_t[::1] x
    cdef double energy
    cdef object _x, _field

    def __init__(self, off, diag, bits):
        off = np.ascontiguousarray(off, dtype=np.float64)
        diag = np.ascontiguousarray(diag, dtype=np.float64)
        self.n_moves = diag.shape[0]
        self.uniform = True
        self.off = off
        self._x = np.array(bits, dtype=np.uint8)
        self.x = self._x
        self._field = diag + off @ self._x.astype(np.float64)
        self.field = self._field
        xf = self._x.astype(np.float64)
        self.energy = float(xf @ diag + 0.5 * xf @ off @ xf)

    cdef double delta(self, int j):
        return self.field[j] if self.x[j] == 0 else -self.field[j]

    cdef void apply(self, int j):
        cdef double s = 1.0 if self.x[j] == 0 else -1.0
        cdef int k
        cdef double[::1] row = self.off[j]
        self.energy += s * self.field[j]
        self.x[j] ^= 1
        for k in range(self.n_moves):
            self.field[k] += s * row[k]

    cdef long long key(self) except? -1:
        cdef long long k = 0
        cdef int i
        if self.n_moves > 62:
            raise OverflowError("state keys need n_bits <= 62")
        for i in range(self.n_moves):
            if self.x[i]:
                k |= (<long long> 1) << i
        return k

    cdef double logw(self):
        return self.energy

    def snapshot(self):
        return self._x.copy()


cdef class TableTarget(DiscreteTarget):
    cdef cnp.int64_t[:, ::1] targets
    cdef double[:, ::1] qprop
    cdef double[::1] lw
    cdef long long s

    def __init__(self, targets, qprop, logw, start):
        targets = np.ascontiguousarray(targets, dtype=np.int64)
        qprop = np.ascontiguousarray(qprop, dtype=np.float64)
        self.targets = targets
        self.qprop = qprop
        self.lw = np.ascontiguousarray(logw, dtype=np.float64)
        self.n_moves = targets.shape[1]
        self.s = int(start)
        self.uniform = bool(np.all(targets >= 0) and np.all(qprop == qprop.flat[0]))

    cdef bint valid(self, int j):
        return self.targets[self.s, j] >= 0

    cdef double delta(self, int j):
        return self.lw[self.targets[self.s, j]] - self.lw[self.s]

    cdef double q(self, int j):
        return self.qprop[self.s, j]

    cdef double q_back(self, int j):
        return self.qprop[self.targets[self.s, j], j]

    cdef double back_mass(self, int j, cnp.int64_t* active, int n):
        cdef long long t = self.targets[self.s, j]
        cdef double total = 0.0
        cdef int c
        for c in range(n):
            if self.targets[t, active[c]] >= 0:
                total += self.qprop[t, active[c]]
        return total

    cdef void apply(self, int j):
        self.s = self.targets[self.s, j]

    cdef long long key(self) except? -1:
        return self.s

    cdef double logw(self):
        return self.lw[self.s]

    def snapshot(self):
        return int(self.s)


cdef class ModelTarget(DiscreteTarget):
    """Adapter running any ``DiscreteModel`` through the kernels (slow path)."""
    cdef public object model, state
    cdef double _lw

    def __init__(self, model, state):
        self.model = model
        self.state = state
        self.n_moves = int(model.n_moves)
        self.uniform = bool(getattr(model, "uniform_proposal", False))
        self._lw = float(model.log_weight(state))

    cdef object _target(self, int j):
        return self.model.move(self.state, j)

    cdef bint valid(self, int j):
        return self._target(j) is not None

    cdef double delta(self, int j):
        return float(self.model.log_weight(self._target(j))) - self._lw

    cdef double q(self, int j):
        return float(self.model.proposal_weight(self.state, j))

    cdef double q_back(self, int j):
        return float(self.model.proposal_weight(self._target(j), j))

    cdef double back_mass(self, int j, cnp.int64_t* active, int n):
        y = self._target(j)
        cdef double total = 0.0
        cdef int c
        for c in range(n):
            if self.model.move(y, <int> active[c]) is not None:
                total += float(self.model.proposal_weight(y, <int> active[c]))
        return total

    cdef void apply(self, int j):
        self.state = self._target(j)
        self._lw = float(self.model.log_weight(self.state))

    cdef long long key(self) except? -1:
        return int(self.model.key(self.state))

    cdef double logw(self):
        return self._lw

    def snapshot(self):
        return self.state


# ---------------------------------------------------------------------------
# shared step primitives


cdef double _weights(DiscreteTarget t, cnp.int64_t* active, int n, double* a, bint restricted):
    cdef int c, j
    cdef double p = 0.0, inv, d, sx, qf, w
    if t.uniform:
        inv = 1.0 / n
        for c in range(n):
            d = t.delta(<int> active[c])
            a[c] = inv if d >= 0.0 else inv * exp(d)
            p += a[c]
        return p
    for c in range(n):
        a[c] = 0.0
    sx = 0.0
    for c in range(n):
        if t.valid(<int> active[c]):
            sx += t.q(<int> active[c])
    if sx <= 0.0:
        return 0.0
    for c in range(n):
        j = <int> active[c]
        if not t.valid(j):
            continue
        d = t.delta(j)
        qf = t.q(j) / sx
        if restricted:
            w = exp(d) * t.q_back(j) / t.back_mass(j, active, n)
            a[c] = qf if qf < w else w
        else:
            w = exp(d) * t.q_back(j) / t.q(j)
            a[c] = qf if w >= 1.0 else qf * w
        p += a[c]
    return p


cdef int _select(bitgen_t* bg, double* a, int n) noexcept nogil:
    cdef int c, best = -1
    cdef double best_d = INFINITY, r, d
    for c in range(n):
        if a[c] > 0.0:
            r = 1.0 - _uniform(bg)
            d = -log(r) / a[c]
            if d < best_d:
                best = c
                best_d = d
    return best


cdef double _multiplicity(bitgen_t* bg, double p, long long* cap_hits) noexcept nogil:
    cdef double u, g
    if p >= 1.0:
        return 1.0
    u = 1.0 - _uniform(bg)
    g = floor(log(u) / log1p(-p))
    if g > CAP:
        g = CAP
        cap_hits[0] += 1
    return 1.0 + g


cdef void _random_subset(bitgen_t* bg, cnp.int64_t* pool, int m, int n) noexcept nogil:
    """Partial Fisher-Yates: the first ``n`` slots of ``pool`` become the subset."""
    cdef int k, r
    cdef cnp.int64_t tmp
    for k in range(n):
        r = k + <int> (_uniform(bg) * (m - k))
        tmp = pool[k]
        pool[k] = pool[r]
        pool[r] = tmp


cdef int _propose(bitgen_t* bg, DiscreteTarget t, cnp.int64_t* active, int n):
    cdef double total = 0.0, target, acc
    cdef int c, last = -1
    if t.uniform:
        return <int> active[<int> (_uniform(bg) * n)]
    for c in range(n):
        if t.valid(<int> active[c]):
            total += t.q(<int> active[c])
            last = <int> active[c]
    if last < 0:
        return -1
    target = _uniform(bg) * total
    acc = 0.0
    for c in range(n):
        if t.valid(<int> active[c]):
            acc += t.q(<int> active[c])
            if acc > target:
                return <int> active[c]
    return last


cdef class _Windows:
    cdef cnp.int64_t[:, ::1] sets
    cdef cnp.int64_t[::1] current
    cdef int random_n, n_moves, n_sets, i, size
    cdef public long long windows
    cdef bitgen_t* bg

    def __init__(self, gen, sets, int random_n, int n_moves):
        self.bg = _bitgen(gen)
        self.random_n = random_n
        self.n_moves = n_moves
        self.i = 0
        self.windows = 0
        if random_n:
            self.sets = np.zeros((1, 1), dtype=np.int64)
            self.n_sets = 1
            self.size = random_n
            self.current = np.empty(n_moves, dtype=np.int64)
            self._draw()
        else:
            self.sets = np.ascontiguousarray(sets, dtype=np.int64)
            self.n_sets = self.sets.shape[0]
            self.size = self.sets.shape[1]
            self.current = np.array(self.sets[0], dtype=np.int64)

    cdef void _draw(self):
        cdef int k
        for k in range(self.n_moves):
            self.current[k] = k
        _random_subset(self.bg, &self.current[0], self.n_moves, self.random_n)

    cdef void advance(self):
        cdef int k
        self.windows += 1
        if self.random_n:
            self._draw()
        else:
            self.i = (self.i + 1) % self.n_sets
            for k in range(self.size):
                self.current[k] = self.sets[self.i, k]

    cdef inline cnp.int64_t* active(self):
        return &self.current[0]


def _new_stats():
    return {"cap_hits": 0, "forced_repeats": 0, "windows": 0, "accepted": 0}


# ---------------------------------------------------------------------------
# discrete chains


def mh_chain(DiscreteTarget t, gen, long long budget, sets, long long L0, int random_n=0):
    cdef bitgen_t* bg = _bitgen(gen)
    cdef _Windows win = _Windows(gen, sets, random_n, t.n_moves)
    cdef _KeyBuffer out = _KeyBuffer()
    cdef long long step, L = L0, accepted = 0
    cdef int j, k, n = win.size
    cdef cnp.int64_t* active
    cdef double u, d, ratio, sx
    for step in range(budget):
        active = win.active()
        j = _propose(bg, t, active, n)
        if j >= 0:
            u = _uniform(bg)
            d = t.delta(j)
            if t.uniform:
                ratio = exp(d)
            else:
                sx = 0.0
                for k in range(n):
                    if t.valid(<int> active[k]):
                        sx += t.q(<int> active[k])
                ratio = exp(d) * (t.q_back(j) / t.back_mass(j, active, n)) / (t.q(j) / sx)
            if u < ratio:
                t.apply(j)
                accepted += 1
        out.push_merge(t.key())
        L -= 1
        if L == 0:
            L = L0
            win.advance()
    stats = _new_stats()
    stats["accepted"] = accepted
    stats["windows"] = win.windows
    keys, mults = out.result()
    return keys, mults, stats


def rf_chain(DiscreteTarget t, gen, long long budget, sets, long long L0, int random_n=0,
             bint windowed=False):
    cdef bitgen_t* bg = _bitgen(gen)
    cdef _Windows win = _Windows(gen, sets, random_n, t.n_moves)
    cdef _KeyBuffer out = _KeyBuffer()
    cdef int n = win.size, c
    cdef double[::1] abuf = np.empty(n, dtype=np.float64)
    cdef double* a = &abuf[0]
    cdef double remaining = <double> budget, L0f = <double> L0, L = L0f, p, m, rec
    cdef long long cap_hits = 0, forced = 0
    cdef cnp.int64_t* active
    while remaining > 0:
        active = win.active()
        p = _weights(t, active, n, a, True)
        if p > 0.0:
            m = _multiplicity(bg, p, &cap_hits)
        elif windowed:
            m = INFINITY
        else:
            raise NoExitError(f"state {t.key()} has no exit mass")
        if not windowed or m <= L:
            rec = m if m < remaining else remaining
            out.push(t.key(), <long long> rec)
            remaining -= rec
            if windowed:
                L -= m
            if remaining <= 0:
                break
            c = _select(bg, a, n)
            t.apply(<int> active[c])
        else:
            if p <= 0.0:
                forced += 1
            if L > 0:
                rec = L if L < remaining else remaining
                out.push(t.key(), <long long> rec)
                remaining -= rec
            L = L0f
            win.advance()
    stats = _new_stats()
    stats["cap_hits"] = cap_hits
    stats["forced_repeats"] = forced
    stats["windows"] = win.windows
    keys, mults = out.result()
    return keys, mults, stats


cdef int _valid_pool(DiscreteTarget t, cnp.int64_t* pool):
    cdef int j, m = 0
    for j in range(t.n_moves):
        if t.uniform or t.valid(j):
            pool[m] = j
            m += 1
    return m


def basic_pns_chain(DiscreteTarget t, gen, long long budget, int set_size):
    cdef bitgen_t* bg = _bitgen(gen)
    cdef _KeyBuffer out = _KeyBuffer()
    cdef cnp.int64_t[::1] poolbuf = np.empty(t.n_moves, dtype=np.int64)
    cdef double[::1] abuf = np.empty(t.n_moves, dtype=np.float64)
    cdef cnp.int64_t* pool = &poolbuf[0]
    cdef double* a = &abuf[0]
    cdef double remaining = <double> budget, p, m, rec
    cdef long long cap_hits = 0
    cdef int mpool, n, c
    while remaining > 0:
        mpool = _valid_pool(t, pool)
        n = set_size if set_size < mpool else mpool
        _random_subset(bg, pool, mpool, n)
        if n == 0:
            raise NoExitError(f"state {t.key()} has no valid moves")
        p = _weights(t, pool, n, a, False)
        if not p > 0.0:
            raise NoExitError(f"state {t.key()} has no exit mass")
        m = _multiplicity(bg, p, &cap_hits)
        rec = m if m < remaining else remaining
        out.push(t.key(), <long long> rec)
        remaining -= rec
        if remaining <= 0:
            break
        c = _select(bg, a, n)
        t.apply(<int> pool[c])
    stats = _new_stats()
    stats["cap_hits"] = cap_hits
    keys, mults = out.result()
    return keys, mults, stats


# ---------------------------------------------------------------------------
# optimizers


def sa_run(DiscreteTarget t, gen, long long steps, double T0, double ratio):
    cdef bitgen_t* bg = _bitgen(gen)
    cdef cnp.int64_t[::1] labels = np.arange(t.n_moves, dtype=np.int64)
    cdef double best = t.logw(), T = T0, u, d, lw
    cdef long long k
    cdef int j
    best_state = t.snapshot()
    for k in range(steps):
        j = _propose(bg, t, &labels[0], t.n_moves)
        if j >= 0:
            u = _uniform(bg)
            d = t.delta(j)
            if u < exp(d / T):
                t.apply(j)
                lw = t.logw()
                if lw > best:
                    best = lw
                    best_state = t.snapshot()
        T *= ratio
    return best, best_state


def opt_run(DiscreteTarget t, gen, long long steps, int set_size):
    cdef bitgen_t* bg = _bitgen(gen)
    cdef cnp.int64_t[::1] poolbuf = np.empty(t.n_moves, dtype=np.int64)
    cdef double[::1] abuf = np.empty(t.n_moves, dtype=np.float64)
    cdef cnp.int64_t* pool = &poolbuf[0]
    cdef double* a = &abuf[0]
    cdef double best = t.logw(), p, lw
    cdef bint full = set_size >= t.n_moves
    cdef long long k
    cdef int mpool, n, c
    best_state = t.snapshot()
    for k in range(steps):
        mpool = _valid_pool(t, pool)
        if full:
            n = mpool
        else:
            n = set_size if set_size < mpool else mpool
            _random_subset(bg, pool, mpool, n)
        if n == 0:
            continue
        p = _weights(t, pool, n, a, False)
        if not p > 0.0:
            continue
        c = _select(bg, a, n)
        t.apply(<int> pool[c])
        lw = t.logw()
        if lw > best:
            best = lw
            best_state = t.snapshot()
    return best, best_state


# ---------------------------------------------------------------------------
# continuous targets and chains


cdef class ContinuousTarget:
    cdef public int dim

    cdef double logdens(self, double* x):
        return 0.0

    def log_density(self, x):
        cdef double[::1] v = np.ascontiguousarray(x, dtype=np.float64)
        return self.logdens(&v[0])


cdef class DonutsTarget(ContinuousTarget):
    cdef public double mu0, sigma
    cdef double scale

    def __init__(self, double mu0, double sigma):
        self.mu0 = mu0
        self.sigma = sigma
        self.dim = 2
        self.scale = 1.0 / (2.0 * sigma * sigma)

    cdef double logdens(self, double* x):
        cdef double r = x[0] * x[0] + x[1] * x[1] - self.mu0
        return -r * r * self.scale


cdef class DensityTarget(ContinuousTarget):
    """Adapter for any ``ContinuousModel``."""
    cdef public object model

    def __init__(self, model):
        self.model = model
        self.dim = int(model.dimension)

    cdef double logdens(self, double* x):
        arr = np.empty(self.dim, dtype=np.float64)
        cdef int e
        for e in range(self.dim):
            arr[e] = x[e]
        return float(self.model.log_density(arr))


cdef class _Normals:
    cdef object gen, _buf
    cdef double[::1] buf
    cdef Py_ssize_t pos

    def __init__(self, gen):
        self.gen = gen
        self._buf = np.empty(0)
        self.buf = self._buf
        self.pos = 0

    cdef double next(self):
        if self.pos == self.buf.shape[0]:
            self._buf = self.gen.standard_normal(NORMAL_BLOCK)
            self.buf = self._buf
            self.pos = 0
        self.pos += 1
        return self.buf[self.pos - 1]


def mh_continuous(ContinuousTarget t, gen, x0, double step, long long budget):
    cdef bitgen_t* bg = _bitgen(gen)
    cdef int dim = t.dim, e
    cdef double[::1] xb = np.array(x0, dtype=np.float64)
    cdef double[::1] yb = np.empty(dim, dtype=np.float64)
    cdef double* x = &xb[0]
    cdef double* y = &yb[0]
    cdef double* tmp
    cdef double lx = t.logdens(x), ly, u
    cdef _Normals normals = _Normals(gen)
    cdef _VecBuffer out = _VecBuffer(dim)
    cdef long long k, accepted = 0
    for k in range(budget):
        for e in range(dim):
            y[e] = x[e] + step * normals.next()
        ly = t.logdens(y)
        u = _uniform(bg)
        if u < exp(ly - lx):
            tmp = x
            x = y
            y = tmp
            lx = ly
            accepted += 1
            out.push(x, 1)
        elif out.n > 0:
            out.mults[out.n - 1] += 1
        else:
            out.push(x, 1)
    stats = _new_stats()
    stats["accepted"] = accepted
    states, mults = out.result()
    return states, mults, stats


cdef _pair_offsets(gen, int num_pairs, int dim):
    delta = gen.standard_normal((num_pairs, dim))
    out = np.empty((2 * num_pairs, dim))
    out[0::2] = delta
    out[1::2] = -delta
    return out


def pns_continuous(ContinuousTarget t, gen, x0, int num_pairs, long long L0, long long budget):
    cdef bitgen_t* bg = _bitgen(gen)
    cdef int dim = t.dim, n = 2 * num_pairs, c, e
    cdef double[::1] xb = np.array(x0, dtype=np.float64)
    cdef double[::1] yb = np.empty(dim, dtype=np.float64)
    cdef double[::1] abuf = np.empty(n, dtype=np.float64)
    cdef double[:, ::1] offsets
    cdef double* x = &xb[0]
    cdef double* y = &yb[0]
    cdef double* a = &abuf[0]
    cdef double remaining = <double> budget, L0f = <double> L0, L = L0f
    cdef double inv = 1.0 / n, lx, d, p, m, rec
    cdef long long cap_hits = 0, forced = 0, windows = 0
    cdef _VecBuffer out = _VecBuffer(dim)

    offsets = _pair_offsets(gen, num_pairs, dim)
    while remaining > 0:
        lx = t.logdens(x)
        p = 0.0
        for c in range(n):
            for e in range(dim):
                y[e] = x[e] + offsets[c, e]
            d = t.logdens(y) - lx
            if d >= 0.0:
                a[c] = inv
            elif d > -INFINITY:
                a[c] = inv * exp(d)
            else:
                a[c] = 0.0
            p += a[c]
        m = _multiplicity(bg, p, &cap_hits) if p > 0.0 else INFINITY
        if m <= L:
            rec = m if m < remaining else remaining
            out.push(x, <long long> rec)
            remaining -= rec
            L -= m
            if remaining <= 0:
                break
            c = _select(bg, a, n)
            for e in range(dim):
                x[e] = x[e] + offsets[c, e]
        else:
            if p <= 0.0:
                forced += 1
            if L > 0:
                rec = L if L < remaining else remaining
                out.push(x, <long long> rec)
                remaining -= rec
            L = L0f
            windows += 1
            offsets = _pair_offsets(gen, num_pairs, dim)
    stats = _new_stats()
    stats["cap_hits"] = cap_hits
    stats["forced_repeats"] = forced
    stats["windows"] = windows
    states, mults = out.result()
    return states, mults, stats
