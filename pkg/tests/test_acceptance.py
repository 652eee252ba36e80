"""Exit criteria, each at its stated tolerance.

Every test prints one ``criterion N: PASS|FAIL`` line (also collected in the
terminal summary). Criteria that cannot hold as written still run in full and
fail; see the README for the measured values.
"""
import math
import time
import warnings

import numpy as np
import pytest
from scipy.stats import chisquare

from oracles import basic_pns_limit
from pnsampler import models
from pnsampler.continuous import DonutsModel, run_unbiased_pns_continuous
from pnsampler.metrics import WeightedEmpirical, donuts_bias_suite, starting_distribution, tvd
from pnsampler.models import exact_distribution, make_qubo_random
from pnsampler.optimize import last_states
from pnsampler.samplers import Method, SamplerConfig, run
from pnsampler.schemes import PartialNeighborScheme
from pnsampler.select import sample_multiplicity, select_proportional

pytestmark = [pytest.mark.acceptance, pytest.mark.slow]

TRI = models.triangle()
CUBE = models.hypercube16()
PI_TRI = np.array([1, 2, 3]) / 6
PI_CUBE = exact_distribution(CUBE)
QUBO10 = make_qubo_random(16, 10.0, seed=0)
PI_QUBO10 = exact_distribution(QUBO10)

FULL = PartialNeighborScheme.full()
TRI_SETS = PartialNeighborScheme.systematic(2, 100)
CUBE_SETS = PartialNeighborScheme.systematic(2, 100)
QUBO_SETS = PartialNeighborScheme.systematic(8, 100)


def distribution(chain, n):
    return np.bincount(chain.keys, weights=chain.multiplicities, minlength=n) / chain.original_size


def tvds(model, exact, method, scheme, budget, seeds):
    n = len(exact)
    return np.array([tvd(distribution(run(model, SamplerConfig(method, budget, scheme, seed=s)), n), exact) for s in seeds])


def fmt(v):
    return "(" + ", ".join(f"{x:.4f}" for x in v) + ")"


def test_criterion_01_basic_pns_bias(report):
    t0 = time.perf_counter()
    target = np.array([2 / 9, 5 / 18, 1 / 2])
    scheme = PartialNeighborScheme.random(1)
    props = np.mean([distribution(run(TRI, SamplerConfig(Method.BASIC_PNS, 10**6, scheme, seed=100 + r)), 3) for r in range(100)], axis=0)
    elapsed = time.perf_counter() - t0
    ok = bool(np.all(np.abs(props - target) <= 0.005)) and elapsed < 60
    limit = basic_pns_limit(TRI, 1)
    report(1, ok, f"mean {fmt(props)} vs {fmt(target)} +-0.005; exact limit {fmt(limit)}; {elapsed:.1f}s")
    assert ok


def test_criterion_02_unbiased_methods_on_triangle(report):
    t0 = time.perf_counter()
    cases = [
        (Method.MH, FULL),
        (Method.RF, FULL),
        (Method.MH_ALTERNATING, TRI_SETS),
        (Method.RF_ALTERNATING, TRI_SETS),
        (Method.UNBIASED_PNS, TRI_SETS),
        (Method.UNBIASED_PNS_NAIVE, TRI_SETS),
    ]
    worst, parts = 0.0, []
    for i, (method, scheme) in enumerate(cases):
        p = distribution(run(TRI, SamplerConfig(method, 10**6, scheme, seed=200 + i)), 3)
        dev = float(np.abs(p - PI_TRI).max())
        worst = max(worst, dev)
        parts.append(f"{method.value}={dev:.4f}")
    elapsed = time.perf_counter() - t0
    ok = worst <= 0.005 and elapsed < 300
    report(2, ok, f"max |p - pi| per method: {', '.join(parts)}; {elapsed:.1f}s")
    assert ok


def test_criterion_03_hypercube_plateau(report):
    t0 = time.perf_counter()
    scheme = PartialNeighborScheme.random(1)
    seeds = range(300, 320)
    basic = {b: tvds(CUBE, PI_CUBE, Method.BASIC_PNS, scheme, b, seeds).mean() for b in (10**4, 10**5, 10**6)}
    rf = tvds(CUBE, PI_CUBE, Method.RF, FULL, 10**6, seeds).mean()
    elapsed = time.perf_counter() - t0
    # a plateau: the last two budgets agree and sit inside the band
    plateau = all(0.2 <= basic[b] <= 0.4 for b in (10**5, 10**6)) and abs(basic[10**6] - basic[10**5]) < 0.02
    ok = plateau and rf < 0.02 and elapsed < 120
    curve = ", ".join(f"{b:.0e}:{v:.4f}" for b, v in basic.items())
    report(3, ok, f"basic PNS TVD {curve}; RF TVD at 1e6 {rf:.4f}; {elapsed:.1f}s")
    assert ok


def test_criterion_04_rf_matches_mh(report):
    seeds = range(400, 500)
    parts, ok = [], True
    for b in (10**4, 10**5, 10**6):
        rf = tvds(CUBE, PI_CUBE, Method.RF, FULL, b, seeds).mean()
        mh = tvds(CUBE, PI_CUBE, Method.MH, FULL, b, [s + 1000 for s in seeds]).mean()
        ok &= abs(rf - mh) < 0.01
        parts.append(f"{b:.0e}: RF {rf:.4f} MH {mh:.4f}")
    report(4, ok, "; ".join(parts))
    assert ok


def test_criterion_05_unbiased_pns_matches_naive(report):
    def pooled(method, base):
        emp = WeightedEmpirical()
        for r in range(10):
            emp = emp.merge(WeightedEmpirical.from_chain(run(CUBE, SamplerConfig(method, 10**6, CUBE_SETS, seed=base + r))))
        return emp

    d = tvd(pooled(Method.UNBIASED_PNS, 500), pooled(Method.UNBIASED_PNS_NAIVE, 600), 16)
    ok = d < 0.01
    report(5, ok, f"TVD between pooled empiricals (10 x 1e6 each) {d:.4f}")
    assert ok


def test_criterion_06_qubo_convergence(report):
    t0 = time.perf_counter()
    seeds = range(1000, 1100)
    budgets = (10**4, 10**5, 10**6, 3 * 10**6)
    res = {}
    for m, scheme in ((Method.UNBIASED_PNS, QUBO_SETS), (Method.RF, FULL), (Method.MH, FULL)):
        res[m] = {b: tvds(QUBO10, PI_QUBO10, m, scheme, b, seeds) for b in budgets}
    elapsed = time.perf_counter() - t0
    upns, rf, mh = (res[m] for m in (Method.UNBIASED_PNS, Method.RF, Method.MH))
    converged = upns[3 * 10**6].mean() < 0.05
    order, parts = True, []
    for b in budgets:
        u, r, h = upns[b].mean(), rf[b].mean(), mh[b].mean()
        # RF and MH are the same chain per original sample: equal up to replication noise
        se = math.sqrt(rf[b].var(ddof=1) / len(seeds) + mh[b].var(ddof=1) / len(seeds))
        order &= u >= r and u >= h and abs(r - h) <= max(0.01, 3 * se)
        parts.append(f"{b:.0e}: UPNS {u:.4f} RF {r:.4f} MH {h:.4f}")
    ok = converged and order and elapsed < 600
    report(6, ok, "; ".join(parts) + f"; {elapsed:.1f}s")
    assert ok


def test_criterion_07_window_length(report):
    seeds = range(5000, 5100)
    means = {}
    for L0 in (10, 50, 100, 500, 1000):
        means[L0] = tvds(QUBO10, PI_QUBO10, Method.UNBIASED_PNS, PartialNeighborScheme.systematic(8, L0), 10**6, seeds).mean()
    middle = [means[L0] for L0 in (50, 100, 500, 1000)]
    agree = max(middle) - min(middle) <= 0.02
    worst = all(means[10] > v for v in middle)
    ok = agree and worst
    curve = ", ".join(f"L0={k}:{v:.4f}" for k, v in means.items())
    report(7, ok, f"{curve}; spread of 50..1000 {max(middle) - min(middle):.4f}; L0=10 worst: {worst}")
    assert ok


_CRIT8: dict = {}


@pytest.mark.parametrize("weights", [(1, 2, 3), (1, 1, 1, 1), (1e-6, 1)], ids=["123", "1111", "tiny"])
def test_criterion_08_proportional_selection(weights, report):
    rng = np.random.default_rng(800 + len(weights))
    w = np.array(weights, dtype=float)
    draws = 10**5
    counts = np.bincount([select_proportional(w, rng) for _ in range(draws)], minlength=len(w))
    pvalue = chisquare(counts, draws * w / w.sum()).pvalue
    ok = pvalue > 0.001
    _CRIT8[weights] = (ok, pvalue)
    if len(_CRIT8) == 3:
        detail = "; ".join(f"{k}: p={v[1]:.3g}" for k, v in _CRIT8.items())
        report(8, all(v[0] for v in _CRIT8.values()), f"chi-square p-values {detail}")
    assert ok


def test_criterion_09_multiplicity_law(report):
    parts, ok = [], True
    for i, p in enumerate((0.1, 0.25, 0.5, 1.0)):
        rng = np.random.default_rng([900, i])
        x = np.fromiter((sample_multiplicity(p, rng) for _ in range(10**6)), dtype=np.float64, count=10**6)
        se = x.std(ddof=1) / math.sqrt(len(x))
        dev = abs(x.mean() - 1 / p)
        good = dev == 0.0 if se == 0.0 else dev <= 3 * se
        ok &= good
        parts.append(f"p={p}: mean {x.mean():.5f} vs {1 / p:.5f} ({dev / se if se else 0:.2f} SE)")
    report(9, ok, "; ".join(parts))
    assert ok


def test_criterion_10_donuts(report):
    t0 = time.perf_counter()
    model = DonutsModel(9.0, 0.1)
    scheme = PartialNeighborScheme.pairs(25, 1000)
    runs = [donuts_bias_suite(run_unbiased_pns_continuous(model, scheme, 3 * 10**7, 1000 + r)) for r in range(10)]
    elapsed = time.perf_counter() - t0
    mean = {k: float(np.mean([getattr(b, k) for b in runs])) for k in ("first", "second", "fourth", "positive")}
    ok = all(v < 0.05 for v in mean.values()) and mean["positive"] < 0.01 and elapsed < 600
    detail = ", ".join(f"{k} {v:.4f}" for k, v in mean.items())
    report(10, ok, f"mean bias sums over 10 runs: {detail}; {elapsed:.1f}s")
    assert ok


def test_criterion_11_hybrid_burn_in(report):
    model = make_qubo_random(16, 1.0, seed=0)
    exact = exact_distribution(model)
    reps = 10**5

    def point(K1, K0, seed):
        keys, cpu = last_states(model, "rf", K1, K0, reps, seed=seed)
        return starting_distribution(keys, exact), cpu

    cold = [point(K1, 0, 1100 + K1) for K1 in (100, 200, 300, 500, 700, 1000, 1500)]
    cold_cpu = np.array([c for _, c in cold])
    cold_tvd = np.array([t for t, _ in cold])
    order = np.argsort(cold_cpu)
    parts, ok = [], True
    for K1 in (200, 500, 1000):
        warm_tvd, warm_cpu = point(K1, K1 // 20, 1200 + K1)
        # the cold curve read off at the warm run's CPU time
        ref = float(np.interp(warm_cpu, cold_cpu[order], cold_tvd[order]))
        ok &= warm_tvd < ref
        parts.append(f"K1={K1}: warm {warm_tvd:.4f} @ {warm_cpu:.1f}s vs cold {ref:.4f}")
    report(11, ok, "; ".join(parts), advisory=True)
    if not ok:
        warnings.warn("advisory criterion 11 did not hold in this session", UserWarning)
