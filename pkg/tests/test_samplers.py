import numpy as np
import pytest

from oracles import basic_pns_limit
from pnsampler import kernels, models
from pnsampler.metrics import WeightedEmpirical, tvd
from pnsampler.models import exact_distribution
from pnsampler.samplers import (
    BurnIn,
    JumpChain,
    Method,
    SamplerConfig,
    run,
    run_basic_pns,
    run_mh,
    run_mh_alternating,
    run_rf,
    run_unbiased_pns,
    run_unbiased_pns_naive,
)
from pnsampler.schemes import PartialNeighborScheme, SchemeError

TRI = models.triangle()
CUBE = models.hypercube16()
PI_TRI = np.array([1, 2, 3]) / 6
PI_CUBE = exact_distribution(CUBE)

# systematic two-edge sets over the triangle's edges AB, AC, BC
TRI_SETS = PartialNeighborScheme.systematic(2, 100)
CUBE_SETS = PartialNeighborScheme.systematic(2, 100)

UNBIASED = [
    (Method.MH, PartialNeighborScheme.full()),
    (Method.RF, PartialNeighborScheme.full()),
    (Method.MH_ALTERNATING, TRI_SETS),
    (Method.RF_ALTERNATING, TRI_SETS),
    (Method.UNBIASED_PNS, TRI_SETS),
    (Method.UNBIASED_PNS_NAIVE, TRI_SETS),
    (Method.UNBIASED_PNS, PartialNeighborScheme.random(2, 100)),
]


def proportions(chain, n):
    return WeightedEmpirical.from_chain(chain).dense(n)


class TestBudgetAndStructure:
    @pytest.mark.parametrize("method", list(Method))
    @pytest.mark.parametrize("budget", [1, 2, 99, 1000, 12345])
    def test_budget_exact(self, method, budget):
        scheme = PartialNeighborScheme.systematic(1, 7)
        chain = run(TRI, SamplerConfig(method, budget, scheme, seed=budget))
        assert chain.original_size == budget
        assert np.all(chain.multiplicities >= 1)

    @pytest.mark.parametrize("method", [Method.RF, Method.BASIC_PNS])
    def test_jump_chain_never_repeats(self, method):
        chain = run(TRI, SamplerConfig(method, 100_000, PartialNeighborScheme.random(1), seed=1))
        assert np.all(np.diff(chain.keys) != 0)

    def test_mh_storage_is_merged(self):
        chain = run_mh(TRI, SamplerConfig(Method.MH, 100_000, seed=2))
        assert np.all(np.diff(chain.keys) != 0)

    def test_repeats_only_at_window_ends(self):
        L0 = 37
        chain = run_unbiased_pns(CUBE, SamplerConfig(Method.UNBIASED_PNS, 50_000, PartialNeighborScheme.systematic(1, L0), seed=3))
        ends = np.cumsum(chain.multiplicities)
        repeat = np.flatnonzero(np.diff(chain.keys) == 0)
        assert repeat.size > 0
        # the entry before a repeat closed its window exactly at a multiple of L0
        assert np.all(ends[repeat] % L0 == 0)

    def test_full_scheme_single_set_repeats_at_boundaries(self):
        # one set covering everything: RF except for the window-boundary repeats
        chain = run_unbiased_pns(CUBE, SamplerConfig(Method.UNBIASED_PNS, 10_000, PartialNeighborScheme.systematic(4, 100), seed=4, burn_in=BurnIn.none()))
        repeats = np.count_nonzero(np.diff(chain.keys) == 0)
        assert 0 < repeats <= 10_000 // 100
        assert chain.stats["forced_repeats"] == 0

    def test_naive_l0_one_uses_fresh_sets(self):
        chain = run_unbiased_pns_naive(TRI, SamplerConfig(Method.UNBIASED_PNS_NAIVE, 30, PartialNeighborScheme.systematic(1, 1), seed=0, burn_in=BurnIn.none()))
        assert chain.stats["windows"] == 30

    def test_states_are_decoded(self):
        q = models.make_qubo_random(5, 1.0, 0)
        chain = run_rf(q, SamplerConfig(Method.RF, 50, seed=0))
        for k, s in zip(chain.keys, chain.states):
            assert q.key(s) == k
        assert q.key(chain.final_state) == chain.keys[-1]


class TestDeterminism:
    @pytest.mark.parametrize("method", list(Method))
    def test_same_seed_same_chain(self, method):
        cfg = SamplerConfig(method, 20_000, PartialNeighborScheme.random(2, 50), seed=99)
        q = models.make_qubo_random(8, 1.0, 1)
        a, b = run(q, cfg), run(q, cfg)
        np.testing.assert_array_equal(a.keys, b.keys)
        np.testing.assert_array_equal(a.multiplicities, b.multiplicities)

    def test_different_seeds_differ(self):
        a = run_rf(CUBE, SamplerConfig(Method.RF, 1000, seed=1))
        b = run_rf(CUBE, SamplerConfig(Method.RF, 1000, seed=2))
        assert not np.array_equal(a.keys, b.keys)

    def test_explicit_start(self):
        cfg = SamplerConfig(Method.RF, 10, seed=0, burn_in=BurnIn.none(), start=2)
        assert run_rf(TRI, cfg).keys[0] == 2


class TestConfigValidation:
    def test_budget_positive(self):
        with pytest.raises(ValueError):
            SamplerConfig(Method.MH, 0)

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            SamplerConfig("gibbs", 10)

    def test_pairs_scheme_rejected(self):
        with pytest.raises(SchemeError):
            run(TRI, SamplerConfig(Method.UNBIASED_PNS, 10, PartialNeighborScheme.pairs(2)))

    @pytest.mark.parametrize("kind, count", [("bogus", None), ("discard", -1), ("optimize", None)])
    def test_burn_in_rules(self, kind, count):
        with pytest.raises(ValueError):
            BurnIn(kind, count)

    def test_discard_defaults_to_budget(self):
        assert BurnIn.discard().discard_count(500) == 500
        assert BurnIn.discard(3).discard_count(500) == 3
        assert BurnIn.none().discard_count(500) == 0


class TestTriangle:
    @pytest.mark.parametrize("method, scheme", UNBIASED, ids=lambda v: getattr(v, "value", None) or v.kind.value)
    def test_stationary_proportions(self, method, scheme):
        chain = run(TRI, SamplerConfig(method, 10**6, scheme, seed=11))
        np.testing.assert_allclose(proportions(chain, 3), PI_TRI, atol=0.005)

    @pytest.mark.parametrize("method", [Method.MH_ALTERNATING, Method.UNBIASED_PNS])
    def test_single_edge_sets(self, method):
        # single-edge windows of 100 leave a run-to-run spread near 0.005,
        # so the check averages ten independent runs
        scheme = PartialNeighborScheme.systematic(1, 100)
        props = np.mean([proportions(run(TRI, SamplerConfig(method, 10**6, scheme, seed=s)), 3) for s in range(10)], axis=0)
        np.testing.assert_allclose(props, PI_TRI, atol=0.005)

    def test_alternating_two_edges_only(self):
        # edges AB and BC alone still connect all three states
        gen = np.random.default_rng(5)
        props = []
        for _ in range(10):
            keys, mults, _ = kernels.mh_chain(TRI.make_target(0), gen, 10**6, np.array([[0], [2]]), 100)
            props.append(WeightedEmpirical.from_keys(keys, mults).dense(3))
        np.testing.assert_allclose(np.mean(props, axis=0), PI_TRI, atol=0.005)

    def test_higher_neighbor_always_accepted(self):
        # from A every proposal goes uphill, so the chain leaves A after one step
        chain = run_mh(TRI, SamplerConfig(Method.MH, 10**5, seed=1))
        assert np.all(chain.multiplicities[chain.keys == 0] == 1)

    def test_basic_pns_bias(self):
        limit = basic_pns_limit(TRI, 1)
        np.testing.assert_allclose(limit, [4 / 19, 6 / 19, 9 / 19], rtol=1e-12)
        props = np.mean(
            [proportions(run_basic_pns(TRI, SamplerConfig(Method.BASIC_PNS, 10**5, PartialNeighborScheme.random(1), seed=s)), 3) for s in range(10)],
            axis=0,
        )
        np.testing.assert_allclose(props, limit, atol=0.005)
        assert tvd(props, PI_TRI) > 0.03

    def test_basic_pns_full_set_is_rf(self):
        chain = run_basic_pns(TRI, SamplerConfig(Method.BASIC_PNS, 10**6, PartialNeighborScheme.random(2), seed=3))
        np.testing.assert_allclose(proportions(chain, 3), PI_TRI, atol=0.005)


class TestHypercube:
    @pytest.mark.parametrize(
        "method, scheme",
        [
            (Method.MH, PartialNeighborScheme.full()),
            (Method.RF, PartialNeighborScheme.full()),
            (Method.MH_ALTERNATING, CUBE_SETS),
            (Method.RF_ALTERNATING, CUBE_SETS),
            (Method.UNBIASED_PNS, CUBE_SETS),
            (Method.UNBIASED_PNS_NAIVE, CUBE_SETS),
        ],
        ids=lambda v: getattr(v, "value", None) or v.kind.value,
    )
    def test_stationary_tvd(self, method, scheme):
        chain = run(CUBE, SamplerConfig(method, 10**6, scheme, seed=21))
        assert tvd(WeightedEmpirical.from_chain(chain), PI_CUBE) < 0.02

    def test_rf_alternating_matches_mh_alternating(self):
        # pooled over five runs of 10**6 each; a single pair sits near 0.009
        def pooled(method, offset):
            emp = WeightedEmpirical()
            for s in range(5):
                emp = emp.merge(WeightedEmpirical.from_chain(run(CUBE, SamplerConfig(method, 10**6, CUBE_SETS, seed=2 * s + offset))))
            return emp

        assert tvd(pooled(Method.RF_ALTERNATING, 0), pooled(Method.MH_ALTERNATING, 1), 16) < 0.01

    @pytest.mark.parametrize("n, expected", [(1, 0.3068006), (2, 0.1083156), (3, 0.0353463)])
    def test_basic_pns_limit_oracle(self, n, expected):
        assert tvd(basic_pns_limit(CUBE, n), PI_CUBE) == pytest.approx(expected, abs=1e-6)

    def test_basic_pns_plateau(self):
        chain = run_basic_pns(CUBE, SamplerConfig(Method.BASIC_PNS, 10**6, PartialNeighborScheme.random(1), seed=8))
        p = proportions(chain, 16)
        assert tvd(p, basic_pns_limit(CUBE, 1)) < 0.01
        assert 0.2 <= tvd(p, PI_CUBE) <= 0.4


def test_jump_chain_lengths():
    c = JumpChain([0, 1, 0], [2, 1, 4])
    assert (c.original_size, c.jump_size, len(c)) == (7, 3, 3)
    assert c.states == [0, 1, 0]


def test_mh_alternating_wrapper_equals_run():
    cfg = SamplerConfig(Method.MH_ALTERNATING, 5000, TRI_SETS, seed=6)
    a, b = run_mh_alternating(TRI, cfg), run(TRI, cfg)
    np.testing.assert_array_equal(a.keys, b.keys)
