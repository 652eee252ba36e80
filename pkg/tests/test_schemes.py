import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pnsampler.schemes import (
    PartialNeighborScheme,
    SchemeError,
    SchemeKind,
    cycle_length,
    random_index_set,
    symmetric_pair_offsets,
    systematic_index_set,
)


class TestSystematicIndexSet:
    def test_first_half_of_sixteen(self):
        # labels are 0-based: {0..7} is "bits 1 to 8"
        np.testing.assert_array_equal(systematic_index_set(16, 8, 0), np.arange(8))

    def test_wraparound_size_fourteen(self):
        expected = [14, 15] + list(range(12))
        np.testing.assert_array_equal(systematic_index_set(16, 14, 1), expected)
        expected = [12, 13, 14, 15] + list(range(10))
        np.testing.assert_array_equal(systematic_index_set(16, 14, 2), expected)

    def test_full_set(self):
        np.testing.assert_array_equal(systematic_index_set(4, 4, 0), [0, 1, 2, 3])

    def test_fourteen_of_sixteen_has_eight_sets(self):
        assert cycle_length(16, 14) == 8

    @pytest.mark.parametrize("N,n", [(0, 1), (4, 0), (4, 5)])
    def test_invalid(self, N, n):
        with pytest.raises(SchemeError):
            systematic_index_set(N, n, 0)

    @pytest.mark.parametrize("N,n", [(16, 8), (16, 4), (12, 3), (4, 2)])
    def test_partition_when_divisible(self, N, n):
        sets = [set(systematic_index_set(N, n, i).tolist()) for i in range(N // n)]
        assert set().union(*sets) == set(range(N))
        assert sum(len(s) for s in sets) == N

    @settings(max_examples=60, deadline=None)
    @given(st.integers(1, 40).flatmap(lambda N: st.tuples(st.just(N), st.integers(1, N))))
    def test_cycle_covers_everything(self, Nn):
        N, n = Nn
        seen = set()
        for i in range(cycle_length(N, n)):
            s = systematic_index_set(N, n, i)
            assert len(set(s.tolist())) == n
            seen.update(s.tolist())
        assert seen == set(range(N))


class TestRandomIndexSet:
    def test_only_subset(self, rng):
        assert sorted(random_index_set(2, 2, rng).tolist()) == [0, 1]

    def test_reproducible(self):
        a = random_index_set(16, 8, np.random.default_rng(3))
        b = random_index_set(16, 8, np.random.default_rng(3))
        np.testing.assert_array_equal(a, b)

    def test_uniform_membership(self, rng):
        counts = np.zeros(4)
        draws = 100_000
        for _ in range(draws):
            counts[random_index_set(4, 2, rng)] += 1
        np.testing.assert_allclose(counts / draws, 0.5, atol=0.01)

    def test_distinct(self, rng):
        for _ in range(100):
            s = random_index_set(16, 5, rng)
            assert len(set(s.tolist())) == 5


class TestPairOffsets:
    def test_count(self, rng):
        assert symmetric_pair_offsets(2, 25, rng).shape == (50, 2)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(1, 4), st.integers(1, 60), st.integers(0, 2**32))
    def test_sum_is_exactly_zero(self, dim, pairs, seed):
        off = symmetric_pair_offsets(dim, pairs, np.random.default_rng(seed))
        assert np.all(off.sum(axis=0) == 0.0)
        assert np.all(off[0::2] == -off[1::2])

    def test_unit_variance(self, rng):
        off = symmetric_pair_offsets(2, 100_000, rng)[0::2]
        np.testing.assert_allclose(off.var(axis=0), 1.0, atol=0.02)

    def test_reversibility(self, rng):
        off = symmetric_pair_offsets(2, 5, rng)
        x = rng.standard_normal(2)
        for d in off:
            y = x + d
            back = y + off
            assert np.min(np.abs(back - x).sum(axis=1)) < 1e-12

    def test_invalid(self, rng):
        with pytest.raises(SchemeError):
            symmetric_pair_offsets(0, 1, rng)


class TestScheme:
    def test_defaults(self):
        s = PartialNeighborScheme.full()
        assert s.kind is SchemeKind.FULL and s.budget_L0 == 100
        assert s.effective_size(16) == 16

    def test_string_kind(self):
        assert PartialNeighborScheme("systematic", 4, 10).kind is SchemeKind.SYSTEMATIC

    @pytest.mark.parametrize(
        "kwargs",
        [dict(kind="systematic", set_size=None), dict(kind="random", set_size=0), dict(budget_L0=0)],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(SchemeError):
            PartialNeighborScheme(**kwargs)

    def test_systematic_sets(self):
        sets = PartialNeighborScheme.systematic(2, 10).systematic_sets(4)
        np.testing.assert_array_equal(sets, [[0, 1], [2, 3]])

    def test_random_has_no_cycle(self):
        with pytest.raises(SchemeError):
            PartialNeighborScheme.random(2).systematic_sets(4)

    def test_oversized(self):
        with pytest.raises(SchemeError):
            PartialNeighborScheme.systematic(5).effective_size(4)
