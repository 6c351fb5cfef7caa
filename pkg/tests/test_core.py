from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from translab.core import (ConfigError, Dataset, DomainError, ExperimentConfig, Split, as_fraction, draw_atoms,
                           empirical_error, is_realizable, sample_iid, split_without_replacement)
from translab.hypothesis import Hypothesis, HypothesisClass, full_class
from translab.instances import DiscreteDistribution, tlsii_hard_distribution_expect
from translab.prob import hypergeometric_pmf_exact
from translab.rng import CounterRNG


def ds(*pairs):
    return Dataset.of(pairs)


class TestEmpiricalError:
    def test_consistent_is_zero(self):
        assert empirical_error(Hypothesis((0, 1)), ds((0, 0), (1, 1))) == 0

    def test_one_of_two(self):
        assert empirical_error(Hypothesis((0, 0)), ds((0, 0), (1, 1))) == Fraction(1, 2)

    def test_multiset_counts_every_copy(self):
        data = ds((0, 0), (0, 0), (1, 1), (1, 1))
        assert empirical_error(Hypothesis((1, 1)), data) == Fraction(1, 2)

    def test_empty_raises(self):
        with pytest.raises(DomainError, match="empty"):
            empirical_error(Hypothesis((0,)), Dataset(()))

    @given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 1)), min_size=1, max_size=30),
           st.integers(0, 15))
    def test_value_on_the_1_over_n_grid(self, items, code):
        data = Dataset.of(items)
        err = empirical_error(Hypothesis.from_code(code, 4), data)
        assert 0 <= err <= 1
        assert (err * len(data)).denominator == 1


class TestDataset:
    def test_rejects_non_bit_labels(self):
        with pytest.raises(DomainError):
            ds((0, 2))

    def test_slices_stay_datasets(self):
        data = ds((0, 1), (1, 0), (2, 1))
        assert isinstance(data[1:], Dataset)
        assert data[1:].points == (1, 2)

    def test_label_counts(self):
        c0, c1 = ds((0, 1), (0, 1), (2, 0)).label_counts(3)
        assert c0.tolist() == [0, 0, 1]
        assert c1.tolist() == [2, 0, 0]


class TestSplit:
    def test_sizes(self):
        pop = Dataset.of([(j % 3, 0) for j in range(10)])
        train, test = Split(tuple(range(10)), 3, 7).apply(pop)
        assert len(train) == 3 and len(test) == 7

    def test_test_side_is_first_u_positions(self):
        split = Split((2, 0, 1), 1, 2)
        assert split.test_indices == (2, 0)
        assert split.train_indices == (1,)

    @pytest.mark.parametrize("perm,m,u", [((0, 1), 0, 2), ((0, 1), 2, 0), ((0, 0), 1, 1), ((0, 1, 2), 1, 1)])
    def test_invalid(self, perm, m, u):
        with pytest.raises(DomainError):
            Split(perm, m, u)


class TestSplitWithoutReplacement:
    def test_deterministic_for_fixed_seed(self):
        pop = Dataset.of([(j, j % 2) for j in range(8)])
        a = split_without_replacement(pop, 3, CounterRNG(11, 4))
        b = split_without_replacement(pop, 3, CounterRNG(11, 4))
        assert a == b

    def test_two_items_symmetric(self):
        pop = ds((0, 0), (1, 1))
        hits = sum(split_without_replacement(pop, 1, CounterRNG(5, t))[0].points[0] == 0 for t in range(4000))
        assert abs(hits / 4000 - 0.5) < 4 * (0.25 / 4000) ** 0.5

    def test_inclusion_probability_is_m_over_n(self):
        n, m, trials = 6, 2, 100_000
        pop = Dataset.of([(j, 0) for j in range(n)])
        counts = np.zeros(n)
        for t in range(trials):
            for p in split_without_replacement(pop, m, CounterRNG(17, t))[0].points:
                counts[p] += 1
        p = m / n
        sigma = (p * (1 - p) / trials) ** 0.5
        assert np.all(np.abs(counts / trials - p) < 4 * sigma)

    def test_multiplicity_follows_hypergeometric(self):
        # 4 copies of point 0 among 10 items; copies in the 7 test slots ~ hypergeometric(10, 4, 7)
        pop = Dataset.of([(0, 1)] * 4 + [(1, 0)] * 6)
        trials = 20_000
        hist = np.zeros(5)
        for t in range(trials):
            test = split_without_replacement(pop, 3, CounterRNG(23, t))[1]
            hist[sum(p == 0 for p in test.points)] += 1
        for k in range(1, 5):
            q = float(hypergeometric_pmf_exact(10, 4, 7, k))
            assert abs(hist[k] / trials - q) < 4 * (q * (1 - q) / trials) ** 0.5 + 1e-12

    def test_requires_both_sides_nonempty(self):
        with pytest.raises(DomainError):
            split_without_replacement(ds((0, 0), (1, 1)), 2, CounterRNG(0))


class TestSampleIid:
    def test_point_mass(self):
        P = DiscreteDistribution(((0, 1, 1),), 1)
        assert sample_iid(P, 5, CounterRNG(0)) == Dataset.of([(0, 1)] * 5)

    def test_two_atoms_balanced(self):
        P = DiscreteDistribution(((0, 0, Fraction(1, 2)), (1, 1, Fraction(1, 2))), 2)
        n = 10_000
        freq = sum(p == 0 for p in sample_iid(P, n, CounterRNG(3)).points) / n
        assert abs(freq - 0.5) < 4 * (0.25 / n) ** 0.5

    def test_p0_mass_of_first_point(self):
        P = tlsii_hard_distribution_expect(3, 4, (0, 1, 0))
        n = 100_000
        freq = sum(p == 0 for p in sample_iid(P, n, CounterRNG(9)).points) / n
        assert abs(freq - 0.25) < 4 * (0.25 * 0.75 / n) ** 0.5

    def test_zero_mass_atoms_never_drawn(self):
        cdf = np.array([0.5, 1.0, 1.0])
        assert draw_atoms(cdf, np.array([0.0, 0.49, 0.5, 0.999999])).tolist() == [0, 0, 1, 1]


class TestRealizable:
    def test_full_class(self):
        assert is_realizable(ds((0, 0), (1, 1)), full_class(2))

    def test_contradiction(self):
        assert not is_realizable(ds((0, 0), (0, 1)), full_class(2))

    def test_singleton_class(self):
        assert not is_realizable(ds((0, 1)), HypothesisClass([(0, 0)]))

    @given(st.lists(st.tuples(st.integers(0, 4), st.integers(0, 1)), max_size=20))
    def test_full_class_min_error_zero_when_realizable(self, items):
        data = Dataset.of(items)
        H = full_class(5)
        if is_realizable(data, H) and len(data):
            assert min(empirical_error(h, data) for h in H) == 0


class TestConfig:
    def test_error_threshold_is_exact(self):
        assert ExperimentConfig(2, 10, 10, epsilon=0.1).error_threshold == 1
        assert ExperimentConfig(2, 10, 30, epsilon=0.1).error_threshold == 3
        assert ExperimentConfig(2, 4, 64, epsilon=1 / 1024).error_threshold == 1

    @pytest.mark.parametrize("kw", [dict(d=0), dict(m=0), dict(u=0), dict(epsilon=1.5), dict(delta=0.0),
                                    dict(trials=0)])
    def test_invalid(self, kw):
        args = dict(d=2, m=2, u=2)
        args.update(kw)
        with pytest.raises(ConfigError):
            ExperimentConfig(**args)

    def test_as_fraction_uses_shortest_repr(self):
        assert as_fraction(0.1) == Fraction(1, 10)
        assert as_fraction("1/1024") == Fraction(1, 1024)
