import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from _helpers import chi2_pvalue
from translab.core import Dataset, DomainError, Split, is_realizable
from translab.hypothesis import full_class
from translab.instances import (DiscreteDistribution, PopulationSpec, all_labelings, instance_from_json,
                                materialize_population, random_labeling, test_multiplicities,
                                tlsi_hard_counts_expect, tlsi_hard_counts_prob, tlsii_hard_distribution_expect,
                                tlsii_hard_distribution_p)
from translab.prob import hypergeometric_pmf_exact
from translab.rng import CounterRNG, batch_words, stream_keys, words_to_bits


class TestTlsiCounts:
    def test_examples(self):
        assert tlsi_hard_counts_prob(128, 8, Fraction(1, 128)) == (1,) * 7 + (121,)
        assert tlsi_hard_counts_prob(128, 8, Fraction(1, 32)) == (4,) * 7 + (100,)
        assert tlsi_hard_counts_prob(4, 2, 1e-9) == (1, 3)
        assert tlsi_hard_counts_expect(64, 5, 16) == (4, 4, 4, 4, 48)
        assert tlsi_hard_counts_expect(20, 2, 10) == (2, 18)
        assert tlsi_hard_counts_expect(10, 5, 9) == (1, 1, 1, 1, 6)

    def test_override(self):
        assert tlsi_hard_counts_prob(128, 8, 0.01, delta_override=2) == (2,) * 7 + (114,)

    def test_precondition_violation(self):
        with pytest.raises(DomainError, match="preconditions violated"):
            tlsi_hard_counts_prob(10, 4, 0.9)

    @given(st.integers(2, 12), st.integers(1, 20), st.integers(1, 20), st.sampled_from([1, 2, 4, 8, 16, 32]))
    def test_sums_and_proof_side_condition(self, d, a, b, inv32):
        m = 8 * (d - 1) + a
        u = m + b
        N = m + u
        eps = Fraction(inv32, 1024)  # <= 1/32
        counts = tlsi_hard_counts_prob(N, d, eps)
        assert sum(counts) == N and len(counts) == d
        assert counts[0] * (d - 1) <= u
        ce = tlsi_hard_counts_expect(N, d, m)
        assert sum(ce) == N and len(ce) == d


class TestPopulation:
    def test_materialize(self):
        assert materialize_population(PopulationSpec((0, 1), (1, 1))) == Dataset.of([(0, 0), (1, 1)])
        assert materialize_population(PopulationSpec((1, 0), (2, 0))) == Dataset.of([(0, 1), (0, 1)])
        pop = materialize_population(PopulationSpec((0, 1, 0), (1, 2, 1)))
        assert pop.points == (0, 1, 1, 2)

    @given(st.lists(st.integers(0, 1), min_size=1, max_size=6).flatmap(
        lambda b: st.tuples(st.just(b), st.lists(st.integers(0, 5), min_size=len(b), max_size=len(b)))))
    def test_realizable(self, bi):
        b, i = bi
        spec = PopulationSpec(b, i)
        assert is_realizable(materialize_population(spec), full_class(len(b)))

    def test_validation(self):
        with pytest.raises(DomainError):
            PopulationSpec((0, 1), (1,))
        with pytest.raises(DomainError):
            PopulationSpec((0,), (-1,))

    def test_json_round_trip(self):
        spec = PopulationSpec((0, 1), (3, 5))
        assert instance_from_json(spec.to_json()) == spec


class TestTlsiiLaws:
    def test_expect_law(self):
        assert tlsii_hard_distribution_expect(2, 2, (0, 1)).masses == (Fraction(1, 2), Fraction(1, 2))
        assert tlsii_hard_distribution_expect(5, 16, (0,) * 5).masses == (Fraction(1, 16),) * 4 + (Fraction(3, 4),)
        assert tlsii_hard_distribution_expect(2, 10 ** 6, (0, 0)).masses[0] == Fraction(1, 10 ** 6)

    def test_p_law(self):
        assert tlsii_hard_distribution_p(3, Fraction(1, 4), (0, 0, 1)).masses == (
            Fraction(1, 4), Fraction(1, 4), Fraction(1, 2))
        assert tlsii_hard_distribution_p(3, Fraction(1, 2), (0, 0, 1)).masses[-1] == 0
        eps = Fraction(1, 64)
        assert 16 * eps / 4 == Fraction(1, 16)
        with pytest.raises(DomainError):
            tlsii_hard_distribution_p(3, Fraction(3, 4), (0, 0, 0))

    def test_realizable_and_json(self):
        P = tlsii_hard_distribution_p(4, Fraction(1, 5), (1, 0, 1, 1))
        assert P.labeling() == (1, 0, 1, 1)
        assert instance_from_json(P.to_json()) == P
        assert instance_from_json(json.dumps({"setting": "TLSII", "b": [1, 0, 1, 1], "p": "1/5"})) == P

    def test_unrealizable_law_rejected(self):
        with pytest.raises(DomainError):
            DiscreteDistribution(((0, 0, Fraction(1, 2)), (0, 1, Fraction(1, 2))), 1)


class TestLabelings:
    def test_fair_bit(self):
        ones = sum(random_labeling(1, CounterRNG(4, t))[0] for t in range(100_000))
        assert abs(ones / 1e5 - 0.5) < 4 * (0.25 / 1e5) ** 0.5

    def test_reproducible(self):
        assert random_labeling(6, CounterRNG(1, 1)) == random_labeling(6, CounterRNG(1, 1))

    def test_uniform_over_256_strings(self):
        n = 1_000_000
        bits = words_to_bits(batch_words(stream_keys(12, np.arange(n)), 0, 8)).astype(np.int64)
        # the scalar path consumes the same words
        assert tuple(bits[5]) == random_labeling(8, CounterRNG(12, 5))
        codes = bits @ (1 << np.arange(7, -1, -1))
        assert stats.chisquare(np.bincount(codes, minlength=256)).pvalue > 0.001

    def test_all_labelings(self):
        assert all_labelings(2) == [(0, 0), (0, 1), (1, 0), (1, 1)]


class TestMultiplicities:
    def test_one_copy_moves_to_train(self):
        spec = PopulationSpec((0, 1, 0), (2, 2, 2))
        split = Split((0, 1, 2, 3, 4, 5), 1, 5)
        k = test_multiplicities(spec, split)
        assert k.tolist() == [2, 2, 1]
        assert sum(int(a != b) for a, b in zip(k, spec.i)) == 1

    def test_hypergeometric_histogram(self):
        spec = PopulationSpec((0,) * 5, (4, 4, 4, 4, 48))
        trials = 100_000
        owner = spec.point_of_item()
        perms = np.argsort(batch_words(stream_keys(77, np.arange(trials)), 0, 64), axis=1, kind="stable")
        k1 = (owner[perms[:, :48]] == 0).sum(axis=1)
        # spot check against the scalar Split path
        split = Split(tuple(CounterRNG(77, 3).permutation(64).tolist()), 16, 48)
        assert test_multiplicities(spec, split)[0] == k1[3]
        pmf = [float(hypergeometric_pmf_exact(64, 4, 48, k)) for k in range(5)]
        assert chi2_pvalue(np.bincount(k1, minlength=5), pmf) > 0.001

    def test_all_copies_in_test_iff_full_count(self):
        spec = PopulationSpec((0, 1), (2, 3))
        for t in range(50):
            split = Split(tuple(CounterRNG(0, t).permutation(5).tolist()), 2, 3)
            k = test_multiplicities(spec, split)
            test_pts = [spec.point_of_item()[i] for i in split.test_indices]
            for j in range(2):
                assert (k[j] == spec.i[j]) == (test_pts.count(j) == spec.i[j])
