"""Poisson block counts and difficulty arithmetic"""
import math

import numpy as np
import pytest

from mining.core_model import (
    Difficulty, Hashrate, binomial_poisson_gap, block_probability, expected_blocks, expected_shares,
    hashrate_from_blocks, make_rng, mining_distribution, replicate_seeds, sample_block_count, tail_probability,
)
from mining.errors import ModelError

DAY = 86400
DIFFICULTY = 1418481395


class TestDifficultyArithmetic:

    def test_expected_blocks_for_a_large_pool(self):
        # 174 TH/s at the historical difficulty mines about two and a half blocks a day
        K = expected_blocks(174e12, DIFFICULTY, DAY)
        assert 2.4 <= K <= 2.6

    def test_block_probability_matches_hashes_per_block(self):
        assert block_probability(1) == pytest.approx(2.0 ** -32)

    def test_hashrate_round_trip(self):
        h = hashrate_from_blocks(10, DIFFICULTY, DAY)
        assert expected_blocks(h, DIFFICULTY, DAY) == pytest.approx(10)

    def test_expected_blocks_add_linearly(self):
        parts = [expected_blocks(Hashrate(h), DIFFICULTY, DAY) for h in (1e12, 3e12)]
        assert sum(parts) == pytest.approx(expected_blocks(4e12, DIFFICULTY, DAY))

    def test_expected_shares(self):
        assert expected_shares(2 ** 32, 10) == pytest.approx(10)

    @pytest.mark.parametrize('value', [0, 0.5, -1, math.inf])
    def test_invalid_difficulty(self, value):
        with pytest.raises(ModelError):
            Difficulty(value)

    def test_negative_hashrate(self):
        with pytest.raises(ModelError):
            Hashrate(-1.0)

    def test_negative_duration(self):
        with pytest.raises(ModelError):
            expected_blocks(1e12, DIFFICULTY, -1)


class TestMiningDistribution:

    def test_relative_spread_of_a_single_miner_year(self):
        dist = mining_distribution(18)
        assert dist.stddev == pytest.approx(math.sqrt(18))
        assert dist.relative_stddev == pytest.approx(0.2357, abs=1e-4)

    def test_zero_mean(self):
        dist = mining_distribution(0)
        assert dist.stddev == 0
        assert dist.relative_stddev == math.inf

    def test_negative_mean_rejected(self):
        with pytest.raises(ModelError):
            mining_distribution(-0.1)

    def test_zero_rate_never_finds_blocks(self, rng):
        assert sample_block_count(0, rng) == 0

    @pytest.mark.parametrize('K', [5, 18, 100])
    def test_variance_equals_mean(self, K):
        rng = make_rng(2024 + K)
        counts = np.array([sample_block_count(K, rng) for _ in range(100000)])
        ratio = counts.var() / counts.mean()
        assert 0.97 <= ratio <= 1.03

    def test_binomial_gap_is_the_trial_probability(self):
        mu = 2.0 ** -64
        assert binomial_poisson_gap(10 ** 6, mu) == pytest.approx(mu, rel=1e-12)

    def test_binomial_gap_rejects_bad_probability(self):
        with pytest.raises(ModelError):
            binomial_poisson_gap(10, 1.5)

    def test_tail_probability(self):
        assert tail_probability(3) == pytest.approx(0.0026998, rel=1e-4)
        assert tail_probability(-3) == tail_probability(3)


class TestSeeds:

    def test_same_seed_same_stream(self):
        assert make_rng(1).random() == make_rng(1).random()

    def test_replicate_seeds_are_deterministic_and_distinct(self):
        seeds = replicate_seeds(42, 8)
        assert seeds == replicate_seeds(42, 8)
        assert len(set(seeds)) == 8
        assert all(0 <= s < 2 ** 64 for s in seeds)

    def test_prefix_stable(self):
        assert replicate_seeds(42, 3) == replicate_seeds(42, 8)[:3]

    def test_count_must_be_positive(self):
        with pytest.raises(ModelError):
            replicate_seeds(42, 0)
