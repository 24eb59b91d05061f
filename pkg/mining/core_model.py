"""Statistical law of mining: Poisson block counts and difficulty arithmetic

Block discovery by any fixed group of miners is treated as a Poisson process. A group
expected to find ``K`` blocks in a period actually finds ``Poisson(K)`` of them, so the
spread around ``K`` is ``sqrt(K)``. Difficulty is constant within a scenario.
"""
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import stats

from mining.errors import ModelError

# One difficulty-1 share is worth 2**32 hash attempts
HASHES_PER_SHARE = 2 ** 32


@dataclass(frozen=True)
class Hashrate:
    """Hashes per second"""
    value: float

    def __post_init__(self):
        if not math.isfinite(self.value) or self.value < 0:
            raise ModelError(f'hashrate must be finite and non-negative, got {self.value}')


@dataclass(frozen=True)
class Difficulty:
    """Network difficulty in difficulty-1 units"""
    value: float

    def __post_init__(self):
        if not math.isfinite(self.value) or self.value < 1:
            raise ModelError(f'difficulty must be >= 1, got {self.value}')

    @property
    def hashes_per_block(self):
        return self.value * HASHES_PER_SHARE


@dataclass(frozen=True)
class BlockCountDistribution:
    """Poisson block count: variance equals the mean"""
    mean: float

    @property
    def stddev(self):
        return math.sqrt(self.mean)

    @property
    def variance(self):
        return self.mean

    @property
    def relative_stddev(self):
        """Spread as a fraction of the mean (1/sqrt(K)); infinite for K=0"""
        if self.mean == 0:
            return math.inf
        return 1.0 / math.sqrt(self.mean)


def _hashes(h):
    return h.value if isinstance(h, Hashrate) else Hashrate(float(h)).value


def _difficulty(d):
    return d if isinstance(d, Difficulty) else Difficulty(float(d))


def block_probability(d):
    """Chance that a single hash attempt solves a block at difficulty ``d``"""
    return 1.0 / _difficulty(d).hashes_per_block


def expected_blocks(h, d, duration):
    """Expected blocks K = h * t / (d * 2**32) for hashrate ``h`` over ``duration`` seconds"""
    hashes = _hashes(h)
    difficulty = _difficulty(d)
    if duration < 0:
        raise ModelError(f'duration must be non-negative, got {duration}')
    return hashes * duration / difficulty.hashes_per_block


def expected_shares(h, duration):
    """Expected difficulty-1 shares submitted by hashrate ``h`` over ``duration``"""
    if duration < 0:
        raise ModelError(f'duration must be non-negative, got {duration}')
    return _hashes(h) * duration / HASHES_PER_SHARE


def hashrate_from_blocks(blocks, d, duration):
    """Estimate the hashrate that would produce ``blocks`` in expectation

    Used when a group's computing power is unknown and only its block count is
    observed; the estimate inherits the sqrt(K) uncertainty of the count.
    """
    if blocks < 0:
        raise ModelError(f'block count must be non-negative, got {blocks}')
    if duration <= 0:
        raise ModelError(f'duration must be positive, got {duration}')
    return Hashrate(blocks * _difficulty(d).hashes_per_block / duration)


def mining_distribution(K):
    """Distribution of the block count of a group expected to mine ``K`` blocks"""
    if K < 0 or not math.isfinite(K):
        raise ModelError(f'expected block count must be finite and non-negative, got {K}')
    return BlockCountDistribution(mean=float(K))


def sample_block_count(K, rng):
    """One Poisson(K) draw from an explicit numpy Generator"""
    if K < 0:
        raise ModelError(f'expected block count must be non-negative, got {K}')
    if K == 0:
        return 0
    return int(rng.poisson(K))


def binomial_poisson_gap(n, mu):
    """Relative gap between the Poisson variance n*mu and the binomial n*(mu - mu**2)

    Computed in exact rational arithmetic because for realistic ``mu`` (2**-64) the
    squared term vanishes in floating point.
    """
    if n < 1:
        raise ModelError(f'trial count must be >= 1, got {n}')
    if not 0 < mu < 1:
        raise ModelError(f'per-trial probability must lie in (0, 1), got {mu}')
    m = Fraction(mu)
    poisson_variance = n * m
    binomial_variance = n * (m - m * m)
    return float((poisson_variance - binomial_variance) / poisson_variance)


def tail_probability(n_sigma):
    """Probability that a Gaussian lands more than ``n_sigma`` deviations from its mean"""
    return float(2.0 * stats.norm.sf(abs(n_sigma)))


def make_rng(seed):
    """Deterministic PCG64 generator for one replicate"""
    return np.random.Generator(np.random.PCG64(seed))


def replicate_seeds(seed, count):
    """Independent 64-bit seeds for ``count`` replicates derived from a master seed

    Words come from ``SeedSequence.generate_state``, so the first k seeds do not depend on ``count``.
    """
    if count < 1:
        raise ModelError(f'replicate count must be >= 1, got {count}')
    state = np.random.SeedSequence(seed).generate_state(count, dtype=np.uint64)
    return [int(s) for s in state]
