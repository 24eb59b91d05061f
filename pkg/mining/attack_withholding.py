"""Generalized block-withholding attack

A rogue coalition holding a fraction ``alpha`` of the network hashpower sends a
fraction ``beta`` of it into public pools, where it submits every share but destroys
every full block it finds. The rest mines privately. Infiltrated pools are paid for
shares worth ``1 - alpha + alpha*beta`` of the network but only win the blocks of the
honest ``1 - alpha``, so every member of those pools, rogue or honest, is diluted by the
same factor while the private capacity is not.
"""
import logging
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from mining import core_model
from mining.errors import ModelError, StrategyError
from mining.miners import MinerSpec, Strategy
from mining.pool_accounting import PoolConfig, dilution_factor

logger = logging.getLogger(__name__)


class Found(str, Enum):
    SHARE = 'share'
    BLOCK = 'block'


class Action(str, Enum):
    SUBMIT = 'submit'     # share goes to the pool manager
    PUBLISH = 'publish'   # block goes to the network
    DROP = 'drop'         # block is destroyed


@dataclass(frozen=True)
class WithholdParams:
    """Rogue fraction ``alpha`` of network power, infiltrating fraction ``beta`` of it"""
    alpha: float
    beta: float

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ModelError(f'alpha must lie in (0, 1), got {self.alpha}')
        if not 0 <= self.beta <= 1:
            raise ModelError(f'beta must lie in [0, 1], got {self.beta}')

    @property
    def infiltrating_power(self):
        return self.alpha * self.beta

    @property
    def private_power(self):
        return self.alpha * (1 - self.beta)

    def to_dict(self):
        return {'family': 'withholding', 'alpha': self.alpha, 'beta': self.beta}


def _gain(alpha, beta):
    return alpha * beta * (1 - beta) / (1 - alpha)


def relative_gain(p):
    """Rogue revenue per unit power over honest revenue per unit power, minus one

    Equals a*b*(1 - b) / (1 - a).
    """
    return _gain(p.alpha, p.beta)


def rogue_rate_ratio(p):
    """How much more the private capacity earns per unit power than pool members"""
    return (1 - p.alpha * (1 - p.beta)) / (1 - p.alpha)


def private_branch_premium(p):
    """Premium of the private (non-infiltrating) rogue capacity: (1 - a(1 - b)) / (1 - a) - 1"""
    return rogue_rate_ratio(p) - 1


def honest_premium(p):
    """Honest revenue per unit power relative to an attack-free network, minus one

    Negative whenever alpha*beta > 0: withheld blocks are simply lost.
    """
    return dilution_factor(p.alpha, p.beta) - 1


def sabotage_gain(alpha):
    """Relative gain of the pure sabotage variant (everything infiltrates): always zero"""
    return relative_gain(WithholdParams(alpha, 1.0))


def optimal_beta(alpha, step=0.01):
    """Infiltration share maximizing the relative gain, found on a grid over [0, 1]"""
    if not 0 < alpha < 1:
        raise ModelError(f'alpha must lie in (0, 1), got {alpha}')
    points = int(round(1 / step)) + 1
    grid = np.linspace(0.0, 1.0, points)
    gains = _gain(alpha, grid)
    best = float(grid[int(np.argmax(gains))])
    return round(best, 10)


def apply_strategy(miner, found):
    """What ``miner`` does with a share or block it just found"""
    found = Found(found)
    if found is Found.SHARE:
        # every strategy submits shares as soon as possible
        return Action.SUBMIT
    if miner.strategy is Strategy.WITHHOLD:
        return Action.DROP
    if miner.strategy is Strategy.SELFISH:
        raise StrategyError('selfish blocks are released by the selfish state machine')
    return Action.PUBLISH


def build_withholding_config(params, total_blocks, seed, pool_shares=None, honest_per_pool=1,
                             reward_per_block=25.0, share_noise=False):
    """Canonical withholding scenario

    Infiltration is spread over the public pools in proportion to their size; with
    ``pool_shares=None`` all public pools are collapsed into one aggregate pool since
    uniform spreading makes their dynamics identical. The private capacity mines solo.
    """
    from mining.sim_engine import SimConfig

    if pool_shares is None:
        pool_shares = {'public-pool': 1.0}
    total_share = sum(pool_shares.values())
    honest_power = 1 - params.alpha

    miners = []
    pools = []
    for pool_id, share in pool_shares.items():
        size = share / total_share
        pools.append(PoolConfig(id=pool_id))
        for k in range(honest_per_pool):
            miners.append(MinerSpec(
                id=f'honest-{pool_id}-{k}' if honest_per_pool > 1 else f'honest-{pool_id}',
                power_fraction=honest_power * size / honest_per_pool,
                pool=pool_id,
            ))
        if params.infiltrating_power > 0:
            miners.append(MinerSpec(
                id=f'rogue-in-{pool_id}',
                power_fraction=params.infiltrating_power * size,
                strategy=Strategy.WITHHOLD,
                pool=pool_id,
                target_pool=pool_id,
            ))

    coalition = []
    if params.private_power > 0:
        miners.append(MinerSpec(id='rogue-private', power_fraction=params.private_power))
        coalition.append('rogue-private')

    return SimConfig(
        miners=tuple(miners),
        pools=tuple(pools),
        total_blocks=total_blocks,
        reward_per_block=reward_per_block,
        seed=seed,
        share_noise=share_noise,
        coalition=tuple(coalition),
    )


@dataclass(frozen=True)
class WithholdingOutcome:
    """Revenue split of one withholding run"""
    rogue_revenue: int
    honest_revenue: int
    rogue_power: float
    honest_power: float
    opportunities: int
    main_blocks: int
    reward_per_block: int

    @property
    def premium(self):
        """Rogue revenue per unit power over honest revenue per unit power, minus one"""
        if self.honest_revenue == 0 or self.rogue_power == 0:
            return 0.0
        rogue_rate = self.rogue_revenue / self.rogue_power
        honest_rate = self.honest_revenue / self.honest_power
        return rogue_rate / honest_rate - 1

    @property
    def honest_premium(self):
        fair = self.honest_power * self.opportunities * self.reward_per_block
        return self.honest_revenue / fair - 1

    @property
    def main_rate(self):
        """Main-chain blocks per block opportunity"""
        return self.main_blocks / self.opportunities


def measure_premium(result):
    """Split a finished run's revenue between the rogue coalition and everyone else"""
    rogue_ids = result.config.rogue_ids
    rogue_revenue = sum(v for m, v in result.revenue.items() if m in rogue_ids)
    honest_revenue = sum(v for m, v in result.revenue.items() if m not in rogue_ids)
    rogue_power = sum(m.power_fraction for m in result.config.miners if m.id in rogue_ids)
    return WithholdingOutcome(
        rogue_revenue=rogue_revenue,
        honest_revenue=honest_revenue,
        rogue_power=rogue_power,
        honest_power=1 - rogue_power,
        opportunities=result.config.total_blocks,
        main_blocks=result.main_blocks,
        reward_per_block=result.reward_satoshis,
    )


@dataclass(frozen=True)
class GainEstimate:
    """Monte Carlo estimate of the relative gain over independent replicates"""
    mean: float
    stderr: float
    samples: tuple

    @property
    def ci_halfwidth(self):
        return 1.96 * self.stderr


def estimate(samples):
    values = np.asarray(samples, dtype=float)
    if len(values) > 1:
        stderr = float(values.std(ddof=1) / math.sqrt(len(values)))
    else:
        stderr = math.nan
    return GainEstimate(mean=float(values.mean()), stderr=stderr, samples=tuple(float(v) for v in values))


def simulate_gain(params, blocks, seed, replicates=8, **config_options):
    """Monte Carlo relative gain: ``replicates`` runs of ``blocks`` opportunities each"""
    from mining.sim_engine import run

    premiums = []
    for replicate_seed in core_model.replicate_seeds(seed, replicates):
        config = build_withholding_config(params, blocks, replicate_seed, **config_options)
        premiums.append(measure_premium(run(config)).premium)
    result = estimate(premiums)
    logger.debug('withholding alpha=%s beta=%s gain=%.5f +/- %.5f',
                 params.alpha, params.beta, result.mean, result.stderr)
    return result


def remap_identities(windows, churn, rng):
    """Split every observation window across ``churn`` short-lived identities

    Expected blocks are divided evenly; observed blocks are dealt out multinomially,
    as if each found block had been mined under one identity picked at random.
    """
    from mining.detection import ObservationWindow

    if churn < 1:
        raise ModelError(f'identity churn must be >= 1, got {churn}')
    if churn == 1:
        return list(windows)
    remapped = []
    weights = np.full(churn, 1.0 / churn)
    for window in windows:
        counts = rng.multinomial(window.observed_blocks, weights)
        for k, count in enumerate(counts):
            remapped.append(ObservationWindow(
                expected_blocks=window.expected_blocks / churn,
                observed_blocks=int(count),
                label=f'{window.label}#{k}',
            ))
    return remapped
