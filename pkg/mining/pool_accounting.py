"""Pool ledgers, reward distribution and pay-per-share arithmetic

Money is kept in integer satoshis; BTC only appears at the edges (configs, reports).
"""
import logging
from dataclasses import dataclass, field, replace
from decimal import ROUND_HALF_EVEN, Decimal
from fractions import Fraction

import pandas as pd

from mining.errors import ConfigError, ModelError

logger = logging.getLogger(__name__)

SATOSHIS_PER_BTC = 10 ** 8


def to_satoshis(btc):
    """Convert a BTC amount to integer satoshis (half-even rounding)"""
    amount = Decimal(repr(btc)) if isinstance(btc, float) else Decimal(btc)
    return int((amount * SATOSHIS_PER_BTC).quantize(Decimal(1), rounding=ROUND_HALF_EVEN))


def to_btc(satoshis):
    return satoshis / SATOSHIS_PER_BTC


@dataclass(frozen=True)
class Proportional:
    """Block revenue split in proportion to submitted shares"""
    name = 'proportional'


@dataclass(frozen=True)
class PayPerShare:
    """Fixed payout per difficulty-1 share; ``rate=None`` means the fair rate"""
    rate: float | None = None
    name = 'pps'

    def __post_init__(self):
        if self.rate is not None and self.rate < 0:
            raise ConfigError(f'PPS rate must be non-negative, got {self.rate}', 'reward_scheme.rate')


@dataclass(frozen=True)
class PoolConfig:
    """Pool identity, fee and reward scheme"""
    id: str
    fee_fraction: float = 0.0
    reward_scheme: Proportional | PayPerShare = field(default_factory=Proportional)

    def __post_init__(self):
        if not self.id:
            raise ConfigError('pool id must not be empty', 'pools.id')
        if not 0 <= self.fee_fraction < 1:
            raise ConfigError(f'fee must lie in [0, 1), got {self.fee_fraction}', f'pools.{self.id}.fee_fraction')

    @property
    def is_pps(self):
        return isinstance(self.reward_scheme, PayPerShare)

    def to_dict(self):
        data = {'id': self.id, 'fee_fraction': self.fee_fraction, 'reward_scheme': self.reward_scheme.name}
        if self.is_pps:
            data['pps_rate'] = self.reward_scheme.rate
        return data

    @classmethod
    def from_dict(cls, data):
        scheme = data.get('reward_scheme', 'proportional')
        if scheme == 'proportional':
            reward_scheme = Proportional()
        elif scheme == 'pps':
            reward_scheme = PayPerShare(data.get('pps_rate'))
        else:
            raise ConfigError(f'unknown reward scheme {scheme!r}', f'pools.{data.get("id")}.reward_scheme')
        return cls(id=data['id'], fee_fraction=float(data.get('fee_fraction', 0.0)), reward_scheme=reward_scheme)


@dataclass(frozen=True)
class PoolLedger:
    """Running share/block/revenue ledger of one pool (revenue in satoshis)"""
    pool_id: str
    shares: dict = field(default_factory=dict)
    blocks_found: int = 0
    revenue: int = 0

    def __post_init__(self):
        if self.blocks_found < 0 or self.revenue < 0:
            raise ModelError('ledger counts must be non-negative')
        if any(count < 0 for count in self.shares.values()):
            raise ModelError('share counts must be non-negative')

    @property
    def total_shares(self):
        return sum(self.shares.values())

    def submit_shares(self, miner_id, count):
        shares = dict(self.shares)
        shares[miner_id] = shares.get(miner_id, 0) + count
        return replace(self, shares=shares)

    def credit_block(self, reward, blocks=1):
        return replace(self, blocks_found=self.blocks_found + blocks, revenue=self.revenue + reward)


def _fee_satoshis(revenue, fee_fraction):
    fee = Decimal(revenue) * Decimal(repr(float(fee_fraction)))
    return int(fee.quantize(Decimal(1), rounding=ROUND_HALF_EVEN))


def distribute_proportional(ledger, cfg):
    """Split ``ledger.revenue`` net of fees by shares; returns miner -> satoshis

    Largest-remainder rounding makes the payouts sum to the net revenue exactly.
    Ties in the remainder go to miners in id order.
    """
    total = ledger.total_shares
    if total == 0:
        if ledger.revenue > 0:
            raise ModelError(f'pool {ledger.pool_id} has revenue but no shares to pay')
        return {miner: 0 for miner in ledger.shares}

    net = ledger.revenue - _fee_satoshis(ledger.revenue, cfg.fee_fraction)
    payouts = {}
    remainders = []
    for miner in sorted(ledger.shares):
        quotient, remainder = divmod(net * ledger.shares[miner], total)
        payouts[miner] = quotient
        remainders.append((-remainder, miner))

    leftover = net - sum(payouts.values())
    for _, miner in sorted(remainders)[:leftover]:
        payouts[miner] += 1
    return payouts


def distribute_pps(ledger, cfg, rate_per_share):
    """Pay every share ``rate_per_share`` satoshis regardless of pool luck

    ``rate_per_share`` is per ledger share (may be fractional). Payouts are floored;
    the operator keeps or covers whatever differs from the pool revenue.
    """
    rate = Fraction(rate_per_share)
    if rate < 0:
        raise ModelError(f'PPS rate must be non-negative, got {rate_per_share}')
    return {miner: int(count * rate) for miner, count in sorted(ledger.shares.items())}


def pps_rate_check(difficulty, pps_rate):
    """Per-block payout implied by a PPS rate: difficulty * rate (BTC)"""
    d = getattr(difficulty, 'value', difficulty)
    if d <= 0:
        raise ModelError(f'difficulty must be positive, got {d}')
    if pps_rate < 0:
        raise ModelError(f'PPS rate must be non-negative, got {pps_rate}')
    return d * pps_rate


def fair_pps_rate(difficulty, reward_per_block, fee_fraction=0.0, tx_fees=0.0):
    """PPS rate (BTC per difficulty-1 share) that exactly passes on block revenue"""
    d = getattr(difficulty, 'value', difficulty)
    return (reward_per_block + tx_fees) * (1 - fee_fraction) / d


def implied_pps_rate(ledger, difficulty, share_ratio, fee_fraction=0.0):
    """PPS rate a pool would advertise if it passed on its realized revenue

    ``share_ratio`` is the number of ledger shares per block opportunity, so each
    ledger share stands for ``difficulty / share_ratio`` difficulty-1 shares.
    """
    if ledger.total_shares == 0:
        raise ModelError(f'pool {ledger.pool_id} has no shares')
    d = getattr(difficulty, 'value', difficulty)
    revenue = to_btc(ledger.revenue) * (1 - fee_fraction)
    return revenue * share_ratio / (ledger.total_shares * d)


def expected_pool_deficit(infiltrator_fraction_in_pool):
    """Revenue factor (1 - f) of a pool whose hashpower is a fraction f withholding"""
    f = infiltrator_fraction_in_pool
    if not 0 <= f < 1:
        raise ModelError(f'withholding fraction must lie in [0, 1), got {f}')
    return 1.0 - f


def infiltration_fraction(alpha, beta):
    """Share of an infiltrated pool's hashpower that withholds: a*b / (1 - a + a*b)"""
    return alpha * beta / (1 - alpha + alpha * beta)


def dilution_factor(alpha, beta):
    """Revenue factor of infiltrated pools: (1 - a) / (1 - a + a*b)"""
    return expected_pool_deficit(infiltration_fraction(alpha, beta))


def ledger_frame(ledger, payouts):
    """Ledger snapshot as a DataFrame with columns miner, shares, payout (BTC)"""
    rows = [
        {'miner': miner, 'shares': ledger.shares[miner], 'payout': to_btc(payouts.get(miner, 0))}
        for miner in sorted(ledger.shares)
    ]
    return pd.DataFrame(rows, columns=['miner', 'shares', 'payout'])
