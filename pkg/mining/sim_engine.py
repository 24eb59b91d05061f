"""Discrete-event Monte Carlo engine

One step is one block discovery somewhere in the network, drawn in proportion to
hashpower. Strategies decide what happens to the block: honest miners publish it,
withholding infiltrators destroy it, cartel members feed the selfish state machine.
The run produces the full block DAG, pool share ledgers and per-miner revenue.
"""
import json
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction

import numpy as np
import pandas as pd

from mining import attack_selfish, attack_withholding, core_model
from mining.errors import ConfigError, ModelError
from mining.miners import MinerSpec, Strategy
from mining.pool_accounting import (
    PoolConfig, PoolLedger, distribute_pps, distribute_proportional, to_satoshis,
)

logger = logging.getLogger(__name__)

GENESIS = 0
GENESIS_OWNER = 'genesis'
DEFAULT_SHARE_RATIO = 2 ** 20
DEFAULT_DIFFICULTY = 1418481395.0
CHUNK = 1 << 16
POWER_TOLERANCE = 1e-9


class Status(str, Enum):
    MAIN = 'main'
    STALE = 'stale'


@dataclass(frozen=True)
class SimConfig:
    """A full scenario for one run

    ``share_difficulty_ratio`` is the expected number of ledger shares per block
    opportunity. ``coalition`` lists miners that belong to the rogue side without
    carrying an attack strategy themselves (the private capacity of a withholding
    coalition).
    """
    miners: tuple
    total_blocks: int
    gamma: float = 0.0
    reward_per_block: float = 25.0
    share_difficulty_ratio: int = DEFAULT_SHARE_RATIO
    seed: int = 0
    fork_punishment: float | None = None
    pools: tuple = ()
    natural_fork_rate: float = 0.0
    share_noise: bool = False
    difficulty: float = DEFAULT_DIFFICULTY
    tx_fees: float = 0.0
    coalition: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, 'miners', tuple(self.miners))
        object.__setattr__(self, 'pools', tuple(self.pools))
        object.__setattr__(self, 'coalition', tuple(self.coalition))
        self._validate()

    def _validate(self):
        if not self.miners:
            raise ConfigError('at least one miner is required', 'miners')
        if self.total_blocks < 1:
            raise ConfigError(f'total_blocks must be >= 1, got {self.total_blocks}', 'total_blocks')
        if not 0 <= self.gamma <= 1:
            raise ConfigError(f'gamma must lie in [0, 1], got {self.gamma}', 'gamma')
        if self.reward_per_block < 0 or self.tx_fees < 0:
            raise ConfigError('block reward and fees must be non-negative', 'reward_per_block')
        if self.share_difficulty_ratio < 1:
            raise ConfigError('share_difficulty_ratio must be >= 1', 'share_difficulty_ratio')
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError('seed must be a 64-bit unsigned integer', 'seed')
        if self.fork_punishment is not None and not 0 <= self.fork_punishment <= 1:
            raise ConfigError(f'fork_punishment must lie in [0, 1], got {self.fork_punishment}', 'fork_punishment')
        if not 0 <= self.natural_fork_rate < 1:
            raise ConfigError('natural_fork_rate must lie in [0, 1)', 'natural_fork_rate')
        try:
            core_model.Difficulty(self.difficulty)
        except ModelError as e:
            raise ConfigError(str(e), 'difficulty') from None

        ids = [m.id for m in self.miners]
        if len(set(ids)) != len(ids):
            raise ConfigError('miner ids must be unique', 'miners')
        total = math.fsum(m.power_fraction for m in self.miners)
        if abs(total - 1) > POWER_TOLERANCE:
            raise ConfigError(f'power fractions must sum to 1, got {total:.12f}', 'miners')

        pool_ids = [p.id for p in self.pools]
        if len(set(pool_ids)) != len(pool_ids):
            raise ConfigError('pool ids must be unique', 'pools')
        cartels = {m.cartel_id for m in self.miners if m.strategy is Strategy.SELFISH}
        if len(cartels) > 1:
            raise ConfigError('only one selfish cartel is supported', 'miners')
        for cartel in cartels:
            if cartel in pool_ids or cartel in ids:
                raise ConfigError(f'cartel id {cartel!r} clashes with a pool or miner id', 'miners')
        if cartels and self.cartel_power == 0:
            raise ConfigError('selfish members present but the cartel has no hashpower', 'miners')
        if cartels and self.natural_fork_rate > 0:
            raise ConfigError('natural forks cannot be combined with a selfish cartel', 'natural_fork_rate')
        for m in self.miners:
            if m.strategy is not Strategy.SELFISH and m.pool is not None and m.pool not in pool_ids:
                raise ConfigError(f'unknown pool {m.pool!r}', f'miners.{m.id}.pool')
        for member in self.coalition:
            if member not in ids:
                raise ConfigError(f'unknown coalition member {member!r}', 'coalition')

    @property
    def cartel_id(self):
        for m in self.miners:
            if m.strategy is Strategy.SELFISH:
                return m.cartel_id
        return None

    @property
    def cartel_power(self):
        return math.fsum(m.power_fraction for m in self.miners if m.strategy is Strategy.SELFISH)

    @property
    def rogue_ids(self):
        """Miners on the attacking side: infiltrators, cartel members and the coalition"""
        ids = {m.id for m in self.miners if m.strategy is not Strategy.HONEST}
        return frozenset(ids | set(self.coalition))

    def pool_config(self, pool_id):
        for p in self.pools:
            if p.id == pool_id:
                return p
        return PoolConfig(id=pool_id)

    def to_dict(self):
        return {
            'miners': [m.to_dict() for m in self.miners],
            'pools': [p.to_dict() for p in self.pools],
            'total_blocks': self.total_blocks,
            'gamma': self.gamma,
            'reward_per_block': self.reward_per_block,
            'share_difficulty_ratio': self.share_difficulty_ratio,
            'seed': self.seed,
            'fork_punishment': self.fork_punishment,
            'natural_fork_rate': self.natural_fork_rate,
            'share_noise': self.share_noise,
            'difficulty': self.difficulty,
            'tx_fees': self.tx_fees,
            'coalition': list(self.coalition),
        }

    @classmethod
    def from_dict(cls, data):
        options = {k: data[k] for k in (
            'gamma', 'reward_per_block', 'share_difficulty_ratio', 'seed', 'fork_punishment',
            'natural_fork_rate', 'share_noise', 'difficulty', 'tx_fees',
        ) if data.get(k) is not None}
        return cls(
            miners=tuple(MinerSpec.from_dict(m) for m in data.get('miners', ())),
            pools=tuple(PoolConfig.from_dict(p) for p in data.get('pools', ())),
            total_blocks=int(data['total_blocks']),
            coalition=tuple(data.get('coalition', ())),
            **options,
        )

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class BlockEvent:
    """One mined block; ``published_at`` is None for blocks the network never saw"""
    id: int
    height: int
    owner: str
    parent: int | None
    published_at: int | None
    status: Status
    was_withheld: bool = False
    was_secret: bool = False

    @property
    def flags(self):
        return '|'.join(name for name, on in (('withheld', self.was_withheld), ('secret', self.was_secret)) if on)


class BlockDag:
    """Column store of every block of a run, indexed by block id (genesis is 0)"""

    COLUMNS = ['id', 'height', 'owner', 'parent', 'published_at', 'status', 'flags']

    def __init__(self, height, owner, parent, published_at, main, withheld, secret, owners):
        self.height = np.asarray(height, dtype=np.int64)
        self.owner = np.asarray(owner, dtype=np.int64)
        self.parent = np.asarray(parent, dtype=np.int64)
        self.published_at = np.asarray(published_at, dtype=np.int64)
        self.main = np.asarray(main, dtype=bool)
        self.withheld = np.asarray(withheld, dtype=bool)
        self.secret = np.asarray(secret, dtype=bool)
        self.owners = tuple(owners)

    def __len__(self):
        return len(self.height)

    def __iter__(self):
        return (self.event(i) for i in range(len(self)))

    def owner_labels(self):
        return [GENESIS_OWNER if k < 0 else self.owners[k] for k in self.owner]

    def published_mask(self):
        return self.published_at >= 0

    def event(self, i):
        parent = int(self.parent[i])
        published = int(self.published_at[i])
        k = int(self.owner[i])
        return BlockEvent(
            id=i,
            height=int(self.height[i]),
            owner=GENESIS_OWNER if k < 0 else self.owners[k],
            parent=None if parent < 0 else parent,
            published_at=None if published < 0 else published,
            status=Status.MAIN if self.main[i] else Status.STALE,
            was_withheld=bool(self.withheld[i]),
            was_secret=bool(self.secret[i]),
        )

    def main_chain_length(self):
        return int(np.count_nonzero(self.main)) - 1

    def frame(self):
        """Event log as a DataFrame (CSV export schema)"""
        flags = np.full(len(self), '', dtype=object)
        flags[self.withheld] = 'withheld'
        flags[self.secret & ~self.withheld] = 'secret'
        return pd.DataFrame({
            'id': np.arange(len(self)),
            'height': self.height,
            'owner': self.owner_labels(),
            'parent': pd.Series(self.parent, dtype='Int64').mask(self.parent < 0),
            'published_at': pd.Series(self.published_at, dtype='Int64').mask(self.published_at < 0),
            'status': np.where(self.main, Status.MAIN.value, Status.STALE.value),
            'flags': flags,
        }, columns=self.COLUMNS)

    def to_csv(self, path):
        self.frame().to_csv(path, index=False)

    @classmethod
    def from_frame(cls, frame):
        """Rebuild a DAG from an event-log or minimal block-header frame

        Only ``height``, ``owner``, ``parent`` and ``status`` are required. Without an
        ``id`` column block ids are row positions. Rows are not validated here; see
        ``detection.validate_dag``.
        """
        missing = {'height', 'owner', 'parent', 'status'} - set(frame.columns)
        if missing:
            raise ModelError(f'block table is missing columns: {", ".join(sorted(missing))}')
        frame = frame.reset_index(drop=True)
        n = len(frame)
        if 'id' in frame.columns:
            ids = frame['id'].astype('int64').to_numpy()
            position = {int(block_id): i for i, block_id in enumerate(ids)}
            if len(position) != n:
                raise ModelError('block ids must be unique')
        else:
            position = {i: i for i in range(n)}

        parent = np.full(n, -1, dtype=np.int64)
        raw_parent = pd.to_numeric(frame['parent'], errors='coerce')
        for i, value in enumerate(raw_parent):
            if pd.isna(value) or value < 0:
                continue
            # unknown parents map past the end so validation can report them
            parent[i] = position.get(int(value), n)

        labels = frame['owner'].astype(str).tolist()
        owners = sorted(set(labels) - {GENESIS_OWNER})
        index = {label: k for k, label in enumerate(owners)}
        owner = np.array([index.get(label, -1) for label in labels], dtype=np.int64)

        flags = frame['flags'].fillna('').astype(str) if 'flags' in frame.columns else pd.Series([''] * n)
        withheld = flags.str.contains('withheld').to_numpy()
        if 'published_at' in frame.columns:
            published = pd.to_numeric(frame['published_at'], errors='coerce').fillna(-1).astype('int64').to_numpy()
        else:
            published = np.where(withheld, -1, 0)

        return cls(
            height=frame['height'].astype('int64').to_numpy(),
            owner=owner,
            parent=parent,
            published_at=published,
            main=(frame['status'].astype(str).str.lower() == Status.MAIN.value).to_numpy(),
            withheld=withheld,
            secret=flags.str.contains('secret').to_numpy(),
            owners=owners,
        )

    @classmethod
    def read_csv(cls, path):
        return cls.from_frame(pd.read_csv(path))

    @classmethod
    def from_events(cls, events):
        """Build a DAG from BlockEvents whose ids are 0..n-1 in order"""
        events = sorted(events, key=lambda e: e.id)
        frame = pd.DataFrame([{
            'id': e.id, 'height': e.height, 'owner': e.owner,
            'parent': -1 if e.parent is None else e.parent,
            'published_at': -1 if e.published_at is None else e.published_at,
            'status': Status(e.status).value, 'flags': e.flags,
        } for e in events])
        return cls.from_frame(frame)


@dataclass
class SimResult:
    """Outcome of one run; money in satoshis"""
    config: SimConfig
    dag: BlockDag
    revenue: dict
    share_ledger: dict
    ledgers: dict
    payouts: dict = field(default_factory=dict)
    operator_balance: dict = field(default_factory=dict)
    burned: int = 0
    reward_satoshis: int = 0

    @property
    def main_blocks(self):
        return self.dag.main_chain_length()

    @property
    def stale_count(self):
        """Published blocks that lost a fork (withheld blocks excluded)"""
        mask = self.dag.published_mask() & ~self.dag.main & ~self.dag.withheld
        return int(np.count_nonzero(mask))

    @property
    def withheld_count(self):
        return int(np.count_nonzero(self.dag.withheld))

    def revenue_btc(self, miner_id):
        return self.revenue.get(miner_id, 0) / 10 ** 8

    def revenue_fraction(self, miner_ids):
        total = sum(self.revenue.values())
        if total == 0:
            return 0.0
        return sum(self.revenue.get(m, 0) for m in miner_ids) / total

    def blocks_published_by(self):
        """Published (non-withheld) blocks per miner id, genesis excluded"""
        mask = self.dag.published_mask() & (self.dag.owner >= 0)
        counts = np.bincount(self.dag.owner[mask], minlength=len(self.dag.owners))
        return {miner: int(counts[k]) for k, miner in enumerate(self.dag.owners)}

    def main_blocks_by(self):
        mask = self.dag.main & (self.dag.owner >= 0)
        counts = np.bincount(self.dag.owner[mask], minlength=len(self.dag.owners))
        return {miner: int(counts[k]) for k, miner in enumerate(self.dag.owners)}


def _cdf(powers):
    weights = np.asarray(powers, dtype=float)
    if weights.ndim != 1 or weights.size == 0 or np.any(weights < 0):
        raise ModelError('powers must be a non-empty list of non-negative numbers')
    total = weights.sum()
    if total <= 0:
        raise ModelError('at least one power must be positive')
    cdf = np.cumsum(weights / total)
    cdf[-1] = 1.0
    return cdf


def next_block_owner(powers, rng):
    """Index of the miner that finds the next block, drawn in proportion to power"""
    return int(draw_block_owners(powers, rng, 1)[0])


def draw_block_owners(powers, rng, size, cdf=None):
    """``size`` independent finder draws"""
    cdf = _cdf(powers) if cdf is None else cdf
    idx = np.searchsorted(cdf, rng.random(size), side='right')
    return np.minimum(idx, len(cdf) - 1)


def resolve_fork(branch_a_depth, branch_b_depth):
    """Longest-chain rule: 'A', 'B', or None while the branches are tied"""
    if branch_a_depth < 0 or branch_b_depth < 0:
        raise ModelError('branch depths must be non-negative')
    if branch_a_depth > branch_b_depth:
        return 'A'
    if branch_b_depth > branch_a_depth:
        return 'B'
    return None


class _Chain:
    """Preallocated block store filled during a run"""

    def __init__(self, capacity):
        self.height = np.zeros(capacity, dtype=np.int64)
        self.owner = np.full(capacity, -1, dtype=np.int64)
        self.parent = np.full(capacity, -1, dtype=np.int64)
        self.published_at = np.full(capacity, -1, dtype=np.int64)
        self.withheld = np.zeros(capacity, dtype=bool)
        self.secret = np.zeros(capacity, dtype=bool)
        self.published_at[GENESIS] = 0
        self.size = 1

    def add(self, owner, parent, published_at=-1, withheld=False, secret=False):
        block = self.size
        self.height[block] = self.height[parent] + 1
        self.owner[block] = owner
        self.parent[block] = parent
        self.published_at[block] = published_at
        self.withheld[block] = withheld
        self.secret[block] = secret
        self.size += 1
        return block

    def main_mask(self, tip):
        main = np.zeros(self.size, dtype=bool)
        block = tip
        while block >= 0:
            main[block] = True
            block = self.parent[block]
        return main

    def to_dag(self, tip, owners):
        n = self.size
        return BlockDag(
            height=self.height[:n], owner=self.owner[:n], parent=self.parent[:n],
            published_at=self.published_at[:n], main=self.main_mask(tip),
            withheld=self.withheld[:n], secret=self.secret[:n], owners=owners,
        )


def _uniform_chunks(rng, cdf, total):
    """Yield (finder index, uniform) pairs for ``total`` events, drawn chunk by chunk"""
    remaining = total
    while remaining:
        n = min(CHUNK, remaining)
        finders = draw_block_owners(None, rng, n, cdf=cdf)
        uniforms = rng.random(n)
        yield from zip(finders.tolist(), uniforms.tolist())
        remaining -= n


def _run_linear(config, rng, cdf, drops):
    """Runs without forks: every published block extends the previous one"""
    n = config.total_blocks
    finders = np.concatenate([
        draw_block_owners(None, rng, min(CHUNK, n - start), cdf=cdf)
        for start in range(0, n, CHUNK)
    ])
    withheld = drops[finders]
    published = ~withheld
    ids = np.arange(1, n + 1, dtype=np.int64)
    published_before = np.cumsum(published) - published
    last_published = np.maximum.accumulate(np.where(published, ids, 0))
    parent = np.concatenate([[GENESIS], last_published[:-1]])

    height = np.concatenate([[0], published_before + 1])
    dag = BlockDag(
        height=height,
        owner=np.concatenate([[-1], finders]),
        parent=np.concatenate([[-1], parent]),
        published_at=np.concatenate([[0], np.where(published, ids - 1, -1)]),
        main=np.concatenate([[True], published]),
        withheld=np.concatenate([[False], withheld]),
        secret=np.zeros(n + 1, dtype=bool),
        owners=[m.id for m in config.miners],
    )
    return dag


def _run_sequential(config, rng, cdf, drops):
    """Runs with a selfish cartel or natural forks"""
    miners = config.miners
    is_selfish = [m.strategy is Strategy.SELFISH for m in miners]
    drops = drops.tolist()
    chain = _Chain(config.total_blocks + 1)
    cartel = config.cartel_id is not None
    gamma = config.gamma
    fork_rate = config.natural_fork_rate

    state = attack_selfish.SelfishState()
    tips = [GENESIS]  # honest tips when there is no cartel (two during a natural fork)

    for event, (k, u) in enumerate(_uniform_chunks(rng, cdf, config.total_blocks)):
        if cartel and is_selfish[k]:
            block = chain.add(k, state.attacker_tip, secret=True)
            state, released = attack_selfish.step(state, attack_selfish.AttackerFinds(block))
            for b in released:
                chain.published_at[b] = event
            continue

        if cartel:
            # gamma of the honest side mines the cartel branch during a tie, redrawn per event
            on_attacker = state.public_fork and u < gamma
            parent = state.attacker_public_tip if on_attacker else state.honest_tip
        elif len(tips) == 2:
            parent = tips[0] if u < 0.5 else tips[1]
        elif fork_rate and u < fork_rate and tips[0] != GENESIS:
            # a simultaneous discovery on the same parent as the current tip
            parent = int(chain.parent[tips[0]])
        else:
            parent = tips[0]

        if drops[k]:
            chain.add(k, parent, withheld=True)
            continue

        block = chain.add(k, parent, published_at=event)
        if cartel:
            branch = attack_selfish.Branch.ATTACKER if on_attacker else attack_selfish.Branch.PUBLIC
            state, released = attack_selfish.step(state, attack_selfish.HonestFinds(block, branch))
            for b in released:
                chain.published_at[b] = event
        elif parent != tips[0] and len(tips) == 1:
            tips = [tips[0], block]
        else:
            tips = [block]

    if cartel:
        tip = _settle_cartel(state, chain, config, rng)
    elif len(tips) == 2:
        tip = tips[0] if rng.random() < 0.5 else tips[1]
    else:
        tip = tips[0]

    dag = chain.to_dag(tip, [m.id for m in miners])
    if cartel:
        attack_selfish.check_two_branches(dag, config.rogue_ids)
    return dag


def _settle_cartel(state, chain, config, rng):
    """Resolve whatever is open when the horizon ends"""
    if state.secret_blocks:
        for b in state.secret_blocks:
            chain.published_at[b] = config.total_blocks
        return state.attacker_tip
    if state.public_fork:
        # the next block would decide the tie
        alpha = config.cartel_power
        if rng.random() < alpha + (1 - alpha) * config.gamma:
            return state.attacker_public_tip
        return state.honest_tip
    return state.honest_tip


def _block_values(config, dag, reward):
    """Satoshis earned by each main-chain block after fork punishment"""
    values = np.where(dag.main, reward, 0).astype(np.int64)
    values[GENESIS] = 0
    rho = config.fork_punishment
    if rho:
        published = dag.published_mask() & ~dag.withheld
        counts = np.bincount(dag.height[published], minlength=int(dag.height.max()) + 1)
        contested = dag.main & (counts[dag.height] >= 2)
        contested[GENESIS] = False
        punished = reward - int(round(reward * rho))
        values[contested] = punished
    return values


def _settle(config, dag, rng):
    """Credit main-chain blocks to payees and run every pool's payout"""
    reward = to_satoshis(config.reward_per_block) + to_satoshis(config.tx_fees)
    values = _block_values(config, dag, reward)
    burned = int(reward * dag.main_chain_length() - values.sum())

    miners = config.miners
    mined = dag.main & (dag.owner >= 0)
    credited = np.zeros(len(miners), dtype=np.int64)
    np.add.at(credited, dag.owner[mined], values[mined])
    main_counts = np.bincount(dag.owner[mined], minlength=len(miners))

    ledgers = {}
    revenue = {}
    for k, m in enumerate(miners):
        payee = m.payee
        if payee == m.id:
            revenue[m.id] = revenue.get(m.id, 0) + int(credited[k])
            continue
        expected = m.power_fraction * config.total_blocks * config.share_difficulty_ratio
        shares = int(rng.poisson(expected)) if config.share_noise and expected > 0 else int(round(expected))
        ledger = ledgers.get(payee) or PoolLedger(pool_id=payee)
        ledgers[payee] = ledger.submit_shares(m.id, shares).credit_block(int(credited[k]), int(main_counts[k]))

    operator_balance = {}
    pool_payouts = {}
    for pool_id, ledger in sorted(ledgers.items()):
        cfg = config.pool_config(pool_id)
        if cfg.is_pps:
            payouts = distribute_pps(ledger, cfg, _pps_rate_per_share(config, cfg, reward))
        else:
            payouts = distribute_proportional(ledger, cfg)
        for miner, amount in payouts.items():
            revenue[miner] = revenue.get(miner, 0) + amount
        operator_balance[pool_id] = ledger.revenue - sum(payouts.values())
        pool_payouts[pool_id] = payouts

    share_ledger = {(pool_id, miner): count
                    for pool_id, ledger in sorted(ledgers.items())
                    for miner, count in sorted(ledger.shares.items())}
    return revenue, share_ledger, ledgers, pool_payouts, operator_balance, burned, reward


def _pps_rate_per_share(config, cfg, reward):
    """Satoshis paid per ledger share by a PPS pool"""
    scheme = cfg.reward_scheme
    if scheme.rate is None:
        fair_block = Fraction(reward) * (1 - Fraction(repr(cfg.fee_fraction)))
        return fair_block / config.share_difficulty_ratio
    per_block = Fraction(repr(scheme.rate)) * Fraction(repr(config.difficulty)) * 10 ** 8
    return per_block / config.share_difficulty_ratio


def run(config):
    """Simulate ``config.total_blocks`` block discoveries; deterministic given the seed"""
    rng = core_model.make_rng(config.seed)
    cdf = _cdf([m.power_fraction for m in config.miners])
    drops = np.array([
        m.strategy is not Strategy.SELFISH
        and attack_withholding.apply_strategy(m, attack_withholding.Found.BLOCK) is attack_withholding.Action.DROP
        for m in config.miners
    ], dtype=bool)

    logger.debug('run: %d miners, %d blocks, seed=%d', len(config.miners), config.total_blocks, config.seed)
    if config.cartel_id is None and config.natural_fork_rate == 0:
        dag = _run_linear(config, rng, cdf, drops)
    else:
        dag = _run_sequential(config, rng, cdf, drops)

    revenue, share_ledger, ledgers, payouts, operator_balance, burned, reward = _settle(config, dag, rng)
    result = SimResult(
        config=config,
        dag=dag,
        revenue=revenue,
        share_ledger=share_ledger,
        ledgers=ledgers,
        payouts=payouts,
        operator_balance=operator_balance,
        burned=burned,
        reward_satoshis=reward,
    )
    logger.debug('run done: main=%d stale=%d withheld=%d', result.main_blocks, result.stale_count,
                 result.withheld_count)
    return result
