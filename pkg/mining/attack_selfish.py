"""Selfish mining (secret-branch block discarding)

The cartel keeps newly found blocks secret and releases them only when honest
miners catch up:

* lead 0, cartel finds      -> keep it secret, lead 1
* lead 1, honest finds      -> reveal the secret block, public tie between two branches
* tie, anyone finds         -> the branch it extends wins, consensus again
* lead 2, honest finds      -> reveal everything, the cartel branch is longer by one
* lead >= 3, honest finds   -> reveal the oldest secret block, lead drops by one

At most two public branches exist at any time, one honest-only and one cartel-only,
and only the cartel branch can carry a secret extension.
"""
import logging
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from mining import core_model
from mining.errors import ModelError, StrategyError
from mining.miners import MinerSpec, Strategy

logger = logging.getLogger(__name__)

CARTEL_ID = 'cartel'

# mining a random branch in a tie is exactly gamma = 1/2
RANDOM_TIE_BREAK = 0.5
FIRST_SEEN_LOSS = 0.0


class Branch(str, Enum):
    PUBLIC = 'public'      # honest branch
    ATTACKER = 'attacker'  # published cartel branch during a tie


@dataclass(frozen=True)
class AttackerFinds:
    block: int


@dataclass(frozen=True)
class HonestFinds:
    block: int
    branch: Branch = Branch.PUBLIC


@dataclass(frozen=True)
class SelfishState:
    """Cartel view of the chain; tips are block ids

    The unpublished blocks are ``secret_log[secret_head:secret_head + lead]``. The log is
    append-only and shared between successive states, so a step never copies it.
    """
    lead: int = 0
    public_fork: bool = False
    honest_tip: int = 0
    attacker_tip: int = 0
    attacker_public_tip: int = 0
    secret_log: list = field(default_factory=list, compare=False, repr=False)
    secret_head: int = 0

    def __post_init__(self):
        if self.lead < 0:
            raise StrategyError(f'lead cannot be negative, got {self.lead}')
        if self.public_fork and self.lead:
            raise StrategyError('a public tie cannot carry a secret extension')
        if self.secret_head < 0 or self.secret_head + self.lead > len(self.secret_log):
            raise StrategyError(f'{len(self.secret_log) - self.secret_head} secret blocks for lead {self.lead}')

    @property
    def secret_blocks(self):
        return tuple(self.secret_log[self.secret_head:self.secret_head + self.lead])

    @property
    def in_consensus(self):
        return not self.public_fork and self.lead == 0

    def _with_secret(self, block):
        log, head = self.secret_log, self.secret_head
        if len(log) != head + self.lead:
            # this state was already extended along another path
            log, head = log[head:head + self.lead], 0
        log.append(block)
        return replace(self, lead=self.lead + 1, secret_log=log, secret_head=head, attacker_tip=block)


def _consensus(tip):
    return SelfishState(honest_tip=tip, attacker_tip=tip, attacker_public_tip=tip)


def step(state, event):
    """Advance the cartel state machine; returns ``(state, published_block_ids)``

    Parent selection for the new block happens in the engine: cartel blocks extend
    ``attacker_tip``, honest blocks extend ``honest_tip`` or, during a tie,
    ``attacker_public_tip`` when the honest finder mined on the cartel branch.
    """
    if isinstance(event, AttackerFinds):
        if state.public_fork:
            # winning the tie: publish at once, the cartel branch is now longest
            return _consensus(event.block), (event.block,)
        return state._with_secret(event.block), ()

    if not isinstance(event, HonestFinds):
        raise StrategyError(f'unknown event {event!r}')

    if event.branch is Branch.ATTACKER and not state.public_fork:
        raise StrategyError('honest miners can only extend the cartel branch during a tie')

    if state.public_fork:
        # either branch extended by one settles the tie
        return _consensus(event.block), ()

    if state.lead == 0:
        return _consensus(event.block), ()

    head = state.secret_head
    if state.lead == 1:
        # honest caught up: reveal the secret block and race
        secret = state.secret_log[head]
        return SelfishState(
            public_fork=True,
            honest_tip=event.block,
            attacker_tip=secret,
            attacker_public_tip=secret,
        ), (secret,)

    if state.lead == 2:
        # lead would drop to 1: reveal the whole secret branch, it wins by one block
        return _consensus(state.attacker_tip), state.secret_blocks

    # lead >= 3: reveal just enough to match the honest height. The revealed prefix ties
    # the honest branch, but the secret extension wins whichever tip honest miners pick,
    # so they are kept on their own branch.
    released = state.secret_log[head]
    return replace(
        state,
        lead=state.lead - 1,
        secret_head=head + 1,
        honest_tip=event.block,
        attacker_public_tip=released,
    ), (released,)


def profitability_threshold(ns):
    """Smallest cartel fraction for which the secret-branch strategy beats honest mining: (1 - ns) / (3 - 2ns)"""
    if not 0 <= ns <= 1:
        raise ModelError(f'network superiority must lie in [0, 1], got {ns}')
    return (1 - ns) / (3 - 2 * ns)


def closed_form_revenue(alpha, gamma):
    """Closed-form cartel revenue fraction of the secret-branch strategy, used to cross-check the simulation"""
    if not 0 <= alpha < 0.5:
        raise ModelError(f'closed form holds for alpha in [0, 0.5), got {alpha}')
    numerator = alpha * (1 - alpha) ** 2 * (4 * alpha + gamma * (1 - 2 * alpha)) - alpha ** 3
    denominator = 1 - alpha * (1 + (2 - alpha) * alpha)
    return numerator / denominator


@dataclass(frozen=True)
class SelfishParams:
    alpha: float
    gamma: float = RANDOM_TIE_BREAK

    def __post_init__(self):
        if not 0 <= self.alpha < 1:
            raise ModelError(f'alpha must lie in [0, 1), got {self.alpha}')
        if not 0 <= self.gamma <= 1:
            raise ModelError(f'gamma must lie in [0, 1], got {self.gamma}')

    def to_dict(self):
        return {'family': 'selfish', 'alpha': self.alpha, 'gamma': self.gamma}


def build_selfish_config(params, blocks, seed, fork_punishment=None, honest_miners=1, reward_per_block=25.0):
    """One cartel of power alpha against ``honest_miners`` equal solo miners"""
    from mining.sim_engine import SimConfig

    miners = [MinerSpec(id=f'{CARTEL_ID}-member', power_fraction=params.alpha,
                        strategy=Strategy.SELFISH, cartel_id=CARTEL_ID)]
    for k in range(honest_miners):
        miners.append(MinerSpec(id=f'honest-{k}', power_fraction=(1 - params.alpha) / honest_miners))
    return SimConfig(
        miners=tuple(miners),
        total_blocks=blocks,
        gamma=params.gamma,
        seed=seed,
        fork_punishment=fork_punishment,
        reward_per_block=reward_per_block,
    )


def attacker_revenue_fraction(result):
    """Cartel share of all revenue paid in a finished run"""
    cartel = result.config.rogue_ids
    paid = sum(result.revenue.values()) + sum(result.operator_balance.values())
    if paid == 0:
        return 0.0
    return sum(v for m, v in result.revenue.items() if m in cartel) / paid


def relative_revenue(params, blocks, seed, fork_punishment=None):
    """Monte Carlo cartel revenue fraction over ``blocks`` block discoveries"""
    from mining.sim_engine import run

    if params.alpha == 0:
        return 0.0
    result = run(build_selfish_config(params, blocks, seed, fork_punishment))
    return attacker_revenue_fraction(result)


def break_even_alpha(gamma, alphas, blocks, seed, fork_punishment=None):
    """Smallest cartel fraction on ``alphas`` whose simulated revenue beats its power

    Every grid point reuses ``seed`` so runs differing only in ``fork_punishment`` see
    the same block discoveries. Returns None when no grid point is profitable.
    """
    for alpha in sorted(alphas):
        revenue = relative_revenue(SelfishParams(alpha, gamma), blocks, seed, fork_punishment)
        logger.debug('selfish gamma=%s rho=%s alpha=%s revenue=%.5f', gamma, fork_punishment, alpha, revenue)
        if revenue > alpha:
            return alpha
    return None


@dataclass(frozen=True)
class WasteSplit:
    """Stale blocks by owner class, as counts over all published blocks"""
    attacker_stale: int
    honest_stale: int
    honest_child_of_stale: int
    child_of_stale: int
    published: int

    def _fraction(self, count):
        return count / self.published if self.published else 0.0

    @property
    def attacker_stale_fraction(self):
        return self._fraction(self.attacker_stale)

    @property
    def honest_stale_fraction(self):
        return self._fraction(self.honest_stale)

    @property
    def honest_child_of_stale_fraction(self):
        return self._fraction(self.honest_child_of_stale)

    def as_tuple(self):
        return (self.attacker_stale_fraction, self.honest_stale_fraction, self.honest_child_of_stale_fraction)


def split_waste(dag, attacker_ids):
    """Decompose the stale blocks of ``dag``; withheld blocks and genesis are ignored"""
    owners = dag.owner_labels()
    published = dag.published_mask() & (dag.parent >= 0)
    stale = published & ~dag.main
    is_attacker = np.array([label in attacker_ids for label in owners], dtype=bool)

    parent_stale = np.zeros(len(dag), dtype=bool)
    has_parent = dag.parent >= 0
    parent_stale[has_parent] = ~dag.main[dag.parent[has_parent]]
    child_of_stale = stale & parent_stale

    return WasteSplit(
        attacker_stale=int(np.count_nonzero(stale & is_attacker)),
        honest_stale=int(np.count_nonzero(stale & ~is_attacker)),
        honest_child_of_stale=int(np.count_nonzero(child_of_stale & ~is_attacker)),
        child_of_stale=int(np.count_nonzero(child_of_stale)),
        published=int(np.count_nonzero(published)),
    )


def wasted_effort_split(result):
    """(attacker stale, honest stale, honest child-of-stale) fractions of a finished run"""
    return split_waste(result.dag, result.config.rogue_ids).as_tuple()


def check_two_branches(dag, attacker_ids):
    """Raise StrategyError unless every height holds at most one honest and one cartel block"""
    owners = dag.owner_labels()
    published = dag.published_mask() & (dag.parent >= 0)
    heights = dag.height[published]
    is_attacker = np.array([label in attacker_ids for label in owners], dtype=bool)[published]

    for flags, name in ((is_attacker, 'cartel'), (~is_attacker, 'honest')):
        _, counts = np.unique(heights[flags], return_counts=True)
        if counts.size and counts.max() > 1:
            raise StrategyError(f'more than one {name} branch published at the same height')


def replicate_revenues(params, blocks, seed, replicates, fork_punishment=None):
    """Cartel revenue fractions of ``replicates`` independent runs"""
    return [
        relative_revenue(params, blocks, s, fork_punishment)
        for s in core_model.replicate_seeds(seed, replicates)
    ]
