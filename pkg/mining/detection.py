"""Detecting block withholding from the numbers a pool can actually see

A pool only knows how many shares a member submitted and how many blocks came out
of them. Both the member-level and the pool-level test compare the observed block
count with the count expected from shares; the deficit is measured in units of the
Poisson standard deviation sqrt(K).
"""
import json
import logging
import math
from dataclasses import asdict, dataclass
from enum import Enum
from pathlib import Path

import numpy as np
import pandas as pd
from scipy import stats

from mining.attack_withholding import remap_identities
from mining.errors import DetectionError, ModelError
from mining.pool_accounting import implied_pps_rate, pps_rate_check
from mining.sim_engine import DEFAULT_SHARE_RATIO, BlockDag

logger = logging.getLogger(__name__)

SUSPICIOUS_Z = 2.0
DETECTED_Z = 3.0
EXACT_POISSON_BELOW = 30
DEFAULT_WINDOW = 10000
WINDOW_COLUMNS = ['blocks', 'wasted_pct', 'child_of_wasted_pct']

DATA_DIR = Path(__file__).resolve().parent / 'data'
HISTORICAL_WASTE_CSV = DATA_DIR / 'historical_wasted_blocks.csv'


class Verdict(str, Enum):
    UNDETECTABLE = 'undetectable'
    SUSPICIOUS = 'suspicious'
    DETECTED = 'detected'


@dataclass(frozen=True)
class DetectionThresholds:
    suspicious: float = SUSPICIOUS_Z
    detected: float = DETECTED_Z

    def __post_init__(self):
        if not 0 < self.suspicious <= self.detected:
            raise ModelError('thresholds must satisfy 0 < suspicious <= detected')

    def verdict(self, z):
        if z >= self.detected:
            return Verdict.DETECTED
        if z >= self.suspicious:
            return Verdict.SUSPICIOUS
        return Verdict.UNDETECTABLE

    def to_dict(self):
        return {'suspicious_z': self.suspicious, 'detected_z': self.detected}

    @classmethod
    def from_dict(cls, data):
        return cls(
            suspicious=float(data.get('suspicious_z', SUSPICIOUS_Z)),
            detected=float(data.get('detected_z', DETECTED_Z)),
        )


@dataclass(frozen=True)
class ObservationWindow:
    """Expected vs observed blocks for one miner, identity or pool"""
    expected_blocks: float
    observed_blocks: int
    label: str = ''

    def __post_init__(self):
        if not self.expected_blocks >= 0 or math.isinf(self.expected_blocks):
            raise ModelError(f'expected blocks must be finite and >= 0, got {self.expected_blocks}')
        if self.observed_blocks < 0:
            raise ModelError(f'observed blocks must be >= 0, got {self.observed_blocks}')

    @property
    def deficit_fraction(self):
        if self.expected_blocks == 0:
            return 0.0
        return 1 - self.observed_blocks / self.expected_blocks


@dataclass(frozen=True)
class DetectionReport:
    z_score: float
    p_value: float
    verdict: Verdict
    min_detectable_withhold_fraction: float
    label: str = ''
    expected_blocks: float = 0.0
    observed_blocks: int = 0

    def to_dict(self):
        data = asdict(self)
        data['verdict'] = self.verdict.value
        return data


def z_test(window, thresholds=None):
    """One-sided deficit test; surpluses are luck and never raise the verdict

    The p-value is the exact Poisson tail below 30 expected blocks and the Gaussian
    tail above.
    """
    thresholds = thresholds or DetectionThresholds()
    K = float(window.expected_blocks)
    observed = int(window.observed_blocks)
    if K == 0:
        if observed > 0:
            raise DetectionError(f'{window.label or "window"}: {observed} blocks observed where none were expected')
        return DetectionReport(0.0, 1.0, Verdict.UNDETECTABLE, 1.0, window.label, K, observed)

    z = (K - observed) / math.sqrt(K)
    if K < EXACT_POISSON_BELOW:
        p_value = float(stats.poisson.cdf(observed, K))
    else:
        p_value = float(stats.norm.sf(z))
    report = DetectionReport(
        z_score=z,
        p_value=p_value,
        verdict=thresholds.verdict(z),
        min_detectable_withhold_fraction=min(1.0, min_detectable_fraction(K, thresholds.detected)),
        label=window.label,
        expected_blocks=K,
        observed_blocks=observed,
    )
    logger.debug('z-test %s: K=%.3f observed=%d z=%.3f %s', window.label, K, observed, z, report.verdict.value)
    return report


def min_blocks_to_detect(withhold_fraction, z_required=DETECTED_Z):
    """Expected block count at which a deficit of ``withhold_fraction`` reaches ``z_required``"""
    if not 0 < withhold_fraction <= 1:
        raise ModelError(f'withhold fraction must lie in (0, 1], got {withhold_fraction}')
    if z_required <= 0:
        raise ModelError(f'required z must be positive, got {z_required}')
    return (z_required / withhold_fraction) ** 2


def min_detectable_fraction(expected_blocks, z_required=DETECTED_Z):
    """Smallest withheld fraction visible at ``z_required`` after K expected blocks: z / sqrt(K)"""
    if expected_blocks <= 0:
        raise ModelError(f'expected blocks must be positive, got {expected_blocks}')
    return z_required / math.sqrt(expected_blocks)


def event_rate_gain(multiplier):
    """Factor by which the detectable fraction shrinks when events are ``multiplier`` times more frequent"""
    if multiplier <= 0:
        raise ModelError(f'multiplier must be positive, got {multiplier}')
    return math.sqrt(multiplier)


def detection_power(withhold_fraction, expected_blocks, z_required=DETECTED_Z):
    """Probability that a miner withholding ``withhold_fraction`` of its blocks is flagged"""
    if not 0 <= withhold_fraction <= 1:
        raise ModelError(f'withhold fraction must lie in [0, 1], got {withhold_fraction}')
    if expected_blocks <= 0:
        raise ModelError(f'expected blocks must be positive, got {expected_blocks}')
    cutoff = math.floor(expected_blocks - z_required * math.sqrt(expected_blocks))
    if cutoff < 0:
        return 0.0
    return float(stats.poisson.cdf(cutoff, expected_blocks * (1 - withhold_fraction)))


def simulate_detection_rate(withhold_fraction, expected_blocks, z_required, replicates, rng):
    """Monte Carlo counterpart of ``detection_power``"""
    if replicates < 1:
        raise ModelError('replicates must be >= 1')
    observed = rng.poisson(expected_blocks * (1 - withhold_fraction), size=replicates)
    z = (expected_blocks - observed) / math.sqrt(expected_blocks)
    return float(np.mean(z >= z_required))


def observation_windows(result):
    """One window per miner: expected from submitted shares (or power when solo), observed from published blocks"""
    ratio = result.config.share_difficulty_ratio
    shares = {}
    for (_, miner), count in result.share_ledger.items():
        shares[miner] = shares.get(miner, 0) + count
    published = result.blocks_published_by()

    windows = []
    for m in result.config.miners:
        if m.id in shares:
            expected = shares[m.id] / ratio
        else:
            expected = m.power_fraction * result.config.total_blocks
        windows.append(ObservationWindow(expected, published.get(m.id, 0), m.id))
    return windows


def pool_window(result, pool_id):
    """Aggregate window of one pool: everything its members submitted vs everything they published"""
    ledger = result.ledgers.get(pool_id)
    if ledger is None:
        raise DetectionError(f'no ledger for pool {pool_id!r}')
    published = result.blocks_published_by()
    observed = sum(published.get(miner, 0) for miner in ledger.shares)
    return ObservationWindow(ledger.total_shares / result.config.share_difficulty_ratio, observed, pool_id)


@dataclass(frozen=True)
class ChurnReport:
    """Per-identity z-scores of churning rogue miners vs honest miners, plus the pool view"""
    ks_statistic: float
    ks_pvalue: float
    rogue_identities: int
    honest_identities: int
    aggregate: DetectionReport

    def to_dict(self):
        data = asdict(self)
        data['aggregate'] = self.aggregate.to_dict()
        return data


def _z_scores(windows):
    expected = np.array([w.expected_blocks for w in windows], dtype=float)
    observed = np.array([w.observed_blocks for w in windows], dtype=float)
    keep = expected > 0
    return (expected[keep] - observed[keep]) / np.sqrt(expected[keep])


def _split(windows, identity_blocks, rng):
    identities = []
    for w in windows:
        churn = max(1, int(round(w.expected_blocks / identity_blocks)))
        identities.extend(remap_identities([w], churn, rng))
    return identities


def identity_churn_test(rogue_windows, honest_windows, identity_blocks, rng, thresholds=None):
    """Compare per-identity z-scores when every miner hides behind identities of ``identity_blocks`` expected blocks

    The per-identity test loses its power as identities shrink; the aggregate window
    over all of them does not.
    """
    if identity_blocks <= 0:
        raise ModelError(f'identity size must be positive, got {identity_blocks}')
    if not rogue_windows or not honest_windows:
        raise DetectionError('identity churn test needs both rogue and honest windows')
    rogue_z = _z_scores(_split(rogue_windows, identity_blocks, rng))
    honest_z = _z_scores(_split(honest_windows, identity_blocks, rng))
    ks = stats.ks_2samp(rogue_z, honest_z)

    everything = list(rogue_windows) + list(honest_windows)
    aggregate = z_test(ObservationWindow(
        expected_blocks=sum(w.expected_blocks for w in everything),
        observed_blocks=sum(w.observed_blocks for w in everything),
        label='aggregate',
    ), thresholds)
    return ChurnReport(
        ks_statistic=float(ks.statistic),
        ks_pvalue=float(ks.pvalue),
        rogue_identities=len(rogue_z),
        honest_identities=len(honest_z),
        aggregate=aggregate,
    )


def validate_dag(dag):
    """Raise DetectionError unless ``dag`` has one genesis, valid parent links and one main chain"""
    n = len(dag)
    if n == 0:
        raise DetectionError('empty block DAG')
    roots = np.flatnonzero(dag.parent < 0)
    if len(roots) != 1:
        raise DetectionError(f'expected exactly one genesis block, found {len(roots)}')
    children = np.flatnonzero(dag.parent >= 0)
    dangling = children[dag.parent[children] >= n]
    if dangling.size:
        raise DetectionError(f'block {int(dangling[0])} references an unknown parent')
    bad_height = children[dag.height[dag.parent[children]] != dag.height[children] - 1]
    if bad_height.size:
        raise DetectionError(f'block {int(bad_height[0])} is not one above its parent')

    main = np.flatnonzero(dag.main)
    if not dag.main[roots[0]]:
        raise DetectionError('genesis block must be on the main chain')
    main_children = main[dag.parent[main] >= 0]
    if not np.all(dag.main[dag.parent[main_children]]):
        raise DetectionError('main chain is broken: a main block has a stale parent')
    if len(np.unique(dag.height[main])) != len(main):
        raise DetectionError('main chain forks: two main blocks at the same height')


def _counted(dag):
    # withheld blocks were never published, genesis was never mined
    return dag.published_mask() & ~dag.withheld & (dag.parent >= 0)


def analyze_dag(dag, window=DEFAULT_WINDOW):
    """Per height window: share of mined blocks that went stale, and of stale blocks on stale parents

    Returns a DataFrame with ``WINDOW_COLUMNS`` (percentages) and the raw counts.
    """
    if window < 1:
        raise DetectionError(f'window must be >= 1, got {window}')
    validate_dag(dag)

    counted = _counted(dag)
    stale = counted & ~dag.main
    parent_stale = np.zeros(len(dag), dtype=bool)
    parent_stale[counted] = ~dag.main[dag.parent[counted]]

    frame = pd.DataFrame({
        'start': (dag.height[counted] // window) * window,
        'stale': stale[counted],
        'child_of_stale': (stale & parent_stale)[counted],
    })
    grouped = frame.groupby('start', sort=True).agg(
        mined=('stale', 'size'),
        stale=('stale', 'sum'),
        child_of_stale=('child_of_stale', 'sum'),
    ).reset_index()

    grouped['blocks'] = [f'{start}-{start + window - 1}' for start in grouped['start']]
    grouped['wasted_pct'] = 100.0 * grouped['stale'] / grouped['mined']
    grouped['child_of_wasted_pct'] = 100.0 * grouped['child_of_stale'] / grouped['mined']
    return grouped[WINDOW_COLUMNS + ['mined', 'stale', 'child_of_stale']]


def dag_totals(dag):
    """Whole-DAG (mined, stale, child_of_stale) counts"""
    windows = analyze_dag(dag, window=int(dag.height.max()) + 1)
    if windows.empty:
        return 0, 0, 0
    row = windows.iloc[0]
    return int(row['mined']), int(row['stale']), int(row['child_of_stale'])


def write_window_csv(frame, path):
    frame[WINDOW_COLUMNS].to_csv(path, index=False, float_format='%.2f')


def read_event_log(path):
    """Load an event-log or minimal block-header CSV into a BlockDag"""
    try:
        return BlockDag.read_csv(path)
    except (ModelError, ValueError, KeyError) as e:
        raise DetectionError(f'{path}: {e}') from e


def load_historical_waste():
    """Historical wasted-block percentages of the bitcoin main chain, for comparison only"""
    return pd.read_csv(HISTORICAL_WASTE_CSV)


@dataclass(frozen=True)
class AuditReport:
    """PPS payout per block compared with what an honest pool should pay"""
    pool_id: str
    implied_payout: float
    expected_payout: float
    gap: float
    ratio: float
    flagged: bool
    source: str = 'advertised'

    def to_dict(self):
        return asdict(self)


def consistency_audit(pool, difficulty, reward_per_block=25.0, tx_fees=0.0, tolerance=0.01,
                      ledger=None, share_ratio=DEFAULT_SHARE_RATIO):
    """Check a PPS pool's payout per block against the block reward net of fees

    Without a ledger the advertised rate is audited; with one, the rate the pool
    could afford from its realized revenue. A ratio below ``1 - tolerance`` is flagged.
    """
    if not pool.is_pps:
        raise DetectionError(f'pool {pool.id!r} is not a pay-per-share pool')
    d = getattr(difficulty, 'value', difficulty)
    expected = (reward_per_block + tx_fees) * (1 - pool.fee_fraction)
    if expected <= 0:
        raise DetectionError('expected payout per block must be positive')

    if ledger is not None:
        rate = implied_pps_rate(ledger, d, share_ratio, pool.fee_fraction)
        source = 'realized'
    elif pool.reward_scheme.rate is not None:
        rate = pool.reward_scheme.rate
        source = 'advertised'
    else:
        rate = expected / d
        source = 'fair'

    implied = pps_rate_check(d, rate)
    ratio = implied / expected
    report = AuditReport(
        pool_id=pool.id,
        implied_payout=implied,
        expected_payout=expected,
        gap=implied - expected,
        ratio=ratio,
        flagged=ratio < 1 - tolerance,
        source=source,
    )
    logger.info('audit %s: %.4f BTC/block vs %.4f expected (%s)', pool.id, implied, expected,
                'flagged' if report.flagged else 'consistent')
    return report


def write_report_json(report, path):
    with open(path, 'w') as f:
        json.dump(report.to_dict(), f, indent=2, sort_keys=True)
        f.write('\n')
