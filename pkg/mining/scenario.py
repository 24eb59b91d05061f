"""Scenario documents and replicate batches

A scenario is a JSON document naming a simulation (either spelled out under
``sim`` or built from an ``attack`` block), how many replicates to run and where
to put the reports. Running it writes:

* ``summary.json``       pooled counters and replicate statistics
* ``replicates.csv``     one row per replicate
* ``seed_manifest.json`` the scenario plus every replicate seed, for exact reruns
* ``ledgers.csv``        every pool's shares and payouts, one block of rows per replicate
* ``events_r0.csv``      the event log of replicate 0 (only when asked for)
"""
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import pandas as pd

from mining import attack_selfish, attack_withholding, core_model, detection, pool_accounting
from mining.detection import DetectionThresholds
from mining.errors import ConfigError, ModelError
from mining.miners import Strategy
from mining.sim_engine import SimConfig, run

logger = logging.getLogger(__name__)

SUMMARY_JSON = 'summary.json'
REPLICATES_CSV = 'replicates.csv'
MANIFEST_JSON = 'seed_manifest.json'
LEDGERS_CSV = 'ledgers.csv'
EVENTS_CSV = 'events_r0.csv'

WITHHOLDING = 'withholding'
SELFISH = 'selfish'
POWER_TOLERANCE = 1e-9

REPLICATE_COLUMNS = [
    'replicate', 'seed', 'main_blocks', 'stale_blocks', 'withheld_blocks', 'burned_satoshis',
    'rogue_revenue_satoshis', 'revenue_satoshis', 'rogue_revenue_fraction', 'premium', 'pool_z',
]
LEDGER_COLUMNS = ['replicate', 'pool', 'miner', 'shares', 'payout']


def _attack_from_dict(data):
    if not data:
        return None
    family = data.get('family')
    try:
        if family == WITHHOLDING:
            return attack_withholding.WithholdParams(float(data['alpha']), float(data.get('beta', 0.5)))
        if family == SELFISH:
            return attack_selfish.SelfishParams(
                float(data['alpha']), float(data.get('gamma', attack_selfish.RANDOM_TIE_BREAK)))
    except KeyError as e:
        raise ConfigError(f'missing key {e.args[0]!r}', f'attack.{e.args[0]}') from None
    except ModelError as e:
        raise ConfigError(str(e), 'attack') from None
    raise ConfigError(f'unknown attack family {family!r}', 'attack.family')


def family_of(attack):
    if isinstance(attack, attack_withholding.WithholdParams):
        return WITHHOLDING
    if isinstance(attack, attack_selfish.SelfishParams):
        return SELFISH
    return None


def _rogue_power(sim, attack):
    if isinstance(attack, attack_selfish.SelfishParams):
        return sim.cartel_power
    return math.fsum(m.power_fraction for m in sim.miners if m.id in sim.rogue_ids)


@dataclass(frozen=True)
class Scenario:
    name: str
    sim: SimConfig
    attack: object = None
    detection: DetectionThresholds = field(default_factory=DetectionThresholds)
    replicates: int = 1
    output_dir: str | None = None
    workers: int | None = None

    def __post_init__(self):
        if not self.name:
            raise ConfigError('scenario name must not be empty', 'name')
        if self.replicates < 1:
            raise ConfigError(f'replicates must be >= 1, got {self.replicates}', 'replicates')
        if self.workers is not None and self.workers < 1:
            raise ConfigError(f'workers must be >= 1, got {self.workers}', 'workers')
        if self.attack is not None:
            if family_of(self.attack) is None:
                raise ConfigError('attack must be withholding or selfish parameters', 'attack')
            power = _rogue_power(self.sim, self.attack)
            if abs(power - self.attack.alpha) > POWER_TOLERANCE:
                raise ConfigError(f'attack alpha {self.attack.alpha} does not match the rogue power '
                                  f'{power:.9f} of the simulation', 'attack.alpha')

    @property
    def family(self):
        return family_of(self.attack)

    def to_dict(self):
        data = {
            'name': self.name,
            'replicates': self.replicates,
            'detection': self.detection.to_dict(),
            'sim': self.sim.to_dict(),
        }
        if self.attack is not None:
            data['attack'] = self.attack.to_dict()
        if self.output_dir is not None:
            data['output_dir'] = self.output_dir
        if self.workers is not None:
            data['workers'] = self.workers
        return data

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise ConfigError('scenario must be a JSON object')
        if 'name' not in data:
            raise ConfigError('missing key', 'name')
        attack = _attack_from_dict(data.get('attack'))

        if data.get('sim') is not None:
            try:
                sim = SimConfig.from_dict(data['sim'])
            except ConfigError as e:
                raise ConfigError(e.args[0], f'sim.{e.field}' if e.field else 'sim') from None
            except KeyError as e:
                raise ConfigError(f'missing key {e.args[0]!r}', f'sim.{e.args[0]}') from None
        elif attack is not None:
            sim = _build_sim(attack, data)
        else:
            raise ConfigError('scenario needs a sim block or an attack block', 'sim')

        return cls(
            name=str(data['name']),
            sim=sim,
            attack=attack,
            detection=DetectionThresholds.from_dict(data.get('detection') or {}),
            replicates=int(data.get('replicates', 1)),
            output_dir=data.get('output_dir'),
            workers=data.get('workers'),
        )

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + '\n'


def _build_sim(attack, data):
    """Canonical simulation for an attack block; options sit next to it in the document"""
    options = data.get('attack') or {}
    blocks = int(data.get('total_blocks', options.get('total_blocks', 100000)))
    seed = int(data.get('seed', 0))
    if isinstance(attack, attack_withholding.WithholdParams):
        return attack_withholding.build_withholding_config(
            attack, blocks, seed,
            pool_shares=options.get('pool_shares'),
            honest_per_pool=int(options.get('honest_per_pool', 1)),
            reward_per_block=float(data.get('reward_per_block', 25.0)),
            share_noise=bool(options.get('share_noise', False)),
        )
    return attack_selfish.build_selfish_config(
        attack, blocks, seed,
        fork_punishment=options.get('fork_punishment'),
        honest_miners=int(options.get('honest_miners', 1)),
        reward_per_block=float(data.get('reward_per_block', 25.0)),
    )


def parse_json(text, source='<scenario>'):
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f'{source}:{e.lineno}: invalid JSON: {e.msg}') from None


def locate(text, field_path):
    """1-based line of the key ``field_path`` (dotted, list indices allowed) in a JSON document"""
    lines = text.splitlines()
    line = 0
    skip = 0
    for part in (field_path or '').split('.'):
        if not part:
            continue
        if part.isdigit():
            skip = int(part)
            continue
        needle = f'"{part}"'
        for i in range(line, len(lines)):
            if needle in lines[i]:
                if skip == 0:
                    line = i
                    break
                skip -= 1
        skip = 0
    return line + 1


def load_scenario(path, validate=None):
    """Read, validate and build a Scenario; every ConfigError names ``path:line``

    ``validate`` is called with the parsed document before the domain constructors
    and must raise ConfigError with a dotted ``field``.
    """
    path = Path(path)
    text = path.read_text()
    data = parse_json(text, path)
    try:
        if validate is not None:
            validate(data)
        return Scenario.from_dict(data)
    except ConfigError as e:
        raise ConfigError(f'{path}:{locate(text, e.field)}: {e}') from None


def load_manifest(path):
    """Scenario and replicate seeds stored by a previous run"""
    text = Path(path).read_text()
    data = parse_json(text, path)
    try:
        scenario = Scenario.from_dict(data['scenario'])
        seeds = [int(s) for s in data['replicate_seeds']]
    except KeyError as e:
        raise ConfigError(f'{path}: manifest is missing {e.args[0]!r}') from None
    except ConfigError as e:
        raise ConfigError(f'{path}: {e}') from None
    if len(seeds) != scenario.replicates:
        raise ConfigError(f'{path}: {len(seeds)} seeds for {scenario.replicates} replicates')
    return scenario, seeds


def _premium(result, attack):
    if isinstance(attack, attack_selfish.SelfishParams):
        if attack.alpha == 0:
            return 0.0
        return attack_selfish.attacker_revenue_fraction(result) / attack.alpha - 1
    if not result.config.rogue_ids:
        return 0.0
    return attack_withholding.measure_premium(result).premium


def expected_premium(attack):
    """Closed-form value the replicate premiums estimate, when one exists"""
    if isinstance(attack, attack_withholding.WithholdParams):
        return attack_withholding.relative_gain(attack)
    if isinstance(attack, attack_selfish.SelfishParams) and 0 < attack.alpha < 0.5:
        return attack_selfish.closed_form_revenue(attack.alpha, attack.gamma) / attack.alpha - 1
    return None


def _target_pool(sim):
    for m in sim.miners:
        if m.strategy is Strategy.WITHHOLD:
            return m.target_pool
    return None


def _audit(sim, pool_id, ledger=None):
    return detection.consistency_audit(
        sim.pool_config(pool_id), sim.difficulty, sim.reward_per_block, sim.tx_fees,
        ledger=ledger, share_ratio=sim.share_difficulty_ratio)


def _pps_pools(sim):
    return sorted({m.pool for m in sim.miners if m.pool is not None and sim.pool_config(m.pool).is_pps})


def run_replicate(sim, attack, thresholds, index, seed, keep_events=False):
    """One replicate; returns its CSV row, its pool ledgers, the realized audit of
    every PPS pool and, when asked, its event log
    """
    result = run(replace(sim, seed=seed))
    rogue_ids = result.config.rogue_ids
    rogue_revenue = sum(v for m, v in result.revenue.items() if m in rogue_ids)
    total_revenue = sum(result.revenue.values())

    pool_z = math.nan
    pool = _target_pool(sim)
    if pool is not None and pool in result.ledgers:
        pool_z = detection.z_test(detection.pool_window(result, pool), thresholds).z_score

    row = {
        'replicate': index,
        'seed': seed,
        'main_blocks': result.main_blocks,
        'stale_blocks': result.stale_count,
        'withheld_blocks': result.withheld_count,
        'burned_satoshis': result.burned,
        'rogue_revenue_satoshis': rogue_revenue,
        'revenue_satoshis': total_revenue,
        'rogue_revenue_fraction': rogue_revenue / total_revenue if total_revenue else 0.0,
        'premium': _premium(result, attack),
        'pool_z': pool_z,
    }
    ledgers = [
        pool_accounting.ledger_frame(ledger, result.payouts[pool_id]).assign(replicate=index, pool=pool_id)
        for pool_id, ledger in sorted(result.ledgers.items())
    ]
    audits = {
        pool_id: _audit(sim, pool_id, ledger).to_dict()
        for pool_id, ledger in sorted(result.ledgers.items())
        if sim.pool_config(pool_id).is_pps and ledger.total_shares
    }
    events = result.dag.frame() if keep_events else None
    logger.debug('replicate %d done: premium=%.6f', index, row['premium'])
    return row, ledgers, audits, events


def _run_replicate_args(args):
    return run_replicate(*args)


def _clean(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, np.generic):
        return _clean(value.item())
    return value


def _stats(values):
    if len(values) == 0:
        return None
    est = attack_withholding.estimate(values)
    return {
        'mean': _clean(est.mean),
        'stderr': _clean(est.stderr),
        'ci_halfwidth': _clean(est.ci_halfwidth),
    }


def summarize_audits(scenario, audits):
    """Advertised-rate audit of every PPS pool plus the spread of its realized audits"""
    reports = {}
    for pool_id in _pps_pools(scenario.sim):
        realized = [a[pool_id] for a in audits if pool_id in a]
        entry = {'advertised': _audit(scenario.sim, pool_id).to_dict(), 'realized': None}
        if realized:
            ratio = _stats(np.array([r['ratio'] for r in realized]))
            ratio['flagged_replicates'] = sum(r['flagged'] for r in realized)
            ratio['replicates'] = len(realized)
            entry['realized'] = ratio
        reports[pool_id] = entry
    return reports


def summarize(scenario, frame, audits=()):
    """Summary document of a finished batch; pooled figures come from exact integer totals"""
    totals = {
        column: int(frame[column].sum())
        for column in ('main_blocks', 'stale_blocks', 'withheld_blocks', 'burned_satoshis',
                       'rogue_revenue_satoshis', 'revenue_satoshis')
    }
    rogue_power = _rogue_power(scenario.sim, scenario.attack)
    pooled_fraction = (totals['rogue_revenue_satoshis'] / totals['revenue_satoshis']
                       if totals['revenue_satoshis'] else 0.0)
    if scenario.family == SELFISH:
        pooled_premium = pooled_fraction / rogue_power - 1 if rogue_power else 0.0
    elif 0 < rogue_power < 1 and pooled_fraction < 1:
        pooled_premium = (pooled_fraction / rogue_power) / ((1 - pooled_fraction) / (1 - rogue_power)) - 1
    else:
        pooled_premium = 0.0

    premium = _stats(frame['premium'].to_numpy(dtype=float))
    premium['pooled'] = pooled_premium
    premium['expected'] = expected_premium(scenario.attack)

    fraction = _stats(frame['rogue_revenue_fraction'].to_numpy(dtype=float))
    fraction['pooled'] = pooled_fraction

    z = frame['pool_z'].dropna().to_numpy(dtype=float)
    pool_z = None
    if len(z):
        pool_z = _stats(z)
        pool_z['verdict'] = scenario.detection.verdict(float(z.mean())).value

    return {
        'name': scenario.name,
        'family': scenario.family,
        'attack': scenario.attack.to_dict() if scenario.attack else None,
        'master_seed': scenario.sim.seed,
        'replicates': scenario.replicates,
        'total_blocks': scenario.sim.total_blocks,
        'rogue_power': rogue_power,
        'totals': totals,
        'rogue_revenue_fraction': fraction,
        'premium': premium,
        'pool_z': pool_z,
        'audits': summarize_audits(scenario, audits),
    }


@dataclass(frozen=True)
class ScenarioReport:
    summary: dict
    replicates: pd.DataFrame
    ledgers: pd.DataFrame
    output_dir: Path
    files: tuple


def run_scenario(scenario, output_dir=None, workers=None, events=False, seeds=None):
    """Run every replicate and write the report files

    Results are collected in replicate order, so they do not depend on ``workers``.
    ``seeds`` replays a manifest instead of deriving seeds from the master seed.
    """
    if seeds is None:
        seeds = core_model.replicate_seeds(scenario.sim.seed, scenario.replicates)
    if len(seeds) != scenario.replicates:
        raise ConfigError(f'{len(seeds)} seeds for {scenario.replicates} replicates', 'replicates')
    output_dir = Path(output_dir or scenario.output_dir or Path('output') / scenario.name)
    workers = workers or scenario.workers or os.cpu_count() or 1

    jobs = [(scenario.sim, scenario.attack, scenario.detection, i, seed, events and i == 0)
            for i, seed in enumerate(seeds)]
    logger.info('scenario %s: %d replicates of %d blocks on %d workers',
                scenario.name, scenario.replicates, scenario.sim.total_blocks, workers)
    if workers == 1 or len(jobs) == 1:
        outcomes = [_run_replicate_args(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            outcomes = list(pool.map(_run_replicate_args, jobs))

    frame = pd.DataFrame([row for row, *_ in outcomes], columns=REPLICATE_COLUMNS)
    ledgers = [ledger for _, pool_ledgers, _, _ in outcomes for ledger in pool_ledgers]
    if ledgers:
        ledgers = pd.concat(ledgers, ignore_index=True)[LEDGER_COLUMNS]
    else:
        ledgers = pd.DataFrame(columns=LEDGER_COLUMNS)
    summary = summarize(scenario, frame, [audit for _, _, audit, _ in outcomes])

    output_dir.mkdir(parents=True, exist_ok=True)
    files = [output_dir / SUMMARY_JSON, output_dir / REPLICATES_CSV, output_dir / MANIFEST_JSON,
             output_dir / LEDGERS_CSV]
    with open(files[0], 'w') as f:
        json.dump(summary, f, indent=2, sort_keys=True)
        f.write('\n')
    frame.to_csv(files[1], index=False, float_format='%.12g')
    manifest = {
        'scenario': scenario.to_dict(),
        'replicate_seeds': [int(s) for s in seeds],
        'numpy_version': np.__version__,
    }
    with open(files[2], 'w') as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write('\n')
    ledgers.to_csv(files[3], index=False, float_format='%.8f')
    if events:
        files.append(output_dir / EVENTS_CSV)
        outcomes[0][3].to_csv(files[-1], index=False)

    logger.info('scenario %s: wrote %s', scenario.name, ', '.join(p.name for p in files))
    return ScenarioReport(summary=summary, replicates=frame, ledgers=ledgers, output_dir=output_dir,
                          files=tuple(files))
