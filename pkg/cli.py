"""Command line interface

    python cli.py run scenarios/withholding_baseline.json --replicates 8
    python cli.py formulas withhold-gain 0.2 0.5

The same commands are registered on ``app.cli``, so ``flask --app app <command>``
works too (except ``run``, which Flask keeps for its development server).

Exit codes: 0 success, 1 configuration error, 2 runtime error.
"""
import json
import os
import sys
from dataclasses import replace
from functools import wraps

import click
import numpy as np
from flask import current_app
from flask.cli import FlaskGroup, with_appcontext

from mining import attack_selfish, attack_withholding, core_model, detection, formulas
from mining.errors import ConfigError, ModelError, PoolsimError
from mining.scenario import load_manifest, load_scenario, run_scenario
from mining.sim_engine import run

EXIT_CONFIG = 1
EXIT_RUNTIME = 2


def handle_errors(f):
    """Decorator mapping domain errors to exit codes"""
    @wraps(f)
    def decorated_function(*args, **kwargs):
        try:
            return f(*args, **kwargs)
        except ConfigError as e:
            click.echo(f'error: {e}', err=True)
            sys.exit(EXIT_CONFIG)
        except (PoolsimError, OSError) as e:
            click.echo(f'error: {e}', err=True)
            sys.exit(EXIT_RUNTIME)
    return decorated_function


def _thresholds():
    return detection.DetectionThresholds(
        suspicious=current_app.config['SUSPICIOUS_Z'],
        detected=current_app.config['DETECTED_Z'],
    )


def _estimate_record(values, expected=None):
    est = attack_withholding.estimate(values)
    spread = len(values) > 1
    return {
        'mean': est.mean,
        'stderr': est.stderr if spread else None,
        'ci_halfwidth': est.ci_halfwidth if spread else None,
        'replicates': len(values),
        'expected': expected,
    }


def _echo_record(record, output=None):
    """Print one JSON record, optionally saving it too"""
    text = json.dumps(record, indent=2, sort_keys=True)
    if output:
        with open(output, 'w') as f:
            f.write(text + '\n')
    click.echo(text)


@click.command('run')
@click.argument('scenario_file', required=False, type=click.Path(dir_okay=False))
@click.option('--replicates', type=click.IntRange(min=1), help='Override the replicate count.')
@click.option('--seed', type=click.IntRange(min=0, max=2 ** 64 - 1), help='Override the master seed.')
@click.option('--output-dir', type=click.Path(file_okay=False), help='Where to write the reports.')
@click.option('--workers', type=click.IntRange(min=1), help='Parallel replicate processes.')
@click.option('--events', is_flag=True, help='Also write the event log of replicate 0.')
@click.option('--manifest', type=click.Path(dir_okay=False, exists=True), help='Replay a seed manifest.')
@with_appcontext
@handle_errors
def run_command(scenario_file, replicates, seed, output_dir, workers, events, manifest):
    """Run a scenario file (or replay a seed manifest) and write its reports"""
    from forms import validate_scenario
    from models import record_run

    seeds = None
    if manifest:
        if scenario_file or replicates or seed is not None:
            raise ConfigError('--manifest replays a run exactly; drop the scenario file and overrides')
        scenario, seeds = load_manifest(manifest)
    elif scenario_file:
        scenario = load_scenario(scenario_file, validate=validate_scenario)
    else:
        raise ConfigError('a scenario file or --manifest is required')

    if replicates:
        scenario = replace(scenario, replicates=replicates)
    if seed is not None:
        scenario = replace(scenario, sim=replace(scenario.sim, seed=seed))

    base = os.getenv('POOLSIM_OUTPUT_DIR') or current_app.config['OUTPUT_DIR']
    output_dir = output_dir or scenario.output_dir or os.path.join(base, scenario.name)
    workers = workers or scenario.workers or current_app.config['WORKERS']

    report = run_scenario(scenario, output_dir=output_dir, workers=workers, events=events, seeds=seeds)
    record_run(scenario, output_dir, report=report)

    summary = report.summary
    premium = summary['premium']
    line = f'premium: {premium["mean"]:.6f}'
    if premium['ci_halfwidth'] is not None:
        line += f' +/- {premium["ci_halfwidth"]:.6f}'
    if premium['expected'] is not None:
        line += f'  expected {premium["expected"]:.6f}'
    click.echo(f'{scenario.name}: {scenario.replicates} replicates of {scenario.sim.total_blocks} blocks')
    click.echo(line)
    click.echo(f'rogue revenue fraction: {summary["rogue_revenue_fraction"]["pooled"]:.6f}')
    if summary['pool_z'] is not None:
        click.echo(f'pool z: {summary["pool_z"]["mean"]:.3f} ({summary["pool_z"]["verdict"]})')
    for pool_id, audit in summary['audits'].items():
        realized = audit['realized']
        text = f'audit {pool_id}: advertised ratio {audit["advertised"]["ratio"]:.4f}'
        if realized is not None:
            text += (f', realized ratio {realized["mean"]:.4f} '
                     f'({realized["flagged_replicates"]}/{realized["replicates"]} replicates flagged)')
        click.echo(text)
    click.echo(f'reports: {report.output_dir}')


@click.command('formulas')
@click.argument('name', required=False)
@click.argument('args', nargs=-1)
@handle_errors
def formulas_command(name, args):
    """Evaluate a named formula, or list them all"""
    if not name:
        for _, f in sorted(formulas.FORMULAS.items()):
            click.echo(f'{f.name:<18} {" ".join(f.params):<28} {f.expression}')
        return
    formula = formulas.get_formula(name)
    value = formula.evaluate(*args)
    click.echo(f'{value:.10g}')
    click.echo(f'  {formula.name}({", ".join(formula.params)}) = {formula.expression}: {formula.summary}')
    click.echo(f'  source: {formula.source}')


@click.command('withhold-gain')
@click.option('--alpha', type=float, required=True, help='Rogue share of network power.')
@click.option('--beta', type=float, help='Infiltrating share of rogue power; omit for a sweep.')
@click.option('--step', type=float, default=0.05, show_default=True, help='Sweep step over beta.')
@handle_errors
def withhold_gain_command(alpha, beta, step):
    """Closed-form withholding gains"""
    try:
        if beta is not None:
            p = attack_withholding.WithholdParams(alpha, beta)
            _echo_record({
                'alpha': alpha,
                'beta': beta,
                'relative_gain': attack_withholding.relative_gain(p),
                'private_premium': attack_withholding.private_branch_premium(p),
                'dilution_factor': attack_withholding.dilution_factor(alpha, beta),
                'honest_premium': attack_withholding.honest_premium(p),
            })
            return
        betas = np.round(np.arange(0, 1 + step / 2, step), 10)
        sweep = [
            {'beta': float(b), 'gain': attack_withholding.relative_gain(attack_withholding.WithholdParams(alpha, b))}
            for b in betas
        ]
        _echo_record({'alpha': alpha, 'optimal_beta': attack_withholding.optimal_beta(alpha), 'sweep': sweep})
    except ModelError as e:
        raise ConfigError(str(e)) from None


@click.command('withhold-sim')
@click.option('--alpha', type=float, required=True, help='Rogue share of network power.')
@click.option('--beta', type=float, default=0.5, show_default=True, help='Infiltrating share of rogue power.')
@click.option('--blocks', type=click.IntRange(min=1), default=100000, show_default=True)
@click.option('--seed', type=click.IntRange(min=0), default=0, show_default=True)
@click.option('--replicates', type=click.IntRange(min=1), default=8, show_default=True)
@click.option('--pools', type=click.IntRange(min=1), default=1, show_default=True,
              help='Equal-sized public pools the infiltration is spread over.')
@click.option('--share-noise', is_flag=True, help='Poisson noise on share counts.')
@click.option('--events', type=click.Path(dir_okay=False), help='Write the event log of replicate 0.')
@with_appcontext
@handle_errors
def withhold_sim_command(alpha, beta, blocks, seed, replicates, pools, share_noise, events):
    """Monte Carlo withholding gain against its closed form"""
    try:
        params = attack_withholding.WithholdParams(alpha, beta)
    except ModelError as e:
        raise ConfigError(str(e)) from None
    pool_shares = {f'pool-{k}': 1.0 for k in range(pools)}
    thresholds = _thresholds()

    premiums, honest, zs = [], [], []
    for i, s in enumerate(core_model.replicate_seeds(seed, replicates)):
        config = attack_withholding.build_withholding_config(
            params, blocks, s, pool_shares=pool_shares, share_noise=share_noise)
        result = run(config)
        outcome = attack_withholding.measure_premium(result)
        premiums.append(outcome.premium)
        honest.append(outcome.honest_premium)
        if params.infiltrating_power > 0:
            zs.append(detection.z_test(detection.pool_window(result, 'pool-0'), thresholds).z_score)
        if i == 0 and events:
            result.dag.to_csv(events)

    pool_z = None
    if zs:
        mean_z = float(np.mean(zs))
        pool_z = {'pool': 'pool-0', 'mean': mean_z, 'verdict': thresholds.verdict(mean_z).value}
    _echo_record({
        'alpha': alpha,
        'beta': beta,
        'blocks': blocks,
        'seed': seed,
        'pools': pools,
        'rogue_premium': _estimate_record(premiums, attack_withholding.relative_gain(params)),
        'honest_premium': _estimate_record(honest, attack_withholding.honest_premium(params)),
        'pool_z': pool_z,
    })


@click.command('selfish-sim')
@click.option('--alpha', type=float, required=True, help='Cartel share of network power.')
@click.option('--gamma', type=float, default=attack_selfish.RANDOM_TIE_BREAK, show_default=True)
@click.option('--blocks', type=click.IntRange(min=1), default=100000, show_default=True)
@click.option('--seed', type=click.IntRange(min=0), default=0, show_default=True)
@click.option('--replicates', type=click.IntRange(min=1), default=4, show_default=True)
@click.option('--fork-punishment', type=click.FloatRange(0, 1), help='Reward cut of contested blocks.')
@click.option('--events', type=click.Path(dir_okay=False), help='Write the event log of replicate 0.')
@handle_errors
def selfish_sim_command(alpha, gamma, blocks, seed, replicates, fork_punishment, events):
    """Monte Carlo selfish-mining revenue"""
    try:
        params = attack_selfish.SelfishParams(alpha, gamma)
    except ModelError as e:
        raise ConfigError(str(e)) from None

    fractions = []
    waste = None
    for i, s in enumerate(core_model.replicate_seeds(seed, replicates)):
        result = run(attack_selfish.build_selfish_config(params, blocks, s, fork_punishment))
        fractions.append(attack_selfish.attacker_revenue_fraction(result))
        if i == 0:
            waste = attack_selfish.wasted_effort_split(result)
            if events:
                result.dag.to_csv(events)

    expected = None
    if fork_punishment is None and alpha < 0.5:
        expected = attack_selfish.closed_form_revenue(alpha, gamma)
    threshold = attack_selfish.profitability_threshold(gamma)
    mean = float(np.mean(fractions))
    _echo_record({
        'alpha': alpha,
        'gamma': gamma,
        'blocks': blocks,
        'seed': seed,
        'fork_punishment': fork_punishment,
        'revenue_fraction': _estimate_record(fractions, expected),
        'premium': mean / alpha - 1 if alpha else 0.0,
        'stale': dict(zip(('attacker', 'honest', 'honest_child_of_stale'), waste)),
        'threshold': threshold,
        'verdict': 'profitable' if alpha > threshold else 'unprofitable',
        'beats_fair_share': mean > alpha,
    })


@click.command('selfish-threshold')
@click.option('--ns', '--gamma', 'ns', type=click.FloatRange(0, 1), default=attack_selfish.RANDOM_TIE_BREAK,
              show_default=True, help='Share of honest power mining the cartel branch in a tie.')
@click.option('--fork-punishment', 'rhos', type=click.FloatRange(0, 1), multiple=True,
              help='Fork punishment levels to search (repeatable); implies --simulate.')
@click.option('--simulate', is_flag=True, help='Also search the simulated break-even cartel size.')
@click.option('--blocks', type=click.IntRange(min=1), default=100000, show_default=True)
@click.option('--seed', type=click.IntRange(min=0), default=0, show_default=True)
@click.option('--step', type=click.FloatRange(0.001, 0.5), default=0.01, show_default=True)
@handle_errors
def selfish_threshold_command(ns, rhos, simulate, blocks, seed, step):
    """Analytic and simulated profitability threshold of selfish mining"""
    record = {'ns': ns, 'threshold': attack_selfish.profitability_threshold(ns)}
    if rhos or simulate:
        alphas = [round(a, 10) for a in np.arange(step, 0.5 - step / 2, step)]
        record.update(blocks=blocks, seed=seed, step=step, break_even=[
            {'fork_punishment': 0.0 if rho is None else rho,
             'break_even_alpha': attack_selfish.break_even_alpha(ns, alphas, blocks, seed, fork_punishment=rho)}
            for rho in rhos or (None,)
        ])
    _echo_record(record)


@click.command('detect')
@click.option('--expected', type=float, help='Expected blocks K (from submitted shares).')
@click.option('--observed', type=click.IntRange(min=0), help='Blocks actually found.')
@click.option('--label', default='', help='Miner or pool id.')
@click.option('--withhold', type=float, help='Withheld fraction to run a power analysis for.')
@click.option('--output', type=click.Path(dir_okay=False), help='Write the report as JSON.')
@with_appcontext
@handle_errors
def detect_command(expected, observed, label, withhold, output):
    """z-test of expected vs observed blocks, or a power analysis with --withhold"""
    thresholds = _thresholds()
    try:
        if withhold is not None:
            z = thresholds.detected
            report = {'withhold_fraction': withhold, 'z_required': z,
                      'min_blocks_to_detect': detection.min_blocks_to_detect(withhold, z)}
            if expected is not None:
                report['expected_blocks'] = expected
                report['detection_power'] = detection.detection_power(withhold, expected, z)
                report['min_detectable_fraction'] = detection.min_detectable_fraction(expected, z)
        elif expected is not None and observed is not None:
            report = detection.z_test(detection.ObservationWindow(expected, observed, label), thresholds).to_dict()
        else:
            raise ConfigError('give --expected and --observed, or --withhold')
    except ModelError as e:
        raise ConfigError(str(e)) from None

    _echo_record(report, output)


@click.command('analyze-dag')
@click.argument('events_file', type=click.Path(dir_okay=False, exists=True))
@click.option('--window', type=click.IntRange(min=1), help='Heights per window.')
@click.option('--output', type=click.Path(dir_okay=False), help='Write the window table as CSV.')
@with_appcontext
@handle_errors
def analyze_dag_command(events_file, window, output):
    """Wasted and child-of-wasted block percentages per height window"""
    dag = detection.read_event_log(events_file)
    frame = detection.analyze_dag(dag, window or current_app.config['DAG_WINDOW'])
    if output:
        detection.write_window_csv(frame, output)
    click.echo(frame[detection.WINDOW_COLUMNS].to_csv(index=False, float_format='%.2f'), nl=False)
    mined, stale, child = detection.dag_totals(dag)
    click.echo(f'# total: {mined} mined, {stale} stale, {child} stale on a stale parent')


COMMANDS = (
    run_command,
    formulas_command,
    withhold_sim_command,
    withhold_gain_command,
    selfish_sim_command,
    selfish_threshold_command,
    detect_command,
    analyze_dag_command,
)


def register_commands(app):
    """Attach every command to ``app.cli``"""
    for command in COMMANDS:
        app.cli.add_command(command)


def _create_app():
    from app import create_app
    return create_app()


cli = FlaskGroup(create_app=_create_app, add_default_commands=False,
                 help='poolsim: mining-pool strategy simulator')

if __name__ == '__main__':
    cli()
