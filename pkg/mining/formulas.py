"""Named closed-form results, evaluated from the command line and the HTTP API"""
from dataclasses import dataclass

from mining import attack_selfish, attack_withholding, core_model, detection, pool_accounting
from mining.errors import ConfigError, ModelError


@dataclass(frozen=True)
class Formula:
    name: str
    params: tuple
    func: object
    expression: str
    summary: str
    source: str

    def evaluate(self, *args):
        if len(args) != len(self.params):
            raise ConfigError(f'{self.name} takes {len(self.params)} argument(s) '
                              f'({", ".join(self.params)}), got {len(args)}', 'args')
        try:
            values = [float(a) for a in args]
        except (TypeError, ValueError):
            raise ConfigError(f'{self.name}: arguments must be numbers, got {list(args)}', 'args') from None
        try:
            return float(self.func(*values))
        except ModelError as e:
            raise ConfigError(f'{self.name}: {e}', 'args') from None

    def to_dict(self):
        return {'name': self.name, 'params': list(self.params), 'expression': self.expression,
                'summary': self.summary, 'source': self.source}


def _withhold(fn):
    return lambda alpha, beta: fn(attack_withholding.WithholdParams(alpha, beta))


FORMULAS = {f.name: f for f in (
    Formula('withhold-gain', ('alpha', 'beta'), _withhold(attack_withholding.relative_gain),
            'alpha*beta*(1-beta)/(1-alpha)',
            'relative gain of a coalition sending beta of its power alpha into pools to withhold',
            'mining.attack_withholding.relative_gain'),
    Formula('private-premium', ('alpha', 'beta'), _withhold(attack_withholding.private_branch_premium),
            'alpha*beta/(1-alpha)',
            'extra revenue per unit power of the privately mining rogue capacity',
            'mining.attack_withholding.private_branch_premium'),
    Formula('dilution', ('alpha', 'beta'), pool_accounting.dilution_factor,
            '(1-alpha)/(1-alpha+alpha*beta)',
            'revenue factor of every member of an infiltrated pool',
            'mining.pool_accounting.dilution_factor'),
    Formula('optimal-beta', ('alpha',), attack_withholding.optimal_beta,
            'argmax_beta alpha*beta*(1-beta)/(1-alpha) = 1/2',
            'infiltration share maximizing the withholding gain (grid step 0.01)',
            'mining.attack_withholding.optimal_beta'),
    Formula('selfish-threshold', ('ns',), attack_selfish.profitability_threshold,
            '(1-ns)/(3-2*ns)',
            'smallest profitable selfish cartel for network superiority ns',
            'mining.attack_selfish.profitability_threshold'),
    Formula('selfish-revenue', ('alpha', 'gamma'), attack_selfish.closed_form_revenue,
            '(a(1-a)^2(4a+g(1-2a)) - a^3)/(1 - a(1+(2-a)a))',
            'closed-form revenue fraction of a selfish cartel',
            'mining.attack_selfish.closed_form_revenue'),
    Formula('mining-std', ('K',), lambda K: core_model.mining_distribution(K).stddev,
            'sqrt(K)',
            'standard deviation of the number of blocks found when K are expected',
            'mining.core_model.mining_distribution'),
    Formula('expected-blocks', ('hashrate', 'difficulty', 'seconds'), core_model.expected_blocks,
            'h*t/(d*2^32)',
            'expected blocks of a hashrate over a duration at a fixed difficulty',
            'mining.core_model.expected_blocks'),
    Formula('pps-check', ('difficulty', 'rate'), pool_accounting.pps_rate_check,
            'd*rate',
            'per-block payout implied by a pay-per-share rate',
            'mining.pool_accounting.pps_rate_check'),
    Formula('min-blocks', ('withhold_fraction', 'z'), detection.min_blocks_to_detect,
            '(z/w)^2',
            'expected blocks before a withheld fraction w shows up at z standard deviations',
            'mining.detection.min_blocks_to_detect'),
    Formula('min-fraction', ('K', 'z'), detection.min_detectable_fraction,
            'z/sqrt(K)',
            'smallest withheld fraction detectable after K expected blocks',
            'mining.detection.min_detectable_fraction'),
    Formula('tail-probability', ('n_sigma',), core_model.tail_probability,
            '2*(1-Phi(n))',
            'two-sided Gaussian probability of a deviation beyond n standard deviations',
            'mining.core_model.tail_probability'),
)}


def get_formula(name):
    try:
        return FORMULAS[name]
    except KeyError:
        raise ConfigError(f'unknown formula {name!r}; available: {", ".join(sorted(FORMULAS))}',
                          'name') from None


def evaluate(name, *args):
    return get_formula(name).evaluate(*args)
