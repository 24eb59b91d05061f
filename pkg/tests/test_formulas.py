"""Named closed-form results"""
import importlib

import pytest

from mining.errors import ConfigError
from mining.formulas import FORMULAS, evaluate, get_formula


@pytest.mark.parametrize('name, args, value', [
    ('withhold-gain', (0.2, 0.5), 0.0625),
    ('private-premium', (0.2, 0.5), 0.125),
    ('dilution', (0.2, 0.5), 8 / 9),
    ('optimal-beta', (0.3,), 0.5),
    ('selfish-threshold', (0.5,), 0.25),
    ('selfish-threshold', (1.0,), 0.0),
    ('selfish-revenue', (0.25, 0.5), 0.25),
    ('mining-std', (18,), 4.242640687),
    ('pps-check', (1418481395, 1.6302646e-8), 23.125),
    ('min-blocks', (1 / 9, 3), 729),
    ('min-fraction', (729, 3), 1 / 9),
    ('tail-probability', (3,), 0.0026998),
])
def test_values(name, args, value):
    assert evaluate(name, *args) == pytest.approx(value, rel=1e-4, abs=1e-9)


def test_expected_blocks():
    assert 2.4 <= evaluate('expected-blocks', 174e12, 1418481395, 86400) <= 2.6


def test_string_arguments_are_parsed():
    assert evaluate('withhold-gain', '0.2', '0.5') == pytest.approx(0.0625)


def test_wrong_arity():
    with pytest.raises(ConfigError) as exc:
        evaluate('withhold-gain', 0.2)
    assert exc.value.field == 'args'


def test_non_numeric_argument():
    with pytest.raises(ConfigError):
        evaluate('mining-std', 'lots')


def test_domain_errors_become_config_errors():
    with pytest.raises(ConfigError):
        evaluate('withhold-gain', 1.5, 0.5)


def test_unknown_formula_lists_the_names():
    with pytest.raises(ConfigError) as exc:
        get_formula('nope')
    assert 'withhold-gain' in str(exc.value)


def test_every_formula_describes_itself():
    for formula in FORMULAS.values():
        data = formula.to_dict()
        assert data['name'] == formula.name
        assert len(data['params']) == len(formula.params)


@pytest.mark.parametrize('name', sorted(FORMULAS))
def test_source_names_the_implementing_function(name):
    module_name, _, attr = FORMULAS[name].source.rpartition('.')
    assert callable(getattr(importlib.import_module(module_name), attr))
    assert FORMULAS[name].to_dict()['source'] == FORMULAS[name].source
