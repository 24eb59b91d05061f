"""Range validation of scenario documents"""
import pytest

from forms import ZTestForm, check, first_error, validate_scenario
from mining.errors import ConfigError


def _field(data):
    with pytest.raises(ConfigError) as exc:
        validate_scenario(data)
    return exc.value.field


class TestValidateScenario:

    def test_attack_only_document(self):
        data = {'name': 'w', 'attack': {'family': 'withholding', 'alpha': 0.2, 'beta': 0.5}}
        assert validate_scenario(data) is data

    def test_zero_is_a_value(self):
        validate_scenario({'name': 's', 'attack': {'family': 'selfish', 'alpha': 0.3, 'gamma': 0}})

    def test_missing_name(self):
        assert _field({'attack': {'family': 'selfish', 'alpha': 0.3}}) == 'name'

    def test_miner_power_out_of_range(self):
        data = {'name': 'x', 'sim': {'total_blocks': 10, 'miners': [
            {'id': 'a', 'power': 0.5}, {'id': 'b', 'power': 1.5},
        ]}}
        assert _field(data) == 'sim.miners.1.power'

    def test_strategy_must_be_known(self):
        data = {'name': 'x', 'sim': {'total_blocks': 10, 'miners': [{'id': 'a', 'power': 1.0, 'strategy': 'lazy'}]}}
        assert _field(data) == 'sim.miners.0.strategy'

    def test_empty_miner_list(self):
        assert _field({'name': 'x', 'sim': {'total_blocks': 10, 'miners': []}}) == 'sim.miners'

    def test_miners_must_be_a_list(self):
        assert _field({'name': 'x', 'sim': {'total_blocks': 10, 'miners': {}}}) == 'sim.miners'

    def test_pool_fee_below_one(self):
        data = {'name': 'x', 'sim': {'total_blocks': 10, 'miners': [{'id': 'a', 'power': 1.0}],
                                     'pools': [{'id': 'p', 'fee_fraction': 1.0}]}}
        assert _field(data) == 'sim.pools.0.fee_fraction'

    def test_beta_belongs_to_withholding(self):
        data = {'name': 'x', 'attack': {'family': 'selfish', 'alpha': 0.3, 'beta': 0.5}}
        assert _field(data) == 'attack.beta'

    def test_gamma_belongs_to_selfish_mining(self):
        data = {'name': 'x', 'attack': {'family': 'withholding', 'alpha': 0.3, 'gamma': 0.5}}
        assert _field(data) == 'attack.gamma'

    def test_thresholds_in_order(self):
        data = {'name': 'x', 'attack': {'family': 'selfish', 'alpha': 0.3},
                'detection': {'suspicious_z': 3, 'detected_z': 2}}
        assert _field(data) == 'detection.detected_z'

    def test_replicates_must_be_positive(self):
        assert _field({'name': 'x', 'replicates': 0, 'attack': {'family': 'selfish', 'alpha': 0.3}}) == 'replicates'

    def test_section_must_be_an_object(self):
        assert _field({'name': 'x', 'attack': [1]}) == 'attack'

    def test_needs_sim_or_attack(self):
        assert _field({'name': 'x'}) == 'sim'

    def test_document_must_be_an_object(self):
        with pytest.raises(ConfigError):
            validate_scenario([])


class TestHelpers:

    def test_first_error_walks_nested_errors(self):
        errors = {'miners': [{}, {'power': ['too big']}]}
        assert first_error(errors, 'sim') == ('sim.miners.1.power', 'too big')

    def test_first_error_of_nothing(self):
        assert first_error({}) is None

    def test_check_returns_the_form(self):
        form = check(ZTestForm(data={'expected': 0, 'observed': 0}))
        assert form.expected.data == 0

    def test_check_names_the_field(self):
        with pytest.raises(ConfigError) as exc:
            check(ZTestForm(data={'expected': 5}))
        assert exc.value.field == 'observed'
