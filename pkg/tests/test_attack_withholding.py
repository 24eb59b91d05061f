"""Block withholding: closed forms, scenario builder and Monte Carlo gain"""
from fractions import Fraction

import pytest

from mining.attack_withholding import (
    Action, Found, WithholdParams, apply_strategy, build_withholding_config, estimate, honest_premium,
    measure_premium, optimal_beta, private_branch_premium, relative_gain, remap_identities,
    rogue_rate_ratio, sabotage_gain, simulate_gain,
)
from mining.detection import ObservationWindow
from mining.errors import ModelError, StrategyError
from mining.miners import MinerSpec, Strategy
from mining.sim_engine import run


class TestClosedForms:

    def test_relative_gain(self):
        assert relative_gain(WithholdParams(0.2, 0.5)) == pytest.approx(0.0625, abs=1e-12)

    def test_relative_gain_is_exact_with_fractions(self):
        p = WithholdParams(Fraction(1, 5), Fraction(1, 2))
        assert relative_gain(p) == Fraction(1, 16)

    @pytest.mark.parametrize('alpha', [Fraction(1, 10), Fraction(1, 5), Fraction(7, 20)])
    @pytest.mark.parametrize('beta', [Fraction(0), Fraction(1, 4), Fraction(3, 10), Fraction(9, 10)])
    def test_gain_is_symmetric_in_beta(self, alpha, beta):
        assert relative_gain(WithholdParams(alpha, beta)) == relative_gain(WithholdParams(alpha, 1 - beta))
        floats = WithholdParams(float(alpha), float(beta)), WithholdParams(float(alpha), float(1 - beta))
        assert relative_gain(floats[0]) == pytest.approx(relative_gain(floats[1]), abs=1e-15)

    def test_private_branch_premium(self):
        assert private_branch_premium(WithholdParams(0.2, 0.5)) == pytest.approx(0.125, abs=1e-12)
        assert rogue_rate_ratio(WithholdParams(0.2, 0.5)) == pytest.approx(1.125)

    def test_honest_members_lose_a_ninth(self):
        assert honest_premium(WithholdParams(0.2, 0.5)) == pytest.approx(-1 / 9)

    @pytest.mark.parametrize('alpha', [0.1, 0.3])
    def test_sabotage_and_no_infiltration_gain_nothing(self, alpha):
        assert sabotage_gain(alpha) == 0
        assert relative_gain(WithholdParams(alpha, 0.0)) == 0

    @pytest.mark.parametrize('alpha', [0.05 * k for k in range(1, 10)])
    def test_optimal_beta_is_one_half(self, alpha):
        assert optimal_beta(alpha) == 0.5

    @pytest.mark.parametrize('alpha, beta', [(0.0, 0.5), (1.0, 0.5), (0.2, 1.5)])
    def test_parameter_domain(self, alpha, beta):
        with pytest.raises(ModelError):
            WithholdParams(alpha, beta)


class TestStrategy:

    def test_everyone_submits_shares(self):
        rogue = MinerSpec('r', 0.1, strategy=Strategy.WITHHOLD, pool='p', target_pool='p')
        assert apply_strategy(rogue, Found.SHARE) is Action.SUBMIT
        assert apply_strategy(MinerSpec('h', 0.1), 'share') is Action.SUBMIT

    def test_infiltrator_drops_blocks(self):
        rogue = MinerSpec('r', 0.1, strategy=Strategy.WITHHOLD, pool='p', target_pool='p')
        assert apply_strategy(rogue, Found.BLOCK) is Action.DROP
        assert apply_strategy(MinerSpec('h', 0.1, pool='p'), Found.BLOCK) is Action.PUBLISH

    def test_selfish_blocks_belong_to_the_state_machine(self):
        member = MinerSpec('s', 0.3, strategy=Strategy.SELFISH, cartel_id='c')
        with pytest.raises(StrategyError):
            apply_strategy(member, Found.BLOCK)


class TestScenarioBuilder:

    def test_default_layout(self):
        cfg = build_withholding_config(WithholdParams(0.2, 0.5), 1000, seed=1)
        powers = {m.id: m.power_fraction for m in cfg.miners}
        assert powers == pytest.approx({'honest-public-pool': 0.8, 'rogue-in-public-pool': 0.1,
                                        'rogue-private': 0.1})
        assert cfg.rogue_ids == frozenset({'rogue-in-public-pool', 'rogue-private'})

    def test_infiltration_spread_over_pools(self):
        cfg = build_withholding_config(WithholdParams(0.2, 1.0), 1000, seed=1,
                                       pool_shares={'a': 3, 'b': 1}, honest_per_pool=2)
        powers = {m.id: m.power_fraction for m in cfg.miners}
        assert powers['rogue-in-a'] == pytest.approx(0.15)
        assert powers['honest-b-1'] == pytest.approx(0.1)
        assert 'rogue-private' not in powers


class TestMonteCarlo:

    def test_measured_premium_of_one_run(self):
        result = run(build_withholding_config(WithholdParams(0.2, 0.5), 100000, seed=9))
        outcome = measure_premium(result)
        assert outcome.premium == pytest.approx(0.0625, abs=0.02)
        assert outcome.honest_premium == pytest.approx(-1 / 9, abs=0.02)
        assert outcome.main_rate == pytest.approx(0.9, abs=0.005)

    @pytest.mark.slow
    @pytest.mark.parametrize('alpha', [0.1, 0.2, 0.3])
    @pytest.mark.parametrize('beta', [0.25, 0.5, 0.75])
    def test_gain_matches_closed_form(self, alpha, beta):
        params = WithholdParams(alpha, beta)
        gain = simulate_gain(params, 100000, seed=2024, replicates=64)
        assert abs(gain.mean - relative_gain(params)) <= 3 * gain.stderr

    def test_estimate(self):
        result = estimate([1.0, 2.0, 3.0])
        assert result.mean == 2.0
        assert result.stderr == pytest.approx(1 / 3 ** 0.5)
        assert result.ci_halfwidth == pytest.approx(1.96 * result.stderr)


class TestIdentityRemap:

    def test_blocks_are_conserved(self, rng):
        windows = [ObservationWindow(100.0, 90, 'pool'), ObservationWindow(10.0, 12, 'solo')]
        remapped = remap_identities(windows, 5, rng)
        assert len(remapped) == 10
        assert sum(w.observed_blocks for w in remapped) == 102
        assert sum(w.expected_blocks for w in remapped) == pytest.approx(110.0)
        assert remapped[0].label == 'pool#0'

    def test_single_identity_is_unchanged(self, rng):
        windows = [ObservationWindow(5.0, 4, 'x')]
        assert remap_identities(windows, 1, rng) == windows

    def test_churn_must_be_positive(self, rng):
        with pytest.raises(ModelError):
            remap_identities([], 0, rng)
