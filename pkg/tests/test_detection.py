"""Deficit z-tests, power analysis, wasted-block analysis and PPS audits"""
import math

import numpy as np
import pandas as pd
import pytest
from scipy import stats

from mining.attack_selfish import SelfishParams, build_selfish_config
from mining.attack_withholding import WithholdParams, build_withholding_config
from mining.core_model import make_rng
from mining.detection import (
    WINDOW_COLUMNS, DetectionThresholds, ObservationWindow, Verdict, analyze_dag, consistency_audit,
    dag_totals, detection_power, event_rate_gain, identity_churn_test, load_historical_waste,
    min_blocks_to_detect, min_detectable_fraction, observation_windows, pool_window, read_event_log,
    simulate_detection_rate, validate_dag, write_report_json, write_window_csv, z_test,
)
from mining.errors import DetectionError, ModelError
from mining.miners import MinerSpec
from mining.pool_accounting import PayPerShare, PoolConfig
from mining.sim_engine import BlockDag, SimConfig, Status, run

DIFFICULTY = 1418481395


class TestZTest:

    def test_single_miner_year_is_undetectable(self):
        report = z_test(ObservationWindow(18.0, 16, 'miner'))
        assert report.z_score == pytest.approx(2 / math.sqrt(18))
        assert report.z_score < 1
        assert report.verdict is Verdict.UNDETECTABLE
        # exact Poisson tail for small K
        assert report.p_value == pytest.approx(stats.poisson.cdf(16, 18))

    @pytest.mark.parametrize('observed, verdict', [
        (70, Verdict.DETECTED), (80, Verdict.SUSPICIOUS), (85, Verdict.UNDETECTABLE), (130, Verdict.UNDETECTABLE),
    ])
    def test_verdicts(self, observed, verdict):
        assert z_test(ObservationWindow(100.0, observed)).verdict is verdict

    def test_gaussian_tail_for_large_K(self):
        report = z_test(ObservationWindow(100.0, 70))
        assert report.z_score == pytest.approx(3.0)
        assert report.p_value == pytest.approx(stats.norm.sf(3.0))
        assert report.min_detectable_withhold_fraction == pytest.approx(0.3)

    def test_custom_thresholds(self):
        thresholds = DetectionThresholds(suspicious=1.0, detected=1.5)
        assert z_test(ObservationWindow(100.0, 85), thresholds).verdict is Verdict.DETECTED

    def test_small_windows_cap_the_detectable_fraction(self):
        assert z_test(ObservationWindow(4.0, 4)).min_detectable_withhold_fraction == 1.0

    def test_nothing_expected_nothing_seen(self):
        report = z_test(ObservationWindow(0.0, 0))
        assert report.z_score == 0.0
        assert report.p_value == 1.0

    def test_blocks_where_none_were_expected(self):
        with pytest.raises(DetectionError):
            z_test(ObservationWindow(0.0, 3, 'ghost'))

    def test_invalid_window(self):
        with pytest.raises(ModelError):
            ObservationWindow(-1.0, 0)

    def test_report_dict(self):
        data = z_test(ObservationWindow(100.0, 70, 'p')).to_dict()
        assert data['verdict'] == 'detected'
        assert data['label'] == 'p'

    def test_threshold_order(self):
        with pytest.raises(ModelError):
            DetectionThresholds(suspicious=3.0, detected=2.0)


class TestPowerAnalysis:

    def test_blocks_needed_for_a_ninth(self):
        assert min_blocks_to_detect(1 / 9, 3) == pytest.approx(729)
        assert min_detectable_fraction(729, 3) == pytest.approx(1 / 9)

    def test_more_frequent_events_help_by_square_root(self):
        assert event_rate_gain(4) == 2.0
        assert min_detectable_fraction(18 * 4) == pytest.approx(min_detectable_fraction(18) / event_rate_gain(4))

    def test_fraction_domain(self):
        with pytest.raises(ModelError):
            min_blocks_to_detect(0)

    def test_power_at_the_break_even_window(self):
        assert detection_power(1 / 9, 729, 3) >= 0.5

    def test_monte_carlo_power_agrees(self):
        exact = detection_power(1 / 9, 729, 3)
        rate = simulate_detection_rate(1 / 9, 729, 3, 100000, make_rng(729))
        se = math.sqrt(exact * (1 - exact) / 100000)
        assert abs(rate - exact) <= 3 * se
        assert rate >= 0.5

    def test_desk_scale_power_is_negligible(self):
        assert detection_power(1 / 9, 18, 3) < 0.05

    def test_honest_false_positive_rate(self):
        rate = simulate_detection_rate(0.0, 1000, 3, 10000, make_rng(1000))
        assert rate <= 0.005


class TestSimulatedWindows:

    @pytest.fixture
    def withholding_result(self):
        return run(build_withholding_config(WithholdParams(0.2, 0.5), 2000, seed=17))

    def test_windows_per_miner(self, withholding_result):
        windows = {w.label: w for w in observation_windows(withholding_result)}
        rogue = windows['rogue-in-public-pool']
        assert rogue.expected_blocks == pytest.approx(200)
        assert rogue.observed_blocks == 0
        assert z_test(rogue).verdict is Verdict.DETECTED
        assert windows['rogue-private'].expected_blocks == pytest.approx(200)

    def test_pool_window_shows_the_deficit(self, withholding_result):
        window = pool_window(withholding_result, 'public-pool')
        assert window.expected_blocks == pytest.approx(1800)
        assert window.deficit_fraction == pytest.approx(1 / 9, abs=0.04)

    def test_unknown_pool(self, withholding_result):
        with pytest.raises(DetectionError):
            pool_window(withholding_result, 'missing')

    @pytest.mark.slow
    def test_identity_churn_hides_miners_but_not_the_pool(self, withholding_result):
        windows = observation_windows(withholding_result)
        rogue_ids = withholding_result.config.rogue_ids
        rogue = [w for w in windows if w.label in rogue_ids]
        honest = [w for w in windows if w.label not in rogue_ids]
        report = identity_churn_test(rogue, honest, identity_blocks=0.005, rng=make_rng(5))
        assert report.ks_pvalue > 0.01
        assert report.rogue_identities == 80000
        assert report.aggregate.verdict is Verdict.DETECTED

    def test_churn_needs_both_sides(self, rng):
        with pytest.raises(DetectionError):
            identity_churn_test([], [ObservationWindow(1.0, 1)], 0.1, rng)


def _random_dag(k):
    """Mix of natural-fork, selfish and withholding runs of varying size"""
    rng = np.random.default_rng(k)
    blocks = int(rng.integers(50, 10001))
    kind = k % 3
    if kind == 0:
        cfg = SimConfig(
            miners=(MinerSpec('a', 0.6), MinerSpec('b', 0.4)),
            total_blocks=blocks, seed=k, natural_fork_rate=float(rng.uniform(0.01, 0.3)),
        )
    elif kind == 1:
        cfg = build_selfish_config(SelfishParams(float(rng.uniform(0.1, 0.45)), float(rng.uniform())), blocks, seed=k)
    else:
        cfg = build_withholding_config(WithholdParams(float(rng.uniform(0.05, 0.4)), float(rng.uniform())),
                                       blocks, seed=k)
    return run(cfg).dag


def _walk(dag, window):
    """Node-by-node count of mined, stale and child-of-stale blocks per height window"""
    events = {e.id: e for e in dag}
    rows = {}
    for e in events.values():
        if e.parent is None or e.published_at is None or e.was_withheld:
            continue
        start = e.height // window * window
        mined, stale, child = rows.get(start, (0, 0, 0))
        is_stale = e.status is Status.STALE
        on_stale = is_stale and events[e.parent].status is Status.STALE
        rows[start] = (mined + 1, stale + is_stale, child + on_stale)
    return rows


class TestAnalyzeDag:

    @pytest.mark.slow
    @pytest.mark.parametrize('k', range(100))
    def test_matches_node_walk(self, k):
        dag = _random_dag(k)
        window = [50, 100, 1000][k % 3 - 1]
        frame = analyze_dag(dag, window)
        expected = _walk(dag, window)
        got = {
            int(row.blocks.split('-')[0]): (int(row.mined), int(row.stale), int(row.child_of_stale))
            for row in frame.itertuples()
        }
        assert got == expected

    def test_percentages(self):
        events = pd.DataFrame({
            'height': [0, 1, 1, 2, 2, 3],
            'owner': ['genesis', 'a', 'b', 'a', 'b', 'a'],
            'parent': [None, 0, 0, 1, 2, 3],
            'status': ['main', 'main', 'stale', 'main', 'stale', 'main'],
        })
        frame = analyze_dag(BlockDag.from_frame(events), window=10)
        row = frame.iloc[0]
        assert row['blocks'] == '0-9'
        assert row['mined'] == 5
        assert row['wasted_pct'] == pytest.approx(40.0)
        assert row['child_of_wasted_pct'] == pytest.approx(20.0)
        assert dag_totals(BlockDag.from_frame(events)) == (5, 2, 1)

    def test_two_main_blocks_at_one_height(self):
        events = pd.DataFrame({
            'height': [0, 1, 1],
            'owner': ['genesis', 'a', 'b'],
            'parent': [None, 0, 0],
            'status': ['main', 'main', 'main'],
        })
        with pytest.raises(DetectionError):
            validate_dag(BlockDag.from_frame(events))

    def test_unknown_parent(self):
        events = pd.DataFrame({
            'id': [0, 1],
            'height': [0, 1],
            'owner': ['genesis', 'a'],
            'parent': [None, 7],
            'status': ['main', 'main'],
        })
        with pytest.raises(DetectionError):
            validate_dag(BlockDag.from_frame(events))

    def test_window_csv_schema(self, tmp_path):
        frame = analyze_dag(_random_dag(0), 100)
        path = tmp_path / 'windows.csv'
        write_window_csv(frame, path)
        written = pd.read_csv(path)
        assert list(written.columns) == WINDOW_COLUMNS

    def test_read_event_log_errors(self, tmp_path):
        path = tmp_path / 'bad.csv'
        path.write_text('height,owner\n0,genesis\n')
        with pytest.raises(DetectionError):
            read_event_log(path)

    def test_historical_table(self):
        table = load_historical_waste()
        assert list(table.columns) == WINDOW_COLUMNS
        assert len(table) == 14


class TestConsistencyAudit:

    def test_historical_pool_is_consistent(self):
        pool = PoolConfig('guild', fee_fraction=0.08, reward_scheme=PayPerShare(1.63026460e-8))
        report = consistency_audit(pool, DIFFICULTY)
        assert report.implied_payout == pytest.approx(23.125, abs=1e-3)
        assert report.expected_payout == pytest.approx(23.0)
        assert not report.flagged
        assert report.source == 'advertised'

    def test_withheld_revenue_is_flagged(self):
        result = run(build_withholding_config(WithholdParams(0.2, 0.5), 20000, seed=4))
        pool = PoolConfig('public-pool', reward_scheme=PayPerShare())
        report = consistency_audit(pool, result.config.difficulty, ledger=result.ledgers['public-pool'],
                                   share_ratio=result.config.share_difficulty_ratio)
        assert report.source == 'realized'
        assert report.ratio == pytest.approx(8 / 9, abs=0.02)
        assert report.flagged

    def test_fair_rate(self):
        report = consistency_audit(PoolConfig('p', reward_scheme=PayPerShare()), DIFFICULTY)
        assert report.source == 'fair'
        assert report.ratio == pytest.approx(1.0)

    def test_proportional_pool_cannot_be_audited(self):
        with pytest.raises(DetectionError):
            consistency_audit(PoolConfig('p'), DIFFICULTY)

    def test_report_json(self, tmp_path):
        pool = PoolConfig('guild', fee_fraction=0.08, reward_scheme=PayPerShare(1.63026460e-8))
        path = tmp_path / 'audit.json'
        write_report_json(consistency_audit(pool, DIFFICULTY), path)
        assert '"flagged": false' in path.read_text()
