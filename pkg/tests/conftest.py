"""Shared fixtures"""
import pytest

from app import create_app
from extensions import db
from mining.core_model import make_rng
from mining.miners import MinerSpec, Strategy
from mining.pool_accounting import PoolConfig
from mining.sim_engine import SimConfig


@pytest.fixture
def app(tmp_path):
    app = create_app('testing')
    app.config['OUTPUT_DIR'] = str(tmp_path / 'output')
    with app.app_context():
        db.create_all()
        yield app
        db.session.remove()
        db.drop_all()


@pytest.fixture
def client(app):
    return app.test_client()


@pytest.fixture
def runner(app):
    return app.test_cli_runner()


@pytest.fixture
def rng():
    return make_rng(12345)


@pytest.fixture
def honest_config():
    """Three honest solo miners and one two-member pool"""
    return SimConfig(
        miners=(
            MinerSpec('solo-a', 0.5),
            MinerSpec('solo-b', 0.2),
            MinerSpec('member-1', 0.2, pool='pool'),
            MinerSpec('member-2', 0.1, pool='pool'),
        ),
        pools=(PoolConfig('pool'),),
        total_blocks=10000,
        seed=7,
    )


@pytest.fixture
def infiltrated_config():
    """One pool with a withholding infiltrator holding 10% of the network"""
    return SimConfig(
        miners=(
            MinerSpec('honest', 0.4, pool='pool'),
            MinerSpec('rogue', 0.1, strategy=Strategy.WITHHOLD, pool='pool', target_pool='pool'),
            MinerSpec('solo', 0.5),
        ),
        pools=(PoolConfig('pool'),),
        total_blocks=20000,
        seed=3,
    )
