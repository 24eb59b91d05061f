"""Database models using SQLAlchemy ORM

The registry is an audit trail of scenario runs. Report files never read from it.
"""
import json
import logging
import math
from datetime import datetime

from extensions import db

logger = logging.getLogger(__name__)


class RunStatus:
    """Scenario run status values"""
    RUNNING = 'running'
    COMPLETED = 'completed'
    FAILED = 'failed'


class ScenarioRun(db.Model):
    """One batch of replicates"""
    __tablename__ = 'scenario_runs'

    id = db.Column(db.Integer, primary_key=True)
    name = db.Column(db.String(120), nullable=False, index=True)
    family = db.Column(db.String(20), nullable=True)  # withholding, selfish or None
    master_seed = db.Column(db.String(24), nullable=False)  # 64-bit seeds overflow BIGINT
    replicates = db.Column(db.Integer, nullable=False, default=1)
    total_blocks = db.Column(db.Integer, nullable=False)
    output_dir = db.Column(db.String(500), nullable=True)
    summary_json = db.Column(db.Text, nullable=True)
    error = db.Column(db.Text, nullable=True)
    status = db.Column(db.String(20), nullable=False, default=RunStatus.RUNNING, index=True)

    # Timestamps
    created_at = db.Column(db.DateTime, nullable=False, default=datetime.utcnow, index=True)
    finished_at = db.Column(db.DateTime, nullable=True)

    # Relationships
    replicate_records = db.relationship('ReplicateRecord', backref='run', lazy='dynamic',
                                        cascade='all, delete-orphan', order_by='ReplicateRecord.replicate')

    @classmethod
    def start(cls, scenario, output_dir=None):
        return cls(
            name=scenario.name,
            family=scenario.family,
            master_seed=str(scenario.sim.seed),
            replicates=scenario.replicates,
            total_blocks=scenario.sim.total_blocks,
            output_dir=str(output_dir) if output_dir else None,
        )

    def complete(self, report):
        """Store the summary and one record per replicate row"""
        self.summary_json = json.dumps(report.summary, sort_keys=True)
        self.output_dir = str(report.output_dir)
        self.status = RunStatus.COMPLETED
        self.finished_at = datetime.utcnow()
        for row in report.replicates.to_dict('records'):
            self.replicate_records.append(ReplicateRecord.from_row(row))

    def fail(self, error):
        self.status = RunStatus.FAILED
        self.error = str(error)
        self.finished_at = datetime.utcnow()

    @property
    def summary(self):
        return json.loads(self.summary_json) if self.summary_json else None

    def to_dict(self, with_replicates=False):
        data = {
            'id': self.id,
            'name': self.name,
            'family': self.family,
            'master_seed': int(self.master_seed),
            'replicates': self.replicates,
            'total_blocks': self.total_blocks,
            'output_dir': self.output_dir,
            'status': self.status,
            'error': self.error,
            'summary': self.summary,
            'created_at': self.created_at.isoformat() if self.created_at else None,
            'finished_at': self.finished_at.isoformat() if self.finished_at else None,
        }
        if with_replicates:
            data['replicate_records'] = [r.to_dict() for r in self.replicate_records]
        return data

    def __repr__(self):
        return f'<ScenarioRun {self.name} ({self.status})>'


class ReplicateRecord(db.Model):
    """Headline numbers of one replicate"""
    __tablename__ = 'replicate_records'

    id = db.Column(db.Integer, primary_key=True)
    run_id = db.Column(db.Integer, db.ForeignKey('scenario_runs.id'), nullable=False, index=True)
    replicate = db.Column(db.Integer, nullable=False)
    seed = db.Column(db.String(24), nullable=False)

    main_blocks = db.Column(db.Integer, nullable=False)
    stale_blocks = db.Column(db.Integer, nullable=False, default=0)
    withheld_blocks = db.Column(db.Integer, nullable=False, default=0)
    rogue_revenue_fraction = db.Column(db.Float, nullable=False)
    premium = db.Column(db.Float, nullable=False)
    pool_z = db.Column(db.Float, nullable=True)  # only when a pool is infiltrated

    @classmethod
    def from_row(cls, row):
        pool_z = row.get('pool_z')
        return cls(
            replicate=int(row['replicate']),
            seed=str(int(row['seed'])),
            main_blocks=int(row['main_blocks']),
            stale_blocks=int(row['stale_blocks']),
            withheld_blocks=int(row['withheld_blocks']),
            rogue_revenue_fraction=float(row['rogue_revenue_fraction']),
            premium=float(row['premium']),
            pool_z=None if pool_z is None or math.isnan(pool_z) else float(pool_z),
        )

    def to_dict(self):
        return {
            'replicate': self.replicate,
            'seed': int(self.seed),
            'main_blocks': self.main_blocks,
            'stale_blocks': self.stale_blocks,
            'withheld_blocks': self.withheld_blocks,
            'rogue_revenue_fraction': self.rogue_revenue_fraction,
            'premium': self.premium,
            'pool_z': self.pool_z,
        }

    def __repr__(self):
        return f'<ReplicateRecord {self.run_id}#{self.replicate}>'


def record_run(scenario, output_dir, report=None, error=None):
    """Store a finished or failed run; registry failures are logged, never raised"""
    try:
        run = ScenarioRun.start(scenario, output_dir)
        if report is not None:
            run.complete(report)
        else:
            run.fail(error)
        db.session.add(run)
        db.session.commit()
        return run
    except Exception as e:
        db.session.rollback()
        logger.warning('could not record run %s: %s', scenario.name, e)
        return None
