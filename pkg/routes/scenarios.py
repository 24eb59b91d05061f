"""Scenario run routes"""
import os
from functools import wraps

from flask import Blueprint, abort, current_app, jsonify, request

from extensions import db
from forms import validate_scenario
from mining.errors import ConfigError
from mining.scenario import Scenario, run_scenario
from models import ScenarioRun, record_run

scenarios_bp = Blueprint('scenarios', __name__, url_prefix='/api/scenarios')


def json_body_required(f):
    """Decorator passing the parsed JSON object body to the view"""
    @wraps(f)
    def decorated_function(*args, **kwargs):
        body = request.get_json(silent=True)
        if not isinstance(body, dict):
            raise ConfigError('request body must be a JSON object')
        return f(body, *args, **kwargs)
    return decorated_function


@scenarios_bp.route('', methods=['POST'])
@json_body_required
def create(body):
    """Validate and run a scenario document"""
    scenario = Scenario.from_dict(validate_scenario(body))
    output_dir = os.path.join(current_app.config['OUTPUT_DIR'], scenario.name)
    try:
        report = run_scenario(scenario, output_dir=output_dir, workers=current_app.config['API_WORKERS'])
    except Exception as e:
        record_run(scenario, output_dir, error=e)
        raise
    run = record_run(scenario, output_dir, report=report)
    return jsonify({'id': run.id if run else None, 'summary': report.summary}), 201


@scenarios_bp.route('')
def index():
    """Most recent runs first"""
    page = request.args.get('page', 1, type=int)
    runs = ScenarioRun.query.order_by(ScenarioRun.created_at.desc(), ScenarioRun.id.desc()).paginate(
        page=page, per_page=current_app.config['ITEMS_PER_PAGE'], error_out=False
    )
    return jsonify({
        'runs': [run.to_dict() for run in runs.items],
        'page': runs.page,
        'total': runs.total,
    })


@scenarios_bp.route('/<int:run_id>')
def detail(run_id):
    run = db.session.get(ScenarioRun, run_id)
    if run is None:
        abort(404)
    return jsonify(run.to_dict(with_replicates=True))
