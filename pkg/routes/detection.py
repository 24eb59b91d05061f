"""Detection routes"""
import io

import pandas as pd
from flask import Blueprint, current_app, jsonify, request

from forms import ZTestForm, check
from mining import detection
from mining.errors import DetectionError
from mining.sim_engine import BlockDag
from routes.scenarios import json_body_required

detection_bp = Blueprint('detection', __name__, url_prefix='/api/detection')


def _thresholds():
    return detection.DetectionThresholds(
        suspicious=current_app.config['SUSPICIOUS_Z'],
        detected=current_app.config['DETECTED_Z'],
    )


@detection_bp.route('/z-test', methods=['POST'])
@json_body_required
def z_test(body):
    """Expected vs observed blocks of one miner or pool"""
    form = check(ZTestForm(data=body))
    window = detection.ObservationWindow(form.expected.data, form.observed.data, form.label.data or '')
    return jsonify(detection.z_test(window, _thresholds()).to_dict())


@detection_bp.route('/analyze-dag', methods=['POST'])
def analyze_dag():
    """Per-window wasted-block percentages of an event log posted as CSV text"""
    text = request.get_data(as_text=True)
    if not text.strip():
        raise DetectionError('request body must be an event-log CSV')
    window = request.args.get('window', current_app.config['DAG_WINDOW'], type=int)
    try:
        dag = BlockDag.from_frame(pd.read_csv(io.StringIO(text)))
    except (ValueError, KeyError) as e:
        raise DetectionError(f'unreadable event log: {e}') from e
    frame = detection.analyze_dag(dag, window)
    mined, stale, child = detection.dag_totals(dag)
    return jsonify({
        'window': window,
        'windows': frame.to_dict('records'),
        'totals': {'mined': mined, 'stale': stale, 'child_of_stale': child},
    })
