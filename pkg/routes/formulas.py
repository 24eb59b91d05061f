"""Closed-form formula routes"""
from flask import Blueprint, jsonify, request
from werkzeug.datastructures import MultiDict

from forms import FormulaArgsForm, check
from mining import formulas

formulas_bp = Blueprint('formulas', __name__, url_prefix='/api/formulas')


@formulas_bp.route('')
def index():
    """List every formula with its parameters"""
    return jsonify([f.to_dict() for _, f in sorted(formulas.FORMULAS.items())])


@formulas_bp.route('/<name>')
def evaluate(name):
    """Evaluate a formula; arguments come as ``?args=0.2,0.5``"""
    formula = formulas.get_formula(name)
    raw = [a for a in request.args.get('args', '').split(',') if a.strip()]
    form = check(FormulaArgsForm(formdata=MultiDict({f'args-{i}': a.strip() for i, a in enumerate(raw)})))
    value = formula.evaluate(*form.args.data)
    return jsonify({**formula.to_dict(), 'args': form.args.data, 'value': value})
