"""Routes package initialization"""
from routes.detection import detection_bp
from routes.formulas import formulas_bp
from routes.scenarios import scenarios_bp


def register_blueprints(app):
    """Register all blueprints with the Flask app"""
    app.register_blueprint(formulas_bp)
    app.register_blueprint(scenarios_bp)
    app.register_blueprint(detection_bp)
