"""
Flask application factory
poolsim - mining-pool strategy simulator
"""
import logging
import os

from flask import Flask, jsonify
from werkzeug.exceptions import HTTPException

from config import get_config
from extensions import db, init_extensions
from mining.errors import ConfigError, DetectionError, ModelError
from routes import register_blueprints

logger = logging.getLogger(__name__)


def create_app(config_name=None):
    """Application factory"""
    # Create Flask app
    app = Flask(__name__)

    # Load configuration
    if config_name is None:
        config_name = os.getenv('FLASK_ENV', 'development')

    app.config.from_object(get_config(config_name))

    # Create instance directory if it doesn't exist
    instance_dir = os.path.join(os.path.dirname(__file__), 'instance')
    if not os.path.exists(instance_dir):
        os.makedirs(instance_dir)

    # Initialize extensions
    init_extensions(app)

    # Register blueprints and CLI commands
    register_blueprints(app)
    from cli import register_commands
    register_commands(app)

    # The run registry is optional: a locked or missing database must not stop
    # the simulator from running.
    try:
        with app.app_context():
            db.create_all()
    except Exception as e:
        logger.warning('database initialization failed: %s', e)

    # Register error handlers
    @app.errorhandler(ConfigError)
    @app.errorhandler(ModelError)
    @app.errorhandler(DetectionError)
    def bad_request(e):
        details = {'field': e.field} if isinstance(e, ConfigError) and e.field else {}
        return jsonify({'error': str(e), 'details': details}), 400

    @app.errorhandler(HTTPException)
    def http_error(e):
        return jsonify({'error': e.name, 'details': {'description': e.description}}), e.code

    @app.errorhandler(Exception)
    def internal_error(e):
        db.session.rollback()
        logger.exception('unhandled error')
        return jsonify({'error': 'Internal Server Error', 'details': {}}), 500

    @app.route('/health')
    def health():
        """Liveness check"""
        return jsonify({'status': 'ok'})

    return app


if __name__ == '__main__':
    app = create_app()
    port = int(os.getenv('PORT', 5000))
    debug = os.getenv('FLASK_ENV') == 'development'
    app.run(debug=debug, host='0.0.0.0', port=port, use_reloader=False)
