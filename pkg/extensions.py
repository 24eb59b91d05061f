"""Flask extensions initialization"""
import logging.config

from flask_sqlalchemy import SQLAlchemy

# Initialize extensions
db = SQLAlchemy()


def configure_logging(app):
    """Route every module logger through one stream handler at the configured level"""
    logging.config.dictConfig({
        'version': 1,
        'disable_existing_loggers': False,
        'formatters': {
            'default': {'format': '[%(asctime)s] %(levelname)s in %(name)s: %(message)s'},
        },
        'handlers': {
            'stderr': {
                'class': 'logging.StreamHandler',
                'stream': 'ext://sys.stderr',
                'formatter': 'default',
            },
        },
        'root': {'level': app.config.get('LOG_LEVEL', 'INFO'), 'handlers': ['stderr']},
    })


def init_extensions(app):
    """Initialize all extensions with the app"""
    configure_logging(app)
    db.init_app(app)
