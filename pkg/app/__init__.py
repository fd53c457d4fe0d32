from flask import Flask
import os
import logging
from logging.handlers import RotatingFileHandler

from app.extensions import executor


def create_app(config_class=None):
    app = Flask(__name__)

    # Load configuration
    if config_class is None:
        from config import Config
        config_class = Config

    app.config.from_object(config_class)

    # Initialize extensions
    executor.init_app(app)

    # Register command blueprints
    from app.solver import bp as solver_bp
    app.register_blueprint(solver_bp)

    from app.sweeps import bp as sweeps_bp
    app.register_blueprint(sweeps_bp)

    from app.critical import bp as critical_bp
    app.register_blueprint(critical_bp)

    from app.lfp import bp as lfp_bp
    app.register_blueprint(lfp_bp)

    from app.reproduce import bp as reproduce_bp
    app.register_blueprint(reproduce_bp)

    # Library modules log under the `app` logger
    level = getattr(logging, str(app.config.get('LOG_LEVEL', 'INFO')).upper(), logging.INFO)
    app.logger.setLevel(level)

    if app.config.get('LOG_TO_FILE') and not app.debug and not app.testing:
        log_dir = app.config.get('LOG_DIR', 'logs')
        if not os.path.exists(log_dir):
            os.mkdir(log_dir)
        file_handler = RotatingFileHandler(os.path.join(log_dir, 'specbound.log'), maxBytes=10240, backupCount=10)
        file_handler.setFormatter(logging.Formatter(
            '%(asctime)s %(levelname)s: %(message)s [in %(pathname)s:%(lineno)d]'
        ))
        file_handler.setLevel(level)
        app.logger.addHandler(file_handler)
        app.logger.info('specbound startup')

    return app
