import os
from dotenv import load_dotenv
load_dotenv()


def _env_int(name, default):
    value = os.environ.get(name)
    try:
        return int(value) if value not in (None, '') else default
    except ValueError:
        return default


class Config:
    APP_NAME = os.environ.get('APP_NAME', 'specbound')

    # Parallelism (--threads overrides)
    SPECBOUND_THREADS = _env_int('SPECBOUND_THREADS', 1)
    CHUNK_SIZE = 256

    # Logging
    LOG_LEVEL = os.environ.get('SPECBOUND_LOG_LEVEL', 'INFO')
    LOG_DIR = os.environ.get('SPECBOUND_LOG_DIR', 'logs')
    LOG_TO_FILE = True

    # Solver
    DENSE_GRID_LIMIT = 4096

    # Diagnostics
    TRIVIALITY_THRESHOLD = 0.1
    EXCLUSION_WIDTHS = 10.0  # five leaves alpha = 0.5 at tau ~ 0.11, see diagnostics_service

    # Manifest timestamps
    TIMEZONE = os.environ.get('TIMEZONE', 'UTC')

    # Output
    DEFAULT_OUT_DIR = os.environ.get('SPECBOUND_OUT_DIR', 'out')


class DevelopmentConfig(Config):
    DEBUG = True
    TESTING = False
    LOG_TO_FILE = False


class ProductionConfig(Config):
    DEBUG = False
    TESTING = False


class TestingConfig(Config):
    TESTING = True
    LOG_TO_FILE = False
    SPECBOUND_THREADS = 1


config = {
    'development': DevelopmentConfig,
    'production': ProductionConfig,
    'testing': TestingConfig,
    'default': ProductionConfig
}
