import logging
import os

from flask import Flask, jsonify

from .extensions import cache
from .helpers import env_int

__version__ = "0.1.0"


def create_app(config: dict | None = None):
    """JSON API over mechanisms, OPT, verification, probes and search."""
    app = Flask(__name__)

    app.config.setdefault("CACHE_TYPE", os.environ.get("CACHE_TYPE", "SimpleCache"))
    app.config.setdefault(
        "CACHE_DEFAULT_TIMEOUT", env_int("CACHE_DEFAULT_TIMEOUT", 300, minimum=0)
    )
    # Request size limits
    app.config["MAX_AGENTS"] = env_int("OBNOX_MAX_AGENTS", 500, minimum=0)
    app.config["MAX_BUDGET"] = env_int("OBNOX_MAX_BUDGET", 20000, minimum=1)
    # Misreport candidates and search lattices use k/m points
    app.config["GRID_DENSITY"] = env_int("OBNOX_GRID_DENSITY", 32, minimum=1)
    app.config["SP_GROUP_MAX"] = env_int("OBNOX_SP_GROUP_MAX", 2, minimum=2)
    # Coalition checks grow as n^k joint deviations
    app.config["SP_GROUP_MAX_AGENTS"] = env_int("OBNOX_SP_GROUP_MAX_AGENTS", 12, minimum=0)
    if config:
        app.config.update(config)

    # Logging level configuration
    level_name = os.environ.get("OBNOX_LOG_LEVEL", "INFO").upper().strip()
    level = getattr(logging, level_name, logging.INFO)
    if not isinstance(level, int):
        level = logging.INFO
    try:
        app.logger.setLevel(level)
        # Align the library loggers with the app
        logging.getLogger("obnox").setLevel(level)
        logging.getLogger("werkzeug").setLevel(level)
        app.logger.info("[config] log level set to %s", logging.getLevelName(level))
    except Exception:
        pass

    cache.init_app(app)

    from .api import api_bp

    app.register_blueprint(api_bp, url_prefix="/api/v1")

    @app.errorhandler(404)
    def _app_404(error):
        return jsonify({"success": False, "error": "not found"}), 404

    @app.errorhandler(405)
    def _app_405(error):
        return jsonify({"success": False, "error": "method not allowed"}), 405

    @app.errorhandler(500)
    def _app_500(error):
        return jsonify({"success": False, "error": "internal error"}), 500

    return app
