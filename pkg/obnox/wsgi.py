"""Gunicorn target: ``gunicorn obnox.wsgi:app``.

Environment is read from ``.env`` before the factory runs, so the
``OBNOX_*`` request limits apply to every worker.
"""

from dotenv import load_dotenv

from . import create_app
from .helpers import env_int
from .mechanisms import registered_mechanisms

load_dotenv()

app = create_app()
app.logger.info(
    "[wsgi] serving %d mechanisms (max agents %s, max budget %s)",
    len(registered_mechanisms()),
    app.config["MAX_AGENTS"],
    app.config["MAX_BUDGET"],
)


if __name__ == "__main__":
    app.run(host="0.0.0.0", port=env_int("OBNOX_PORT", 8000, minimum=1))
