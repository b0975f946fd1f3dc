from flask_caching import Cache

# OPT results and probe replays, keyed by instance digest / mechanism id.
cache = Cache()
