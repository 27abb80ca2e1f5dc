"""Regularized M-estimation with influence curves and one-step estimators."""

from ._regm import *  # noqa: F401,F403
from ._regm import Error, ConfigError, run as _run


def run(command, out, **config):
    """Run a CLI command with keyword config values; returns (status, messages)."""
    values = {}
    for key, value in config.items():
        if isinstance(value, (list, tuple)):
            value = ",".join(str(v) for v in value)
        elif isinstance(value, bool):
            value = "true" if value else "false"
        values[key] = str(value)
    return _run(command, values, str(out))
