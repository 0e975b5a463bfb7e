"""Python bindings for the qauto simulation core."""

from ._core import *  # noqa: F401,F403
from ._core import Error, run_scenario

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"


def run_scenario_dict(scenario: dict, out_dir: str | None = None) -> dict:
    """Run a scenario given as a Python dict."""
    import json

    return run_scenario(json.dumps(scenario), out_dir)
