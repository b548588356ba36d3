"""Python bindings for the Fuchsian Kasner-scalar field solver."""

import json

from . import _core

__all__ = ["command", "command_names", "kasner", "weyl_background", "mc_pd_check", "initial_data", "evolve",
           "output_times"]

command_names = _core.command_names
weyl_background = _core.weyl_background
mc_pd_check = _core.mc_pd_check
output_times = _core.output_times


def _dump(config):
    return config if isinstance(config, str) else json.dumps(config)


def command(name, config=None, out="", input=""):
    """Run a CLI command in process; returns (passed, report dict)."""
    passed, report = _core.command(name, _dump(config or {}), out, input)
    return passed, json.loads(report)


def kasner(q):
    """Exponents and sub-criticality for Kasner data q (n = len(q) + 1)."""
    return json.loads(_core.kasner(len(q) + 1, list(q)))


def initial_data(config):
    """Constrained initial data; returns (t, W, report) with W of shape (points, components)."""
    t, W, report = _core.initial_data(_dump(config))
    return t, W, json.loads(report)


def evolve(config):
    """Full run toward t_end; returns (t, W, result dict)."""
    t, W, result = _core.evolve(_dump(config))
    return t, W, json.loads(result)
