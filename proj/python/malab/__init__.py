"""Python access to the malab Monge-Ampere regularity lab.

Reports come back as plain dictionaries; fields expose numpy arrays.
"""

import json

from ._malab import Field, MalabError, StageFailure, __version__, config_template, solve, wang_field
from . import _malab

__all__ = [
    "Field",
    "MalabError",
    "StageFailure",
    "__version__",
    "compare",
    "config_template",
    "doubling",
    "levels",
    "run",
    "solve",
    "solve_report",
    "tails",
    "wang",
    "wang_field",
]


def solve_report(field):
    """Solver report of a solved field, or None for sampled fields."""
    return json.loads(field.report_json) if field.report_json else None


def levels(field, M=2.0, level=float("nan")):
    return json.loads(field.levels_json(M, level))


def tails(field, level=float("nan")):
    return json.loads(field.tails_json(level))


def wang(alpha):
    return json.loads(_malab.wang_json(alpha))


def doubling(alpha, nodes=65, seed=1):
    return json.loads(_malab.doubling_json(alpha, nodes, seed))


def run(config_yaml, output="", base_dir="."):
    """Run every stage for a YAML config given as text; returns the manifest."""
    return json.loads(_malab.run_json(config_yaml, output, base_dir))


def compare(run_a, run_b):
    return json.loads(_malab.compare_json(run_a, run_b))
