"""Python access to the stochastic Ginzburg-Landau lab."""

import json
from pathlib import Path

from ._core import (
    BlowUpError,
    IoError,
    SglError,
    ValidationError,
    __version__,
    check_hypothesis,
    chi,
    evolve,
    feasible_epsilon_max,
    fnv1a_hex,
    kernel_full,
    kernel_minus,
    kernel_plus,
    margin,
    partition_entropy,
    run_command,
    sup_norm,
)


def load_manifest(run_dir):
    """Manifest of a finished run directory, as a dict."""
    return json.loads((Path(run_dir) / "manifest.json").read_text())


__all__ = [
    "BlowUpError",
    "IoError",
    "SglError",
    "ValidationError",
    "__version__",
    "check_hypothesis",
    "chi",
    "evolve",
    "feasible_epsilon_max",
    "fnv1a_hex",
    "kernel_full",
    "kernel_minus",
    "kernel_plus",
    "load_manifest",
    "margin",
    "partition_entropy",
    "run_command",
    "sup_norm",
]
