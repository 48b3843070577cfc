"""Metastable decay: resonance poles, kernel decomposition, dawn and twilight times."""

from . import (cli_report, core_model, kernel, resonances, scattering, specfun,
               tdse, timescales)
from .errors import ArtifactError

__version__ = "0.1.0"

__all__ = ["core_model", "specfun", "scattering", "resonances", "kernel",
           "timescales", "tdse", "cli_report", "ArtifactError", "__version__"]
