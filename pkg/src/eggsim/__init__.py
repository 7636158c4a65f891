"""Simulation of electric-field-gradient gates on trapped polar molecular ions.

Submodules
----------
model        parameters and closed-form derived quantities
fock         truncated Fock-space states and operators
hamiltonians dipole and quadrupole drive Hamiltonians
dynamics     Magnus time integration
scenarios    heating and MS-gate runs
gates        analytic propagators, readout protocol, fidelities
ultrafast    impulsive kick sequences and their designer
config, io, cli
"""

from .config import ExperimentConfig, paper_config
from .errors import (AmbiguousThresholdError, ConfigError, ConvergenceError, EggsError,
                     NormDriftError, NumericalGuardError, TruncationError)

__version__ = "0.1.0"

__all__ = ["ExperimentConfig", "paper_config", "EggsError", "ConfigError", "NumericalGuardError",
           "TruncationError", "NormDriftError", "ConvergenceError", "AmbiguousThresholdError",
           "__version__"]
