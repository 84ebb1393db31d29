"""Spectra of heavy-tailed symmetric random matrices.

Sampling (:mod:`heavyrmt.ensembles`), eigenvalue statistics
(:mod:`heavyrmt.spectra`), moment-graph combinatorics
(:mod:`heavyrmt.combinatorics`), fixed-point limits
(:mod:`heavyrmt.fixedpoint`) and Monte Carlo diagnostics
(:mod:`heavyrmt.mcstats`).
"""

from .ensembles import EnsembleSpec, SymmetricMatrix, empirical_phi, phi_limit, sample_matrix
from .errors import (
    CapacityError,
    ConfigurationError,
    DegenerateStatisticError,
    DomainError,
    HeavyRMTError,
    SolverError,
    UnsupportedFamilyError,
)

__version__ = "0.1.0"
