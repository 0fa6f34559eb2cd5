"""Generalized Dickman distributions and their approximation machinery.

Library layout:

  numerics      shared special functions, quadrature, interpolation tables
  distribution  rho/density/CDF of the generalized Dickman law
  samplers      perpetuity and weighted Bernoulli/Poisson sum generators
  lattice       exact finite-support laws of the weighted sums
  metrics       exact Kolmogorov distance, empirical KS, interval probes
  stein         averaging operator, fixed-point series, u+- diagnostics
  bounds        explicit upper/lower bound certificates
  apps          Quickselect comparisons and weighted tree depths
  cli           command-line orchestration (scans, sandwiches, reports)
"""

from .errors import (
    AccuracyError,
    DickmanError,
    DomainError,
    IntegrityError,
    ResourceError,
)

__version__ = "0.1.0"

__all__ = [
    "AccuracyError",
    "DickmanError",
    "DomainError",
    "IntegrityError",
    "ResourceError",
    "__version__",
]
