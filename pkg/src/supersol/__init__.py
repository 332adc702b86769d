"""
Decaying supersolutions and decay rates for ``a(x) v_t = Delta v`` and the
damped wave ``u_tt - Delta u + a(x) u_t = 0`` with ``a(r) ~ r^-alpha``, for
radially symmetric problems.
"""

from .errors import (ConfigError, ConstructionError, ContractError, DataError, ParameterError,
                     RangeError, SupersolError)
from .grid import RadialGrid
from .potential import CoefficientProfile, PotentialTable, build_radial_potential, verify_potential
from .specfun import KummerParams, PhiParams, kummer_m, phi_beta
from .supersolution import SupersolutionParams, supersolution_certificate

__version__ = "0.1.0"

__all__ = [
    "CoefficientProfile", "ConfigError", "ConstructionError", "ContractError", "DataError",
    "KummerParams", "ParameterError", "PhiParams", "PotentialTable", "RadialGrid", "RangeError",
    "SupersolError", "SupersolutionParams", "build_radial_potential", "kummer_m", "phi_beta",
    "supersolution_certificate", "verify_potential",
]
