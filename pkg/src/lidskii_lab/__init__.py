"""Spectral toolkit for sectorial non-selfadjoint operators and their root-vector series."""

from .functions import OperatorFunctionSpec, from_config, identity, log_composite, power
from .jordan import JordanChain, RootSystem, biorthogonal_system, jordan_decompose
from .operators import SectorSpec, kyfan_suite, sector_angle, sector_check
from .schatten import SingularSequence, convergence_exponent, schatten_norm
from .summation import abel_lidskii_sum, bracketing_plan, hm_coefficients

__version__ = "0.1.0"

__all__ = [
    "OperatorFunctionSpec", "from_config", "identity", "log_composite", "power",
    "JordanChain", "RootSystem", "biorthogonal_system", "jordan_decompose",
    "SectorSpec", "kyfan_suite", "sector_angle", "sector_check",
    "SingularSequence", "convergence_exponent", "schatten_norm",
    "abel_lidskii_sum", "bracketing_plan", "hm_coefficients",
]
