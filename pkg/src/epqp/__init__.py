"""Energy-constrained programmable quantum processors on truncated Fock spaces."""
from .errors import DomainError, NumericalQualityError, TruncationError
from .fock import FockSpace, DensityOperator, PureState
from .channels import (EnergyBudget, GaugeCovariantParams, GaussianUnitaryParams,
                       KrausChannel)
from .kernels import BACKEND

__all__ = [
    "BACKEND", "DensityOperator", "DomainError", "EnergyBudget", "FockSpace",
    "GaugeCovariantParams", "GaussianUnitaryParams", "KrausChannel",
    "NumericalQualityError", "PureState", "TruncationError",
]
__version__ = "0.1.0"
