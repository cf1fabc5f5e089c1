"""Classical and quantum Fisher information, Cramér-Rao bounds and
skew-information correlation measures for finite-dimensional states."""

from . import classical, correlations, numkit, qfi, qfim, states
from .numkit import NumericalError, QestError, ValidationError

__version__ = "0.1.0"

__all__ = ["classical", "correlations", "numkit", "qfi", "qfim", "states",
           "QestError", "ValidationError", "NumericalError"]
