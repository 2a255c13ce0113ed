"""
Domain exceptions shared by all engines
"""
from typing import Optional


class ProductionSystemError(Exception):
    """Base class for every domain error raised by the simulator"""


class ParseError(ProductionSystemError):
    """Malformed system definition or export file"""

    def __init__(self, message: str, line_number: Optional[int] = None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class NoMatch(ProductionSystemError):
    """Rule precondition absent from the working memory"""


class NotReversible(ProductionSystemError):
    """Two rules share an action string"""


class OutputNotBlank(ProductionSystemError):
    """Copy target tape already holds written cells"""


class InverseNoMatch(ProductionSystemError):
    """Inverted rule does not match during the backward phase"""


class PhaseError(ProductionSystemError):
    """Reversible machine operation invoked in the wrong phase"""


class NotNormalized(ProductionSystemError):
    """Stochastic control distribution does not sum to one"""


class NotDeterministic(ProductionSystemError):
    """Transition function yields more than one outcome"""


class DimensionMismatch(ProductionSystemError):
    """Vector and operator sizes disagree"""


class TooLarge(ProductionSystemError):
    """Requested dense object exceeds the configured guard"""


class EncodingOverflow(ProductionSystemError):
    """State set does not fit the register width"""


class DecodeFailure(ProductionSystemError):
    """Basis code does not correspond to a known state"""


class NormalizationError(ProductionSystemError):
    """Statevector norm drifted away from one"""
