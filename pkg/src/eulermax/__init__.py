"""Monte Carlo laboratory for maxima of random Euler products on short intervals."""

__version__ = "0.1.0"

from .errors import (
    ConstructionError,
    EulermaxError,
    NumericalError,
    ParameterError,
)

__all__ = [
    "ConstructionError",
    "EulermaxError",
    "NumericalError",
    "ParameterError",
    "__version__",
]
