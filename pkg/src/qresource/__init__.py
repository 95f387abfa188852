"""Numerics for quantum resource theories.

Divergences, free-state families, resource monotones, composite hypothesis
testing rates and a classical varentropy construction, all in bits.
"""

from .errors import NumericalFailure, UnsupportedFamily, UnsupportedInstance, ValidationError

__version__ = "0.1.0"

__all__ = [
    "NumericalFailure",
    "UnsupportedFamily",
    "UnsupportedInstance",
    "ValidationError",
    "__version__",
]
