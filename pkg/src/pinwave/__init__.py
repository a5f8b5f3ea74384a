"""Flexural-wave scattering by semi-infinite pin gratings and half-plane
lattices in thin elastic plates: exact discrete Wiener-Hopf solutions,
truncated Foldy multiple scattering, and the dispersion analysis tying
the two to Bloch waves of the doubly periodic medium.
"""

__version__ = "0.1.0"

from .types import CoefficientSequence, FieldMap, IncidentWave, LatticeGeometry
from .errors import (
    ConvergenceError,
    DomainError,
    IllConditionedWarning,
    NoPlateauError,
    PinwaveError,
    WindingError,
    WoodAnomalyError,
    ZeroOnContourError,
)

__all__ = [
    "CoefficientSequence",
    "FieldMap",
    "IncidentWave",
    "LatticeGeometry",
    "ConvergenceError",
    "DomainError",
    "IllConditionedWarning",
    "NoPlateauError",
    "PinwaveError",
    "WindingError",
    "WoodAnomalyError",
    "ZeroOnContourError",
    "__version__",
]
