"""Shared domain types.

Complex values are plain Python/NumPy complex numbers throughout; the
re/im pair is the universal value type and needs no wrapper class.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np


@dataclass(frozen=True)
class LatticeGeometry:
    """Pin spacings: ``s`` for a single grating, ``(d_x, d_y)`` for a lattice.

    ``gamma = d_y / d_x`` is the aspect ratio.  For single-grating work
    construct with :meth:`grating`; ``s`` then aliases ``d_x``.
    """

    d_x: float
    d_y: float

    def __post_init__(self):
        if self.d_x <= 0 or self.d_y <= 0:
            raise ValueError("lattice spacings must be positive")

    @classmethod
    def grating(cls, s: float) -> "LatticeGeometry":
        return cls(d_x=s, d_y=s)

    @property
    def s(self) -> float:
        return self.d_x

    @property
    def gamma(self) -> float:
        return self.d_y / self.d_x


@dataclass(frozen=True)
class IncidentWave:
    """Unit-amplitude plane wave: spectral parameter ``beta``, angle ``psi``.

    kappa_x = beta cos(psi), kappa_y = beta sin(psi); the invariant
    kappa_x^2 + kappa_y^2 = beta^2 holds by construction.
    """

    beta: float
    psi: float

    def __post_init__(self):
        if self.beta <= 0:
            raise ValueError("beta must be positive")

    @classmethod
    def from_kappa_y(cls, beta: float, kappa_y: float) -> "IncidentWave":
        """Wave with prescribed Bloch parameter along y (psi = arcsin(kappa_y/beta))."""
        if abs(kappa_y) > beta:
            raise ValueError("kappa_y must satisfy |kappa_y| <= beta")
        return cls(beta=beta, psi=math.asin(kappa_y / beta))

    @property
    def kappa_x(self) -> float:
        return self.beta * math.cos(self.psi)

    @property
    def kappa_y(self) -> float:
        return self.beta * math.sin(self.psi)

    def field(self, x, y):
        """Incident displacement e^{i beta (x cos psi + y sin psi)}."""
        return np.exp(1j * (self.kappa_x * np.asarray(x) + self.kappa_y * np.asarray(y)))


@dataclass
class CoefficientSequence:
    """Source intensities A_k attached to pin or grating abscissae.

    ``displacements`` optionally holds the free-plate values b_{-n}
    (n = 1.., at positions -n*spacing, left of the array).
    """

    values: np.ndarray
    spacing: float
    displacements: np.ndarray | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def positions(self) -> np.ndarray:
        return self.spacing * np.arange(len(self.values))

    def __len__(self) -> int:
        return len(self.values)


@dataclass
class FieldMap:
    """Sampled displacement fields on a rectangular grid.

    ``total = incident + scattered`` pointwise; values are normalized to a
    unit incident amplitude.
    """

    x: np.ndarray
    y: np.ndarray
    incident: np.ndarray
    scattered: np.ndarray

    @property
    def total(self) -> np.ndarray:
        return self.incident + self.scattered
