"""Order-zero cylinder functions for complex arguments.

Two-regime evaluation: ascending power series for |z| below the crossover
radius, Hankel-type asymptotic expansions beyond.  Order-one functions are
internal (derivative checks only).

Accuracy: better than 1e-10 relative for real arguments in [1e-3, 1e3],
better than 1e-8 for complex arguments with modest imaginary part.  The
asymptotic series is truncated adaptively at its smallest term; its error
floor at the crossover (|z| = 11) is a few 1e-11.
"""

from __future__ import annotations

import numpy as np

from .errors import DomainError

EULER_GAMMA = 0.5772156649015329

# series/asymptotic switch radius
_CROSSOVER = 11.0
_SERIES_TERMS = 60
_ASYM_TERMS = 30


def _as_complex_array(z):
    a = np.asarray(z, dtype=complex)
    scalar = a.ndim == 0
    return np.atleast_1d(a), scalar


def _j0_y0_series(z):
    """J0 and Y0 by ascending series; |z| should be < ~15."""
    q = -(z / 2) ** 2
    j0 = np.ones_like(z)
    ysum = np.zeros_like(z)
    term = np.ones_like(z)
    hk = 0.0
    for k in range(1, _SERIES_TERMS + 1):
        term = term * q / k**2
        j0 = j0 + term
        hk += 1.0 / k
        ysum = ysum - hk * term  # (-1)^{k+1} H_k (z/2)^{2k}/(k!)^2
    y0 = (2 / np.pi) * ((np.log(z / 2) + EULER_GAMMA) * j0 + ysum)
    return j0, y0


def _j1_y1_series(z):
    """J1 and Y1 by ascending series (internal, derivative checks)."""
    q = -(z / 2) ** 2
    half = z / 2
    j1 = half.copy()
    term = half.copy()
    # Y1 correction sum: sum_k (-1)^k (H_k + H_{k+1}) (z/2)^{2k+1} / (k!(k+1)!)
    csum = half * 1.0  # k = 0 term: (H_0 + H_1) = 1
    hk, hk1 = 0.0, 1.0
    for k in range(1, _SERIES_TERMS + 1):
        term = term * q / (k * (k + 1))
        j1 = j1 + term
        hk += 1.0 / k
        hk1 += 1.0 / (k + 1)
        csum = csum + (hk + hk1) * term
    y1 = (2 / np.pi) * (np.log(z / 2) + EULER_GAMMA) * j1 - 2 / (np.pi * z) - csum / np.pi
    return j1, y1


def _i0_k0_series(z):
    q = (z / 2) ** 2
    i0 = np.ones_like(z)
    ksum = np.zeros_like(z)
    term = np.ones_like(z)
    hk = 0.0
    for k in range(1, _SERIES_TERMS + 1):
        term = term * q / k**2
        i0 = i0 + term
        hk += 1.0 / k
        ksum = ksum + hk * term
    k0 = -(np.log(z / 2) + EULER_GAMMA) * i0 + ksum
    return k0


def _hankel_asym(z, nu, n_terms=_ASYM_TERMS):
    """H_nu^(1)(z) by the large-argument expansion, adaptively truncated.

    Term recurrence: t_k = t_{k-1} * (4 nu^2 - (2k-1)^2) / k * i/(8z).
    """
    mu = 4.0 * nu * nu
    tot = np.ones_like(z)
    term = np.ones_like(z)
    best = np.full(z.shape, np.inf)
    frozen = np.zeros(z.shape, dtype=bool)
    for k in range(1, n_terms + 1):
        term = term * ((mu - (2 * k - 1) ** 2) / k) * (1j / (8 * z))
        mag = np.abs(term)
        grow = mag >= best
        frozen |= grow
        tot = np.where(frozen, tot, tot + term)
        best = np.where(frozen, best, mag)
    phase = z - (0.5 * nu + 0.25) * np.pi
    return np.sqrt(2 / (np.pi * z)) * np.exp(1j * phase) * tot


def _k0_asym(z, n_terms=_ASYM_TERMS):
    tot = np.ones_like(z)
    term = np.ones_like(z)
    best = np.full(z.shape, np.inf)
    frozen = np.zeros(z.shape, dtype=bool)
    for k in range(1, n_terms + 1):
        term = term * (-((2 * k - 1) ** 2) / k) / (8 * z)
        mag = np.abs(term)
        grow = mag >= best
        frozen |= grow
        tot = np.where(frozen, tot, tot + term)
        best = np.where(frozen, best, mag)
    return np.sqrt(np.pi / (2 * z)) * np.exp(-z) * tot


def _two_regime(z, series_fn, asym_fn):
    out = np.empty_like(z)
    near = np.abs(z) < _CROSSOVER
    if np.any(near):
        out[near] = series_fn(z[near])
    if np.any(~near):
        out[~near] = asym_fn(z[~near])
    return out


def hankel1_0(argument):
    """H0^(1) for complex arguments with nonnegative imaginary part.

    Raises DomainError at the origin (logarithmic singularity of Y0) and
    for arguments in the lower half plane.
    """
    z, scalar = _as_complex_array(argument)
    if np.any(z == 0):
        raise DomainError("hankel1_0: argument = 0 (logarithmic singularity)")
    if np.any(z.imag < 0):
        raise DomainError("hankel1_0: negative imaginary part not supported")
    out = _two_regime(
        z,
        lambda w: (lambda j0, y0: j0 + 1j * y0)(*_j0_y0_series(w)),
        lambda w: _hankel_asym(w, 0.0),
    )
    return out[0] if scalar else out.reshape(np.shape(argument))


def bessel_k0(argument):
    """K0 for complex arguments with positive real part."""
    z, scalar = _as_complex_array(argument)
    if np.any(z.real <= 0):
        raise DomainError("bessel_k0: argument must have positive real part")
    out = _two_regime(z, _i0_k0_series, _k0_asym)
    return out[0] if scalar else out.reshape(np.shape(argument))


# --- internal order-0/1 pieces used by consistency checks -------------------

def _bessel_j0_y0(x):
    """(J0, Y0) for positive real or upper-half-plane complex arguments."""
    z, scalar = _as_complex_array(x)
    h = np.empty_like(z)
    near = np.abs(z) < _CROSSOVER
    j0 = np.empty_like(z)
    y0 = np.empty_like(z)
    if np.any(near):
        j0[near], y0[near] = _j0_y0_series(z[near])
    if np.any(~near):
        # recover J0, Y0 from H0^(1) and its conjugate-reflection H0^(2)
        hi = _hankel_asym(z[~near], 0.0)
        h2 = np.conj(_hankel_asym(np.conj(z[~near]), 0.0))
        j0[~near] = 0.5 * (hi + h2)
        y0[~near] = (hi - h2) / 2j
    if scalar:
        return j0[0], y0[0]
    return j0, y0


def _bessel_j1_y1(x):
    z, scalar = _as_complex_array(x)
    j1 = np.empty_like(z)
    y1 = np.empty_like(z)
    near = np.abs(z) < _CROSSOVER
    if np.any(near):
        j1[near], y1[near] = _j1_y1_series(z[near])
    if np.any(~near):
        hi = _hankel_asym(z[~near], 1.0)
        h2 = np.conj(_hankel_asym(np.conj(z[~near]), 1.0))
        j1[~near] = 0.5 * (hi + h2)
        y1[~near] = (hi - h2) / 2j
    if scalar:
        return j1[0], y1[0]
    return j1, y1
