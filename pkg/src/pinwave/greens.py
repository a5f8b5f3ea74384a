"""Biharmonic Green's functions and quasi-periodic grating sums.

The free-space Green's function of the pinned Kirchhoff plate is

    g(rho) = (i / 8 beta^2) (H0^(1)(beta rho) + (2i/pi) K0(beta rho)),

bounded at the source with limit i/(8 beta^2).  Grating sums of g are
evaluated either directly (with damping beta -> beta + i delta for
absolute convergence) or through their spectral, cubically convergent
plane-wave representation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special as _sp

from . import specfun
from .errors import ConvergenceError, WoodAnomalyError

# K0(x) < 1e-300 beyond ~700; skip evaluation entirely past this
_K0_CUTOFF = 650.0

WOOD_GUARD = 1e-8


def h0_plus_k0(w):
    """H0^(1)(w) + (2i/pi) K0(w), the bounded point-source combination.

    Fast real-argument path via cephes (j0/y0/k0); complex arguments go
    through the in-house series/asymptotic engine.
    """
    w = np.asarray(w)
    if np.isrealobj(w) or np.all(w.imag == 0):
        x = w.real.astype(float)
        h = _sp.j0(x) + 1j * _sp.y0(x)
        k = np.where(x < _K0_CUTOFF, _sp.k0(np.where(x < _K0_CUTOFF, x, 1.0)), 0.0)
        return h + (2j / np.pi) * k
    z = w.astype(complex)
    small = np.abs(z) < _K0_CUTOFF
    k = np.zeros_like(z)
    if np.any(small):
        k[small] = specfun.bessel_k0(z[small])
    return specfun.hankel1_0(z) + (2j / np.pi) * k


def green_free(beta, rho):
    """Free-space biharmonic Green's function; continuous value i/(8 beta^2) at rho = 0."""
    rho = np.asarray(rho, dtype=float)
    scalar = rho.ndim == 0
    rho = np.atleast_1d(rho)
    if np.any(rho < 0):
        raise ValueError("rho must be nonnegative")
    out = np.empty(rho.shape, dtype=complex)
    at0 = rho == 0
    out[at0] = 1.0
    if np.any(~at0):
        out[~at0] = h0_plus_k0(beta * rho[~at0])
    out *= 1j / (8 * beta**2)
    return out[0] if scalar else out


@dataclass(frozen=True)
class GratingSumTerms:
    """Spectral ingredients of a grating sum at order p."""

    p: int
    kappa_p: float
    chi_p: complex
    tau_p: float
    propagating: bool


def spectral_terms(beta, kappa, s, order_cap):
    """kappa_p, chi_p, tau_p arrays for orders |p| <= order_cap.

    chi_p is real for propagating orders and positive imaginary for
    evanescent ones; tau_p = sqrt(beta^2 + kappa_p^2) > |beta|.
    Raises WoodAnomalyError when some order is passing off (real beta).
    """
    p = np.arange(-order_cap, order_cap + 1)
    kp = kappa + 2 * np.pi * p / s
    a = np.asarray(beta, dtype=complex) ** 2 - kp**2
    if np.isrealobj(np.asarray(beta)) or np.imag(beta) == 0:
        b2 = float(np.real(beta)) ** 2
        gap = np.abs(b2 - kp**2)
        if np.min(gap) < WOOD_GUARD * b2:
            j = int(np.argmin(gap))
            raise WoodAnomalyError(
                f"order p={p[j]} is passing off (kappa_p^2 ~ beta^2)",
                order=int(p[j]), beta=float(np.real(beta)), kappa_p=float(kp[j]),
            )
        a = a.real + 0j  # ensure +0 imaginary part so sqrt lands on +i gamma
    chi = np.sqrt(a)
    tau = np.sqrt(np.asarray(beta, dtype=complex) ** 2 + kp**2)
    return p, kp, chi, tau


def lattice_sum_terms(beta, kappa, s, order_cap=200):
    p, kp, chi, tau = spectral_terms(beta, kappa, s, order_cap)
    prop = np.abs(chi.imag) < 1e-14
    return [
        GratingSumTerms(int(pi), float(ki), complex(ci), float(ti.real), bool(pr))
        for pi, ki, ci, ti, pr in zip(p, kp, chi, tau, prop)
    ]


def lattice_sum_accelerated(beta, kappa, s, order_cap=200):
    """On-axis grating sum S0^H + (2i/pi) S0^K + 1 in spectral form.

    Equals (2/s) sum_p (1/chi_p - 1/chihat_p) with chihat_p = i tau_p;
    the evanescent tail of the summand decays cubically in p.  Multiply
    by i/(8 beta^2) for the grating Green's function at the source; this
    also equals the on-circle kernel value times 8 beta^2 / i.
    """
    _, _, chi, tau = spectral_terms(beta, kappa, s, order_cap)
    return (2.0 / s) * np.sum(1.0 / chi + 1j / tau)


def grating_green(beta, x, kappa_y, d_y, n_terms=5000, delta=0.005, tol=1e-4):
    """Quasi-periodic grating Green's function by direct (damped) summation.

    Sums (i/8 beta^2) [H0 + (2i/pi)K0](beta_d r_j) e^{i kappa_y j d_y} over
    |j| <= n_terms with r_j = sqrt((j d_y)^2 + x^2); the j = 0 term at
    x = 0 is the analytic limit i/(8 beta^2).  With delta = 0 the sum is
    only conditionally convergent; a 1/sqrt(N) tail bound is enforced.
    """
    if n_terms < 0:
        raise ValueError("n_terms must be >= 0")
    if delta == 0 and n_terms > 0:
        # |tail| <~ 2 sqrt(2/(pi beta d_y N)) / gap, gap = min |1 - e^{i(kappa_y +- beta) d_y}|
        gaps = [abs(1 - np.exp(1j * (kappa_y + sgn * beta) * d_y)) for sgn in (+1, -1)]
        gap = min(gaps)
        if gap < 1e-12:
            raise ConvergenceError("undamped grating sum at a resonant phase")
        bound = 2 * np.sqrt(2 / (np.pi * beta * d_y * n_terms)) / gap
        if bound > tol:
            raise ConvergenceError(
                f"undamped truncation remainder bound {bound:.2e} exceeds tol {tol:.2e}"
            )
    beta_d = beta + 1j * delta
    total = 1.0 + 0j if x == 0 else complex(h0_plus_k0(beta_d * abs(x)))
    if n_terms > 0:
        j = np.arange(1, n_terms + 1)
        r = np.sqrt((j * d_y) ** 2 + x**2)
        vals = h0_plus_k0(beta_d * r)
        ph = np.exp(1j * kappa_y * j * d_y)
        total = total + np.sum(vals * (ph + 1.0 / ph))
    return (1j / (8 * beta**2)) * total


def rayleigh_field(beta, kappa, s, x, y, order_cap=200):
    """Grating field as a sum of plane-wave (Rayleigh) orders.

    (i/8b^2)(2/s) sum_p e^{i kappa_p x} [e^{i chi_p |y|}/chi_p
                                         + i e^{-tau_p |y|}/tau_p].

    The grating lies along x with pitch s; |y| is the transverse offset.
    Valid for any |y| >= 0 (cubically convergent on the axis,
    exponentially off it).
    """
    _, kp, chi, tau = spectral_terms(beta, kappa, s, order_cap)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    scalar = x.ndim == 0 and y.ndim == 0
    x, y = np.atleast_1d(x), np.atleast_1d(y)
    ay = np.abs(y)
    ex = np.exp(1j * np.multiply.outer(x, kp))
    hterm = np.exp(1j * np.multiply.outer(ay, chi)) / chi
    kterm = 1j * np.exp(-np.minimum(np.multiply.outer(ay, tau.real), 700.0)
                        - 1j * np.multiply.outer(ay, tau.imag)) / tau
    out = (1j / (8 * beta**2)) * (2.0 / s) * np.sum(ex * (hterm + kterm), axis=-1)
    return out[0] if scalar else out


def grating_green_spectral(beta, x, kappa_y, d_y, order_cap=200):
    """Grating Green's function at transverse offsets ``x`` (vectorized).

    Spectral counterpart of :func:`grating_green` for a grating along y
    with pitch d_y and Bloch parameter kappa_y, evaluated on the axis
    y = 0 of the grating at perpendicular distance |x|.
    """
    return rayleigh_field(beta, kappa_y, d_y, 0.0 * np.asarray(x), x, order_cap)
