"""Discrete Wiener-Hopf engine.

Kernel assembly (z-transform of the inter-pin or inter-grating
propagator), multiplicative factorization K = K+ K- by Cauchy integrals
on circles straddling the unit circle, the plus-function A+(z) driven by
an incident plane wave, inverse z-transforms for the source intensities
A_k and the free displacements b_{-n}, and the far-field decay ratio.

Two regularizations are supported:

* ``damping`` (default): Bessel arguments are evaluated at
  beta_d = beta + i delta_beta, which moves the kernel branch points off
  the unit circle and makes every series absolutely convergent in an
  annulus around it.
* ``radius``: the kernel keeps the physical (real) beta; on the displaced
  circles the series is summed directly up to N terms and completed with
  the analytic remainder R(z) built from the large-argument Hankel form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import greens
from .errors import (
    ConvergenceError,
    NoPlateauError,
    WindingError,
    ZeroOnContourError,
)
from .types import CoefficientSequence, IncidentWave, LatticeGeometry

SINGLE_GRATING = "single_grating"
HALF_PLANE_LATTICE = "half_plane_lattice"


@dataclass(frozen=True)
class KernelSpec:
    """Defines the kernel K(z): geometry, spectral parameter, regularization.

    In single-grating mode the per-element propagator is the free-space
    Green's function at spacing s; in lattice mode it is the quasi-periodic
    grating Green's function at column separations j*d_x.
    """

    mode: str
    geometry: LatticeGeometry
    beta: float
    kappa_y: float = 0.0
    delta_beta: float = 0.005
    n_terms: int = 5000

    def __post_init__(self):
        if self.mode not in (SINGLE_GRATING, HALF_PLANE_LATTICE):
            raise ValueError(f"unknown kernel mode {self.mode!r}")
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        if self.delta_beta < 0:
            raise ValueError("delta_beta must be >= 0")

    @property
    def spacing(self) -> float:
        return self.geometry.d_x

    def element_coefficients(self, damped: bool = True) -> np.ndarray:
        """g_j for j = 1..n_terms, normalized so K = (i/8b^2)(sum g_j (z^j + z^-j) + g_0).

        g_0 = 1 in single-grating mode (self term); lattice columns carry
        their on-axis grating sum instead.
        """
        beta_d = self.beta + 1j * self.delta_beta if damped else self.beta
        j = np.arange(1, self.n_terms + 1)
        if self.mode == SINGLE_GRATING:
            return greens.h0_plus_k0(beta_d * self.spacing * j)
        gq = greens.grating_green_spectral(
            beta_d, j * self.spacing, self.kappa_y, self.geometry.d_y
        )
        return gq * (8 * self.beta**2) / 1j

    def self_coefficient(self, damped: bool = True) -> complex:
        beta_d = self.beta + 1j * self.delta_beta if damped else self.beta
        if self.mode == SINGLE_GRATING:
            return 1.0 + 0j
        return complex(greens.lattice_sum_accelerated(beta_d, self.kappa_y, self.geometry.d_y))


# The radius mode keeps the physical (real) beta, so the kernel branch
# points sit on the unit circle and its contours can hug it much more
# closely than the damping mode's; O(delta) regularization bias then
# demands a small offset and correspondingly dense sampling.
RADIUS_MODE_DELTA = 3.125e-4


@dataclass(frozen=True)
class FactorizationConfig:
    """Contour offset and quadrature panel count for the factorization.

    Circles C+/- have radii e^{+delta}/e^{-delta}.  Contour samples are
    taken on at least ~2 pi/delta points (2.25x that in radius mode,
    whose integrands carry branch-cut jumps) so the regularization scale
    is resolved regardless of n_intervals.
    """

    delta: float = 0.0025
    n_intervals: int = 1200
    mode: str = "damping"  # "damping" | "radius"

    def __post_init__(self):
        if not (0 < self.delta < 0.1):
            raise ValueError("delta must lie in (0, 0.1)")
        if self.n_intervals < 256 or self.n_intervals % 2:
            raise ValueError("n_intervals must be even and >= 256")
        if self.mode not in ("damping", "radius"):
            raise ValueError("mode must be 'damping' or 'radius'")

    @classmethod
    def for_radius_mode(cls, n_intervals=1200):
        return cls(delta=RADIUS_MODE_DELTA, n_intervals=n_intervals, mode="radius")

    @property
    def n_samples(self) -> int:
        density = 2.25 if self.mode == "radius" else 1.0
        n = max(self.n_intervals, int(math.ceil(density * 2 * np.pi / self.delta)))
        return n + (n % 2)


def _kernel_series_at(coeffs, self_coeff, beta, z):
    """K(z) from precomputed element coefficients; z is a 1-D complex array."""
    n = len(coeffs)
    j = np.arange(1, n + 1)
    out = np.empty(z.shape, dtype=complex)
    for lo in range(0, z.size, 128):
        sl = slice(lo, min(lo + 128, z.size))
        zp = np.exp(np.multiply.outer(np.log(z[sl]), j))
        out[sl] = (zp + 1.0 / zp) @ coeffs
    return (1j / (8 * beta**2)) * (out + self_coeff)


def kernel_eval(spec: KernelSpec, z, with_error=False):
    """Kernel K(z) by the (damped) element series inside the annulus.

    Requires |log|z|| < delta_beta * spacing when delta_beta > 0 so the
    geometric damping wins; with delta_beta = 0 only |z| = 1 is allowed
    (conditional convergence; use kernel_eval_remainder off the circle).
    Returns the value, or (value, truncation_error) when requested.
    """
    zarr = np.atleast_1d(np.asarray(z, dtype=complex))
    scalar = np.ndim(z) == 0
    u = np.abs(np.log(np.abs(zarr)))
    s = spec.spacing
    decay = spec.delta_beta * s - np.max(u)
    if spec.delta_beta > 0:
        if decay <= 0:
            raise ConvergenceError(
                "z outside the annulus of absolute convergence "
                f"(|log|z|| = {np.max(u):.3g} >= delta_beta*s = {spec.delta_beta * s:.3g})"
            )
    elif np.max(u) > 1e-12:
        raise ConvergenceError("delta_beta = 0 requires |z| = 1")
    coeffs = spec.element_coefficients(damped=spec.delta_beta > 0)
    vals = _kernel_series_at(coeffs, spec.self_coefficient(damped=spec.delta_beta > 0), spec.beta, zarr)
    if with_error:
        last = np.abs(coeffs[-1]) * np.exp(np.max(u) * spec.n_terms)
        rate = decay if spec.delta_beta > 0 else 0.5 / np.sqrt(spec.n_terms)
        err = last / max(rate, 1e-16) / (8 * spec.beta**2) if spec.delta_beta > 0 else rate
        vals = (vals[0] if scalar else vals, float(err))
        return vals
    return vals[0] if scalar else vals


def remainder_f(w, n_direct, n_quad=240):
    """F(w) = (2/pi) w^{N+1} int_0^inf e^{-t^2 (N+1)} / (1 - w e^{-t^2}) dt.

    Analytic tail of the Hankel part of the kernel series after N direct
    terms.  Gauss-Legendre on a truncated interval; the integrand decays
    like e^{-t^2 (N+1)}.
    """
    w = np.atleast_1d(np.asarray(w, dtype=complex))
    npow = n_direct + 1
    t_max = np.sqrt(40.0 / npow)
    nodes, weights = np.polynomial.legendre.leggauss(n_quad)
    t = 0.5 * t_max * (nodes + 1.0)
    wt = 0.5 * t_max * weights
    e = np.exp(-(t**2))
    denom = 1.0 - np.multiply.outer(w, e)
    if np.any(np.abs(denom) < 1e-12):
        raise ZeroOnContourError("remainder integrand denominator vanishes on the path")
    integ = (np.exp(-(t**2) * npow) / denom) @ wt
    return (2.0 / np.pi) * w**npow * integ


def kernel_eval_remainder(spec: KernelSpec, z, n_direct=2000):
    """Kernel at real beta: N direct terms plus the asymptotic remainder R(z).

    R(z) = e^{-i pi/4} sqrt(2/(beta s)) [F(z e^{i beta s}) + F(e^{i beta s}/z)].
    Lattice mode has no closed remainder; only single-grating specs accepted.
    """
    if spec.mode != SINGLE_GRATING:
        raise ValueError("remainder evaluation is defined for single-grating kernels")
    zarr = np.atleast_1d(np.asarray(z, dtype=complex))
    scalar = np.ndim(z) == 0
    beta, s = spec.beta, spec.spacing
    j = np.arange(1, n_direct + 1)
    cj = greens.h0_plus_k0(beta * s * j)
    vals = _kernel_series_at(cj, 1.0 + 0j, beta, zarr)
    ph = np.exp(1j * beta * s)
    r = np.exp(-1j * np.pi / 4) * np.sqrt(2 / (beta * s)) * (
        remainder_f(zarr * ph, n_direct) + remainder_f(ph / zarr, n_direct)
    )
    vals = vals + (1j / (8 * beta**2)) * r
    return vals[0] if scalar else vals


class FactorizedKernel:
    """K = K+ K- with K+ analytic inside C+ and K- analytic outside C-.

    Holds log-kernel samples on both circles (continuous branch, winding
    checked) and evaluates the factors by singularity-subtracted trapezoid
    Cauchy integrals.  Instances are immutable after construction and safe
    for concurrent reads.
    """

    def __init__(self, spec: KernelSpec, config: FactorizationConfig):
        self.spec = spec
        self.config = config
        n = config.n_samples
        theta = 2 * np.pi * np.arange(n) / n
        self._theta = theta
        self._rho_p = np.exp(config.delta) * np.exp(1j * theta)
        self._rho_m = np.exp(-config.delta) * np.exp(1j * theta)
        evaluate = self._make_evaluator()
        kp = evaluate(self._rho_p)
        km = evaluate(self._rho_m)
        lo = min(np.min(np.abs(kp)), np.min(np.abs(km)))
        scale = np.median(np.abs(kp))
        if lo < 1e-10 * scale:
            raise ZeroOnContourError(f"|K| fell to {lo:.2e} on a factorization circle")
        self._log_p, w_p = _log_samples(kp)
        self._log_m, w_m = _log_samples(km)
        if w_p != 0 or w_m != 0:
            raise WindingError(
                f"log K winding numbers ({w_p}, {w_m}) != 0 on C+/-", winding=(w_p, w_m)
            )
        self.winding_number = 0
        self._evaluate_kernel = evaluate

    def _make_evaluator(self):
        spec, config = self.spec, self.config
        if config.mode == "damping":
            coeffs = spec.element_coefficients(damped=True)
            self_c = spec.self_coefficient(damped=True)
            return lambda z: _kernel_series_at(coeffs, self_c, spec.beta, np.asarray(z, complex))
        return lambda z: kernel_eval_remainder(spec, np.asarray(z, complex), n_direct=spec.n_terms)

    # -- forcing phase: e^{i beta s cos psi}; the physical (undamped) wave --
    def forcing_phase(self, wave: IncidentWave) -> complex:
        return np.exp(1j * wave.beta * self.spec.spacing * np.cos(wave.psi))

    def _cauchy(self, log_samples, rho, z, inside):
        """exp(+-(1/2 pi i) oint log K / (rho - z) d rho) with subtraction.

        The contour integrand is regularized by subtracting the log-kernel
        value at the radial projection of z onto the contour, evaluated
        exactly; the Cauchy identity supplies the subtracted term in closed
        form (1 inside, 0 outside).
        """
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        r_c = np.abs(rho[0])
        zt = r_c * z / np.abs(z)
        lt = self._log_at(zt, rho, log_samples)
        acc = np.empty(z.shape, dtype=complex)
        for i, zz in enumerate(z.ravel()):
            acc.ravel()[i] = np.mean((log_samples - lt.ravel()[i]) * rho / (rho - zz))
        return (acc + lt) if inside else -acc

    def _log_at(self, zc, rho, log_samples):
        """log K at contour points, branch-aligned with the sample sheet."""
        v = self._evaluate_kernel(zc)
        n = len(log_samples)
        idx = np.round(np.angle(zc) % (2 * np.pi) / (2 * np.pi) * n).astype(int) % n
        raw = np.log(np.abs(v)) + 1j * np.angle(v)
        shift = np.round((log_samples.imag[idx] - raw.imag) / (2 * np.pi))
        return raw + 2j * np.pi * shift

    def plus_at(self, z):
        """K+(z) for z strictly inside C+."""
        z_arr = np.atleast_1d(np.asarray(z, dtype=complex))
        if np.any(np.abs(z_arr) >= np.exp(self.config.delta)):
            raise ValueError("K+ is defined inside C+")
        out = np.exp(self._cauchy(self._log_p, self._rho_p, z_arr, inside=True))
        return out[0] if np.ndim(z) == 0 else out

    def minus_at(self, z):
        """K-(z) for z strictly outside C-."""
        z_arr = np.atleast_1d(np.asarray(z, dtype=complex))
        if np.any(np.abs(z_arr) <= np.exp(-self.config.delta)):
            raise ValueError("K- is defined outside C-")
        out = np.exp(self._cauchy(self._log_m, self._rho_m, z_arr, inside=False))
        return out[0] if np.ndim(z) == 0 else out

    def kernel_at(self, z):
        """The kernel itself, via the mode's evaluator (annulus only)."""
        z_arr = np.atleast_1d(np.asarray(z, dtype=complex))
        out = self._evaluate_kernel(z_arr)
        return out[0] if np.ndim(z) == 0 else out


def _log_samples(samples):
    """Continuous-branch log along a closed contour and its winding number."""
    ang = np.angle(samples)
    ph = np.unwrap(np.concatenate([ang, ang[:1]]))
    winding = int(round((ph[-1] - ph[0]) / (2 * np.pi)))
    return np.log(np.abs(samples)) + 1j * ph[:-1], winding


def factorize(spec: KernelSpec, config: FactorizationConfig | None = None) -> FactorizedKernel:
    """Build the multiplicative factorization of the kernel."""
    return FactorizedKernel(spec, config or FactorizationConfig())


def a_plus(fk: FactorizedKernel, wave: IncidentWave, z):
    """A+(z) = -1 / (K+(z) K-(z_p) (1 - z e^{i beta s cos psi})), z_p = e^{-i beta s cos psi}.

    Near the forcing pole (|1 - z/z_p| < 1e-8) the returned value carries
    the simple-pole blowup; callers needing the regular part should use
    the pole-extracted inverse transform in :func:`coefficients`.
    """
    phase = fk.forcing_phase(wave)
    km_pole = fk.minus_at(1.0 / phase)
    z_arr = np.atleast_1d(np.asarray(z, dtype=complex))
    kp = fk.plus_at(z_arr)
    out = -1.0 / (kp * km_pole * (1.0 - z_arr * phase))
    return out[0] if np.ndim(z) == 0 else out


def coefficients(fk: FactorizedKernel, wave: IncidentWave, k_max=100,
                 n_quad=None) -> CoefficientSequence:
    """Source intensities A_k, k = 0..k_max, by inverse z-transform of A+.

    The integration circle is displaced inside to radius e^{-delta}; the
    radius compensation e^{k delta} is applied per coefficient.  The
    forcing pole is removed analytically (its inverse transform is a pure
    phase sequence), so the quadrature only sees the smooth remainder.
    """
    delta = fk.config.delta
    if k_max * delta > np.log(1e6):
        raise ConvergenceError(
            f"e^{{k_max delta}} amplification {np.exp(k_max * delta):.2e} exceeds 1e6"
        )
    n = n_quad or max(fk.config.n_intervals, 2048)
    phase = fk.forcing_phase(wave)
    z_pole = 1.0 / phase
    km_pole = fk.minus_at(z_pole)
    kp_pole = fk.plus_at(z_pole)  # |z_pole| = 1, strictly inside C+
    c_pole = -1.0 / (kp_pole * km_pole)

    theta = 2 * np.pi * np.arange(n) / n
    zi = np.exp(-delta) * np.exp(1j * theta)
    kp = fk.plus_at(zi)
    a_vals = -1.0 / (kp * km_pole * (1.0 - zi * phase))
    smooth = a_vals - c_pole / (1.0 - zi * phase)
    fhat = np.fft.fft(smooth) / n
    k = np.arange(k_max + 1)
    a_k = c_pole * phase**k + np.exp(k * delta) * fhat[: k_max + 1]
    return CoefficientSequence(
        values=a_k,
        spacing=fk.spec.spacing,
        diagnostics={"method": "wiener-hopf", "mode": fk.config.mode,
                     "delta": delta, "n_quad": n},
    )


def displacements(fk: FactorizedKernel, wave: IncidentWave, n_max=30,
                  n_quad=None) -> CoefficientSequence:
    """Free-plate displacements b_{-n}, n = 1..n_max, left of the array.

    B-(z) = -K-(z) / (K-(z_p) (1 - z e^{i beta s cos psi})), the minus
    side of the functional equation; its Laurent expansion outside the
    unit circle carries only negative powers.  Inverse transform on a
    circle of radius e^{+delta} with e^{n delta} compensation.
    """
    delta = fk.config.delta
    n = n_quad or max(fk.config.n_intervals, 2048)
    phase = fk.forcing_phase(wave)
    z_pole = 1.0 / phase
    km_pole = fk.minus_at(z_pole)
    theta = 2 * np.pi * np.arange(n) / n
    zo = np.exp(delta) * np.exp(1j * theta)
    km = fk.minus_at(zo)
    b_vals = -km / (km_pole * (1.0 - zo * phase))
    fhat = np.fft.fft(b_vals) / n
    ns = np.arange(1, n_max + 1)
    b_n = np.exp(ns * delta) * fhat[-n_max:][::-1]
    return CoefficientSequence(
        values=b_n,
        spacing=fk.spec.spacing,
        diagnostics={"method": "wiener-hopf-displacements", "indices": "b_{-n}, n=1.."},
    )


def _auto_terms(delta_beta, s, delta_c, e_folds=14.0, cap=200_000):
    """Series length so the damped tail is ~e^-e_folds on the outer contour."""
    rate = delta_beta * s - delta_c
    if rate <= 0:
        raise ConvergenceError("delta_beta * s must exceed the contour offset")
    return int(min(cap, math.ceil(e_folds / rate)))


def solve_coefficients(spec: KernelSpec, wave: IncidentWave, k_max=100,
                       config: FactorizationConfig | None = None,
                       richardson=True, n_displacements=0) -> CoefficientSequence:
    """A_k (and optionally b_{-n}) with the damping bias extrapolated away.

    The kernel damping biases the coefficients linearly in delta_beta;
    solving at delta_beta and delta_beta/2 and extrapolating removes it.
    With richardson=False a single factorization at spec.delta_beta is
    used as-is.
    """
    config = config or FactorizationConfig()
    if not richardson:
        fk = factorize(spec, config)
        out = coefficients(fk, wave, k_max)
        if n_displacements:
            out.displacements = displacements(fk, wave, n_displacements).values
        return out
    s = spec.spacing
    stages = (3.0 * config.delta / s, 1.5 * config.delta / s)
    seq_vals, disp_vals = [], []
    for db in stages:
        sp = replace(spec, delta_beta=db,
                     n_terms=max(spec.n_terms, _auto_terms(db, s, config.delta)))
        fk = factorize(sp, config)
        seq_vals.append(coefficients(fk, wave, k_max).values)
        if n_displacements:
            disp_vals.append(displacements(fk, wave, n_displacements).values)
    out = CoefficientSequence(
        values=2.0 * seq_vals[1] - seq_vals[0],
        spacing=s,
        diagnostics={"method": "wiener-hopf", "richardson": True,
                     "delta": config.delta, "delta_beta_stages": stages},
    )
    if n_displacements:
        out.displacements = 2.0 * disp_vals[1] - disp_vals[0]
    return out


def decay_ratio(coeffs, k_probe=None, tol_band=0.02, skip=None):
    """Far-field ratio lambda ~ A_{k+1}/A_k with a plateau detector.

    Returns (lambda, tag) with tag in {"propagating", "localized"}
    (|lambda| >= 1 - tol_band counts as propagating; |lambda| is clamped
    to 1 + 1e-6).  A clean geometric sequence is detected by a plateau of
    the smoothed step ratios; oscillating sequences (beating between
    modes) fall back to log-envelope fits over two half-windows, which
    must agree.  Raises NoPlateauError otherwise, with the ratio sequence
    attached.
    """
    a = np.asarray(coeffs.values if hasattr(coeffs, "values") else coeffs)
    k_probe = len(a) - 1 if k_probe is None else min(k_probe, len(a) - 1)
    a = a[: k_probe + 1]
    mag = np.abs(a)
    amax = mag.max()
    if amax == 0:
        raise NoPlateauError("all coefficients vanish", ratios=mag)
    usable = np.nonzero(mag > 1e-10 * amax)[0]
    k_end = usable[-1]
    skip = max(5, int(0.05 * k_end)) if skip is None else skip
    if k_end - skip < 20:
        raise NoPlateauError("too few usable coefficients", ratios=mag)
    seg = a[skip:k_end + 1]
    ratios = seg[1:] / seg[:-1]
    rmod = np.abs(ratios)
    win = 10

    sm = np.exp(np.convolve(np.log(rmod), np.ones(win) / win, mode="valid"))
    tail = sm[-win:]
    if np.max(np.abs(np.diff(tail))) / max(tail[-1], 1e-300) < 1e-3:
        lam = tail[-1] * np.exp(1j * np.angle(np.mean(ratios[-win:] / rmod[-win:])))
    else:
        # beating: fit the log envelope on two overlapping halves
        logm = np.log(mag[skip:k_end + 1])
        ks = np.arange(len(logm), dtype=float)
        half = len(logm) // 2
        if half < 10:
            raise NoPlateauError("oscillating ratios, sequence too short", ratios=ratios)
        s1 = np.polyfit(ks[:2 * half * 2 // 3], logm[:2 * half * 2 // 3], 1)[0]
        s2 = np.polyfit(ks[half // 2:], logm[half // 2:], 1)[0]
        l1, l2 = np.exp(s1), np.exp(s2)
        if abs(l1 - l2) > 0.05 * max(l1, l2):
            raise NoPlateauError("no stable plateau or envelope", ratios=ratios)
        lam = 0.5 * (l1 + l2) * np.exp(1j * np.angle(np.mean(ratios)))
    if abs(lam) > 1 + 1e-6:
        lam = lam / abs(lam) * (1 + 1e-6)
    tag = "propagating" if abs(lam) >= 1 - tol_band else "localized"
    return lam, tag
