"""Dispersion analysis: diffraction orders, resonances, isofrequency
contours of the doubly quasi-periodic kernel, light-line projections,
finite-stack Bloch modes, and stationary-feature detection.

On the unit circle (z = e^{i kappa_x d_x}) the lattice kernel equals the
doubly quasi-periodic Green's function; away from light lines it is real,
so its zero set forms curves in the Brillouin zone.  The kernel is
evaluated in closed form: the column sum over gratings telescopes into
geometric sums order by order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from skimage import measure as _measure

from . import greens
from .types import IncidentWave, LatticeGeometry

_LIGHT_LINE_GUARD = 1e-9


@dataclass(frozen=True)
class SpectralOrder:
    p: int
    phi_p: complex
    propagating: bool


@dataclass
class IsoContour:
    """Zero-level polylines of the lattice kernel at fixed beta."""

    beta: float
    polylines: list
    residual: float
    geometry: LatticeGeometry

    @property
    def empty(self) -> bool:
        return len(self.polylines) == 0


@dataclass(frozen=True)
class StackProblem:
    """2M+1 vertical gratings with spacing d_x; Bloch parameter rule.

    kappa_y is either a fixed float or the string "sin" meaning
    kappa_y = beta sin(psi) with the problem's psi (default 0).
    """

    m_half: int
    geometry: LatticeGeometry
    beta_range: tuple
    beta_step: float = 1e-3
    kappa_y: float | str = 0.0
    psi: float = 0.0

    @property
    def size(self) -> int:
        return 2 * self.m_half + 1

    def kappa_y_at(self, beta: float) -> float:
        if isinstance(self.kappa_y, str):
            return beta * math.sin(self.psi)
        return float(self.kappa_y)


def spectral_orders(wave: IncidentWave, s: float, p_cap: int | None = None):
    """Diffraction orders cos(phi_p) = cos(psi) + 2 pi p/(s beta).

    Real phi_p marks a propagating order; otherwise the complex
    continuation of arccos is reported and the order flagged evanescent.
    """
    beta, psi = wave.beta, wave.psi
    if p_cap is None:
        p_cap = int(math.ceil(s * beta / math.pi)) + 2
    orders = []
    for p in range(-p_cap, p_cap + 1):
        c = math.cos(psi) + 2 * math.pi * p / (s * beta)
        if abs(c) <= 1:
            orders.append(SpectralOrder(p=p, phi_p=math.acos(c), propagating=True))
        else:
            orders.append(SpectralOrder(p=p, phi_p=complex(np.arccos(complex(c))), propagating=False))
    return orders


def shadow_rays(wave: IncidentWave, s: float):
    """Directions theta = phi_p(psi) of the propagating orders."""
    return [o.phi_p for o in spectral_orders(wave, s) if o.propagating]


def resonance_check(wave: IncidentWave, s: float, tol=1e-9):
    """Classify grating resonances: a diffracted direction at 0 (inward) or pi (outward).

    The p = 0 order is the incident direction itself and never counts.
    Returns (kind, p) with kind in {"none", "inward", "outward"}.
    """
    for o in spectral_orders(wave, s):
        if not o.propagating or o.p == 0:
            continue
        c = math.cos(wave.psi) + 2 * math.pi * o.p / (s * wave.beta)
        if abs(c + 1) < tol:
            return "outward", o.p
        if abs(c - 1) < tol:
            return "inward", o.p
    return "none", None


def _geom_sum(w):
    """sum_{j>=1} w^j = w/(1-w); callers guard |1-w|."""
    return w / (1.0 - w)


def lattice_kernel(geometry: LatticeGeometry, beta, kappa_x, kappa_y,
                   order_cap=24, tail_cap=2000):
    """Doubly quasi-periodic kernel on the unit circle z = e^{i kappa_x d_x}.

    Real away from light lines; its zeros are the Bloch dispersion points.
    kappa_x may be an array (fixed kappa_y row).  Orders |p| <= order_cap
    get exact geometric column sums; the remaining central terms (kappa_x
    independent) are summed to tail_cap with cubic decay.  Values within
    the light-line guard are returned as NaN.
    """
    d_x, d_y = geometry.d_x, geometry.d_y
    kx = np.atleast_1d(np.asarray(kappa_x, dtype=float))
    scalar = np.ndim(kappa_x) == 0

    _, kp, chi, tau = greens.spectral_terms(beta, kappa_y, d_y, tail_cap)
    central = np.sum(1.0 / chi + 1j / tau)

    sel = np.abs(np.arange(-tail_cap, tail_cap + 1)) <= order_cap
    chi_g, tau_g = chi[sel], tau[sel]
    f_chi = np.exp(1j * chi_g * d_x)          # |.| <= 1
    f_tau = np.exp(-tau_g * d_x)
    e_kx = np.exp(1j * kx * d_x)[:, None]
    out = np.full(kx.shape, central, dtype=complex)
    bad = np.zeros(kx.shape, dtype=bool)
    for sign in (+1, -1):
        ph = e_kx if sign > 0 else 1.0 / e_kx
        w_chi = f_chi[None, :] * ph
        w_tau = f_tau[None, :] * ph
        bad |= np.any(np.abs(1.0 - w_chi) < _LIGHT_LINE_GUARD, axis=1)
        w_chi = np.where(np.abs(1.0 - w_chi) < _LIGHT_LINE_GUARD, 0.5, w_chi)
        out = out + (_geom_sum(w_chi) / chi_g[None, :]).sum(axis=1)
        out = out + (1j * _geom_sum(w_tau) / tau_g[None, :]).sum(axis=1)
    out = (1j / (8 * beta**2)) * (2.0 / d_y) * out
    out[bad] = np.nan
    return out[0] if scalar else out


def _kernel_grid(geometry, beta, n_grid, order_cap=24, tail_cap=2000, window=None):
    if window is None:
        window = (-np.pi / geometry.d_x, np.pi / geometry.d_x,
                  -np.pi / geometry.d_y, np.pi / geometry.d_y)
    kx = np.linspace(window[0], window[1], n_grid)
    ky = np.linspace(window[2], window[3], n_grid)
    f = np.empty((n_grid, n_grid))
    for i, kyv in enumerate(ky):
        try:
            row = lattice_kernel(geometry, beta, kx, kyv, order_cap, tail_cap)
        except greens.WoodAnomalyError:
            row = np.full(kx.shape, np.nan, dtype=complex)
        f[i] = row.real
    return kx, ky, f


def isofrequency_scan(geometry: LatticeGeometry, beta: float, n_grid=400,
                      order_cap=24, residual_tol=1e-6, window=None) -> IsoContour:
    """Zero contours of the real on-circle kernel over the Brillouin zone.

    Crossings are taken from the sign structure of the sampled kernel
    (marching squares), filtered against light-line poles by a magnitude
    cap, then each vertex is polished by bisection along the kappa_x
    direction (falling back to kappa_y) until the kernel residual is below
    ``residual_tol`` times the local scale.  ``window`` restricts the scan
    to (kx0, kx1, ky0, ky1) for local refinement near features.
    """
    kx, ky, f = _kernel_grid(geometry, beta, n_grid, order_cap, window=window)
    scale = np.nanmedian(np.abs(f))
    cap = 60.0 * scale
    fm = np.where(np.abs(f) > cap, np.nan, f)
    raw = _measure.find_contours(fm, 0.0)
    dkx = kx[1] - kx[0]
    dky = ky[1] - ky[0]
    polylines = []
    worst = 0.0
    for arr in raw:
        pts = np.column_stack([kx[0] + arr[:, 1] * dkx, ky[0] + arr[:, 0] * dky])
        if len(pts) < 3:
            continue
        if len(pts) > 400:
            pts = pts[:: len(pts) // 400 + 1]
        polished = []
        for px, py in pts:
            res, (qx, qy) = _polish_vertex(geometry, beta, px, py, dkx, dky,
                                           order_cap, scale, residual_tol)
            if res is not None:
                polished.append((qx, qy, res))
                worst = max(worst, res)
        if len(polished) >= 3:
            polylines.append(np.asarray(polished))
    return IsoContour(beta=beta, polylines=polylines, residual=worst, geometry=geometry)


def _polish_vertex(geometry, beta, px, py, dkx, dky, order_cap, scale, tol):
    """1-D bisection along a grid axis to pin the kernel zero at a vertex."""
    for axis in (0, 1):
        h = (dkx if axis == 0 else dky)
        lo, hi = -0.75 * h, 0.75 * h

        def val(t):
            x = px + t if axis == 0 else px
            y = py if axis == 0 else py + t
            v = lattice_kernel(geometry, beta, x, y, order_cap)
            return np.real(v)

        flo, fhi = val(lo), val(hi)
        if np.isnan(flo) or np.isnan(fhi) or abs(flo) > 100 * scale or abs(fhi) > 100 * scale:
            continue
        if flo == 0.0:
            return 0.0, (px + (lo if axis == 0 else 0), py + (lo if axis else 0))
        if flo * fhi > 0:
            continue
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            fm = val(mid)
            if np.isnan(fm):
                break
            if abs(fm) <= tol * max(scale, 1e-300):
                lo = hi = mid
                break
            if flo * fm <= 0:
                hi, fhi = mid, fm
            else:
                lo, flo = mid, fm
        t = 0.5 * (lo + hi)
        r = abs(val(t))
        if r <= tol * max(scale, 1e-300) * 50:
            qx = px + t if axis == 0 else px
            qy = py if axis == 0 else py + t
            return r / max(scale, 1e-300), (qx, qy)
    return None, (px, py)


def light_line_projections(geometry: LatticeGeometry, beta: float, index_cap=3,
                           window_scale=1.0):
    """Radical-line segments of intersecting light circles, plus the circles.

    Circles: (kappa_x + 2 pi n/d_x)^2 + (kappa_y + 2 pi m/d_y)^2 = beta^2
    for |n|, |m| <= index_cap.  For every intersecting pair the projected
    locus is the segment of their radical line inside both circles,
    clipped to ``window_scale`` Brillouin zones (diagram overlays often
    span more than the first zone).

    Returns (segments, circles): segments as (2, 2) endpoint arrays,
    circles as (center_x, center_y, radius).
    """
    d_x, d_y = geometry.d_x, geometry.d_y
    centers = [(-2 * np.pi * n / d_x, -2 * np.pi * m / d_y)
               for n in range(-index_cap, index_cap + 1)
               for m in range(-index_cap, index_cap + 1)]
    circles = [(cx, cy, beta) for cx, cy in centers]
    bz = (window_scale * np.pi / d_x, window_scale * np.pi / d_y)
    segments = []
    for i in range(len(centers)):
        for k in range(i + 1, len(centers)):
            c1 = np.asarray(centers[i])
            c2 = np.asarray(centers[k])
            d = np.linalg.norm(c2 - c1)
            if d == 0 or d >= 2 * beta:
                continue
            mid = 0.5 * (c1 + c2)
            half = math.sqrt(beta**2 - (d / 2) ** 2)
            u = (c2 - c1) / d
            n_hat = np.array([-u[1], u[0]])
            p1 = mid + half * n_hat
            p2 = mid - half * n_hat
            seg = _clip_segment(p1, p2, bz)
            if seg is not None:
                segments.append(seg)
    return segments, circles


def _clip_segment(p1, p2, bz):
    """Clip the segment to the box [-bz_x, bz_x] x [-bz_y, bz_y]."""
    t0, t1 = 0.0, 1.0
    d = p2 - p1
    bounds = [(-bz[0], bz[0]), (-bz[1], bz[1])]
    for dim in (0, 1):
        lo, hi = bounds[dim]
        if d[dim] == 0:
            if p1[dim] < lo or p1[dim] > hi:
                return None
            continue
        ta = (lo - p1[dim]) / d[dim]
        tb = (hi - p1[dim]) / d[dim]
        ta, tb = min(ta, tb), max(ta, tb)
        t0, t1 = max(t0, ta), min(t1, tb)
        if t0 > t1:
            return None
    return np.array([p1 + t0 * d, p1 + t1 * d])


def stack_modes(problem: StackProblem, order_cap=200, root_drop=1e-3):
    """Bloch modes of a finite grating stack from Det(G) = 0.

    Assembles the (2M+1)^2 complex symmetric Toeplitz Green's matrix on a
    beta grid, tracks both |det| (for profile plots) and the smallest
    singular value (root indicator), refines bracketed minima by
    golden-section, and classifies a minimum as a root when the refined
    smallest singular value drops below ``root_drop`` times its median
    over the sweep.

    Returns a dict with keys beta, det, sigma_min, roots, det_maxima.
    """
    b0, b1 = problem.beta_range
    betas = np.arange(b0, b1 + 0.5 * problem.beta_step, problem.beta_step)
    size = problem.size
    offs = np.arange(size) * problem.geometry.d_x

    def matrix(beta):
        ky = problem.kappa_y_at(beta)
        row = np.empty(size, dtype=complex)
        row[0] = (1j / (8 * beta**2)) * greens.lattice_sum_accelerated(
            beta, ky, problem.geometry.d_y, order_cap)
        if size > 1:
            row[1:] = greens.grating_green_spectral(
                beta, offs[1:], ky, problem.geometry.d_y, order_cap)
        from scipy.linalg import toeplitz
        return toeplitz(row, row)  # complex symmetric

    dets = np.empty(betas.shape, dtype=complex)
    sig = np.empty(betas.shape)
    for i, b in enumerate(betas):
        try:
            g = matrix(b)
            dets[i] = np.linalg.det(g)
            sig[i] = np.linalg.svd(g, compute_uv=False)[-1]
        except greens.WoodAnomalyError:
            dets[i] = np.nan
            sig[i] = np.nan
    med = np.nanmedian(sig)

    def sig_at(b):
        try:
            return np.linalg.svd(matrix(b), compute_uv=False)[-1]
        except greens.WoodAnomalyError:
            return np.nan

    roots = []
    for i in range(1, len(betas) - 1):
        if np.isnan(sig[i - 1:i + 2]).any():
            continue
        if sig[i] < sig[i - 1] and sig[i] < sig[i + 1]:
            lo, hi = betas[i - 1], betas[i + 1]
            b_best, s_best = _golden(sig_at, lo, hi)
            if s_best < root_drop * med:
                roots.append((float(b_best), float(s_best)))

    adet = np.abs(dets)
    det_maxima = []
    for i in range(1, len(betas) - 1):
        if np.isnan(adet[i - 1:i + 2]).any():
            continue
        if adet[i] > adet[i - 1] and adet[i] > adet[i + 1]:
            det_maxima.append(float(_parabolic_peak(betas[i - 1:i + 2], adet[i - 1:i + 2])))
    return {
        "beta": betas, "det": dets, "sigma_min": sig,
        "roots": roots, "det_maxima": det_maxima,
        "kappa_y_rule": problem.kappa_y, "psi": problem.psi,
    }


def _golden(fn, lo, hi, iters=40):
    g = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    c = b - g * (b - a)
    d = a + g * (b - a)
    fc, fd = fn(c), fn(d)
    for _ in range(iters):
        if not np.isfinite(fc) or not np.isfinite(fd):
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = fn(d)
    x = 0.5 * (a + b)
    return x, fn(x)


def _parabolic_peak(xs, ys):
    x0, x1, x2 = xs
    y0, y1, y2 = ys
    denom = y0 - 2 * y1 + y2
    if denom == 0:
        return x1
    return x1 + 0.5 * (x1 - x0) * (y0 - y2) / denom


def symmetry_points(geometry: LatticeGeometry):
    return {
        "Gamma": (0.0, 0.0),
        "X": (np.pi / geometry.d_x, 0.0),
        "M": (np.pi / geometry.d_x, np.pi / geometry.d_y),
        "Y": (0.0, np.pi / geometry.d_y),
    }


def stationary_features(contours, neighborhood=0.45, collapse_distance=0.06,
                        axis_radius=0.6):
    """Inflexion and Dirac-like candidates from a beta sweep of contours.

    * Inflexion: the axis (kappa_x = 0 vs kappa_y = 0) crossed by the
      contour branch nearest Gamma flips between consecutive beta values.
    * Dirac-like: the distance from a symmetry point to the nearest
      contour vertex approaches zero; local minima and birth/death edges
      below ``collapse_distance`` count, with the candidate beta refined
      by extrapolating the approach slope to zero distance.

    Heuristic detectors: they report candidates, never certify a conical
    degeneracy.  Returns {"inflexions": [...], "dirac_candidates": [...]}.
    """
    contours = sorted(contours, key=lambda c: c.beta)
    if not contours:
        return {"inflexions": [], "dirac_candidates": []}
    geom = contours[0].geometry
    pts = symmetry_points(geom)
    betas = np.array([c.beta for c in contours])
    step = float(np.median(np.diff(betas))) if len(betas) > 1 else 0.0
    cell = max(2 * np.pi / geom.d_x, 2 * np.pi / geom.d_y) / 400.0

    # --- Dirac-like: distance to symmetry point dips to ~zero ---
    dirac = []
    for name, (qx, qy) in pts.items():
        dist = np.full(betas.shape, np.inf)
        for i, c in enumerate(contours):
            for poly in c.polylines:
                # fold vertices into the quadrant of the symmetry point
                vx, vy = np.abs(poly[:, 0]), np.abs(poly[:, 1])
                d = np.hypot(vx - abs(qx), vy - abs(qy))
                near = d[d < neighborhood]
                if near.size:
                    dist[i] = min(dist[i], float(np.min(near)))
        for i in range(len(betas)):
            if not np.isfinite(dist[i]) or dist[i] > collapse_distance:
                continue
            lo = dist[i - 1] if i > 0 else np.inf
            hi = dist[i + 1] if i + 1 < len(betas) else np.inf
            if dist[i] > lo or dist[i] > hi:
                continue
            # refine: extrapolate the steeper finite neighbor slope to zero
            b_hat = float(betas[i])
            if np.isfinite(hi) and hi > dist[i] and step > 0:
                slope = (hi - dist[i]) / step
                b_hat = float(betas[i]) - dist[i] / slope
            elif np.isfinite(lo) and lo > dist[i] and step > 0:
                slope = (lo - dist[i]) / step
                b_hat = float(betas[i]) + dist[i] / slope
            b_hat = float(np.clip(b_hat, betas[i] - 2 * step, betas[i] + 2 * step))
            dirac.append({"beta": b_hat, "beta_sample": float(betas[i]),
                          "point": name, "location": (float(qx), float(qy)),
                          "distance": float(dist[i])})
    # collapse runs of adjacent candidates at the same point to the deepest one
    dirac_out = []
    for cand in sorted(dirac, key=lambda c: (c["point"], c["beta_sample"])):
        prev = dirac_out[-1] if dirac_out else None
        if (prev is not None and prev["point"] == cand["point"]
                and cand["beta_sample"] - prev["beta_sample"] <= 2.5 * step + 1e-12):
            if cand["distance"] < prev["distance"]:
                dirac_out[-1] = cand
        else:
            dirac_out.append(cand)

    # --- inflexions at Gamma: which axis does the near-Gamma branch cross ---
    inflex = []
    crossings = []
    for c in contours:
        cross_x = cross_y = False
        for poly in c.polylines:
            v = poly[:, :2]
            near = np.hypot(v[:, 0], v[:, 1]) < axis_radius
            if not near.any():
                continue
            seg = v[near]
            if np.any(np.abs(seg[:, 0]) < 2 * cell) or (seg[:, 0].min() < 0 < seg[:, 0].max()):
                cross_x = True
            if np.any(np.abs(seg[:, 1]) < 2 * cell) or (seg[:, 1].min() < 0 < seg[:, 1].max()):
                cross_y = True
        crossings.append((cross_x, cross_y))
    for i in range(1, len(contours)):
        a, b = crossings[i - 1], crossings[i]
        if a != b and any(a) and any(b):
            inflex.append({"beta": float(0.5 * (betas[i - 1] + betas[i])),
                           "point": "Gamma", "location": (0.0, 0.0),
                           "from": a, "to": b})
    return {"inflexions": inflex, "dirac_candidates": dirac_out}
