"""Wiener-Hopf engine tests: kernel symmetry and identities, remainder
function, factorization, plus-function analyticity, inverse transforms,
decay-ratio estimation."""

from unittest import mock

import numpy as np
import pytest

from pinwave import greens, wienerhopf as wh
from pinwave.errors import ConvergenceError, NoPlateauError, WindingError
from pinwave.types import CoefficientSequence, IncidentWave, LatticeGeometry

import oracles

GEOM = LatticeGeometry.grating(1.0)


def make_spec(beta=3.1, delta_beta=0.005, n_terms=6000, **kw):
    return wh.KernelSpec(mode=wh.SINGLE_GRATING, geometry=GEOM, beta=beta,
                         delta_beta=delta_beta, n_terms=n_terms, **kw)


@pytest.fixture(scope="module")
def fk31():
    return wh.factorize(make_spec(), wh.FactorizationConfig())


def test_kernel_symmetry_in_annulus():
    spec = make_spec()
    rng = np.random.default_rng(3)
    r = np.exp(rng.uniform(-0.8, 0.8, 50) * 0.004)
    z = r * np.exp(1j * rng.uniform(0, 2 * np.pi, 50))
    k1 = wh.kernel_eval(spec, z)
    k2 = wh.kernel_eval(spec, 1.0 / z)
    assert np.max(np.abs(k1 - k2)) <= 1e-10 * np.max(np.abs(k1))


def test_kernel_on_circle_matches_accelerated_sum():
    # undamped kernel via remainder tail vs Eq-level accelerated grating sum
    spec = make_spec(beta=3.1, delta_beta=0.0, n_terms=2000)
    thetas = np.linspace(0.3, 2 * np.pi - 0.3, 20)
    z = np.exp(1j * thetas)
    vals = wh.kernel_eval_remainder(spec, z)
    refs = np.array([
        greens.lattice_sum_accelerated(3.1, th / 1.0, 1.0, 300) for th in thetas
    ]) * (1j / (8 * 3.1**2))
    assert np.max(np.abs(vals - refs) / np.abs(refs)) <= 1e-4


def test_kernel_annulus_guard():
    spec = make_spec()
    with pytest.raises(ConvergenceError):
        wh.kernel_eval(spec, 1.2)
    with pytest.raises(ConvergenceError):
        wh.kernel_eval(make_spec(delta_beta=0.0), 0.9)


def test_remainder_f_against_tail_sum():
    # small N keeps F(0.5) well above the double-precision floor
    for n_direct in (5, 15):
        val = complex(wh.remainder_f(0.5 + 0j, n_direct)[0])
        ref = oracles.remainder_tail_sum(0.5, n_direct)
        assert abs(val - ref) <= max(1e-10 * abs(ref), 5e-15)


def test_remainder_f_small_argument_bound():
    for w in (1e-3 + 0j, 0.01 * np.exp(0.7j)):
        n_direct = 5
        assert abs(wh.remainder_f(w, n_direct)) <= abs(w) ** (n_direct + 1)


def test_remainder_kernel_vs_heavily_damped_series():
    # N direct terms + analytic tail vs a 100N-term damped sum whose bias
    # is extrapolated away
    beta, s = 4.0, 1.0
    spec_r = make_spec(beta=beta, delta_beta=0.0, n_terms=2000)
    z = np.exp(1j * np.array([0.9, 2.4, 4.6]))
    val = wh.kernel_eval_remainder(spec_r, z, n_direct=2000)
    refs = []
    for th in (0.9, 2.4, 4.6):
        refs.append(oracles.richardson_grating_sum(beta, th / s, s, 5e-5, 200000))
    refs = np.asarray(refs) * (1j / (8 * beta**2))
    assert np.max(np.abs(val - refs)) <= 1e-5 * np.max(np.abs(refs))


def test_factorize_constant_kernel_stub():
    # n_terms = 0 leaves only the self term: K is constant i/(8 beta^2)
    spec = make_spec(n_terms=0)
    fk = wh.factorize(spec, wh.FactorizationConfig(n_intervals=256))
    c = 1j / (8 * spec.beta**2)
    zu = np.exp(1j * np.linspace(0.1, 6.0, 7))
    assert np.max(np.abs(fk.plus_at(0.97 * zu) - c)) <= 1e-12 * abs(c)
    assert np.max(np.abs(fk.minus_at(1.03 * zu) - 1.0)) <= 1e-12
    prod = fk.plus_at(zu) * fk.minus_at(zu)
    assert np.max(np.abs(prod - c)) <= 1e-12 * abs(c)


def test_factorize_winding_error():
    spec = make_spec(n_terms=0)
    with mock.patch.object(wh.FactorizedKernel, "_make_evaluator",
                           lambda self: (lambda z: np.asarray(z, complex))):
        with pytest.raises(WindingError):
            wh.factorize(spec, wh.FactorizationConfig(n_intervals=256))


def test_product_identity_default_and_elevated(fk31):
    zu = np.exp(1j * 2 * np.pi * (np.arange(256) + 0.5) / 256)
    prod = fk31.plus_at(zu) * fk31.minus_at(zu)
    ker = fk31.kernel_at(zu)
    assert np.max(np.abs(prod / ker - 1)) <= 1e-3
    fk4 = wh.factorize(make_spec(beta=4.0, n_terms=8000),
                       wh.FactorizationConfig(n_intervals=4800))
    prod4 = fk4.plus_at(zu) * fk4.minus_at(zu)
    assert np.max(np.abs(prod4 / fk4.kernel_at(zu) - 1)) <= 1e-4


def test_a_plus_pole_structure(fk31):
    # (1 - z e^{i beta s cos psi}) A+(z) stays bounded and continuous across
    # the pole.  At psi = 0 the pole shares its angle with a kernel branch
    # point, so K+ varies fast there; continuity is checked at a spacing
    # well below the regularization scale.
    wave = IncidentWave(beta=3.1, psi=0.0)
    phase = fk31.forcing_phase(wave)
    z_pole = 1.0 / phase
    eps = np.array([5e-6, 1e-6, -1e-6, -5e-6])
    z = z_pole * (1 - eps)
    reg = (1 - z * phase) * wh.a_plus(fk31, wave, z)
    assert np.all(np.isfinite(reg))
    assert np.max(np.abs(reg - reg.mean())) <= 0.02 * abs(reg.mean())
    # and A+ itself blows up like the simple pole it subtends
    near = wh.a_plus(fk31, wave, z_pole * (1 - 1e-6))
    far = wh.a_plus(fk31, wave, z_pole * (1 - 1e-2))
    assert abs(near) > 100 * abs(far)


def test_a_plus_cauchy_self_consistency(fk31):
    # A+ analytic inside: its values on |z|=0.5 reproduce from a Cauchy
    # integral over |z|=0.9
    wave = IncidentWave(beta=3.1, psi=0.0)
    n = 2048
    theta = 2 * np.pi * np.arange(n) / n
    ring = 0.9 * np.exp(1j * theta)
    samples = wh.a_plus(fk31, wave, ring)
    probes = 0.5 * np.exp(1j * np.linspace(0, 2 * np.pi, 9)[:-1])
    direct = wh.a_plus(fk31, wave, probes)
    cauchy = np.array([np.mean(samples * ring / (ring - z)) for z in probes])
    assert np.max(np.abs(cauchy - direct)) <= 1e-6 * np.max(np.abs(direct))


def test_coefficients_prefix_stability(fk31):
    wave = IncidentWave(beta=3.1, psi=0.0)
    a60 = wh.coefficients(fk31, wave, k_max=60).values
    a30 = wh.coefficients(fk31, wave, k_max=30).values
    assert np.max(np.abs(a60[:31] - a30)) <= 1e-12 * np.max(np.abs(a30))


def test_coefficients_amplification_guard(fk31):
    wave = IncidentWave(beta=3.1, psi=0.0)
    with pytest.raises(ConvergenceError):
        wh.coefficients(fk31, wave, k_max=6000)


def test_transform_consistency_clamped_points():
    # feeding A_k back through the boundary conditions reproduces b_n = 0
    # for n >= 0 within 1e-3 of the unit incident amplitude.  The m-sum is
    # truncated at k_max and completed with a geometric tail estimate
    # A_m ~ A_K lambda^(m-K) against the asymptotic Green's function.
    beta, s = 3.1, 1.0
    wave = IncidentWave(beta=beta, psi=0.0)
    k_max = 400
    coeffs = wh.solve_coefficients(make_spec(beta=beta), wave, k_max=k_max)
    a = coeffs.values
    lam, _ = wh.decay_ratio(coeffs)
    m = np.arange(len(a))
    m_tail = np.arange(k_max + 1, 2_000_000)
    for n in range(0, 8):
        g = greens.green_free(beta, np.abs(n - m) * s)
        head = np.sum(a * g)
        rho = (m_tail - n) * s
        g_tail = (1j / (8 * beta**2)) * np.sqrt(2 / (np.pi * beta * rho)) \
            * np.exp(1j * (beta * rho - np.pi / 4))
        tail = np.sum(a[k_max] * lam ** (m_tail - k_max) * g_tail)
        b_n = np.exp(1j * beta * n * s * np.cos(wave.psi)) + head + tail
        assert abs(b_n) <= 1e-3, (n, abs(b_n))


def test_displacements_match_foldy_field():
    from pinwave import foldy

    beta = 3.1
    wave = IncidentWave(beta=beta, psi=0.0)
    coeffs = wh.solve_coefficients(make_spec(beta=beta), wave, k_max=60,
                                   n_displacements=3)
    sc = foldy.ScattererSet.points(2000, 1.0)
    cf = foldy.solve(sc, wave)
    for n in (1, 2, 3):
        u = wave.field(-n, 0.0) + foldy.scattered_at(sc, wave, cf, -n, 0.0)
        assert abs(coeffs.displacements[n - 1] - u) <= 0.02 * abs(u)


def test_displacements_decay_at_infinity(fk31):
    # B-(z) -> 0 along a ray: reconstruct from b_{-n} at growing |z|
    wave = IncidentWave(beta=3.1, psi=0.0)
    b = wh.displacements(fk31, wave, n_max=40).values
    for radius in (2.0, 5.0, 20.0):
        z = radius * np.exp(0.7j)
        val = np.sum(b * z ** (-np.arange(1, 41)))
        assert abs(val) <= 2.5 / radius


def test_decay_ratio_geometric_exact():
    lam0 = 0.9 * np.exp(0.35j)
    seq = CoefficientSequence(values=2.0 * lam0 ** np.arange(150), spacing=1.0)
    lam, tag = wh.decay_ratio(seq)
    assert abs(lam - lam0) <= 1e-12
    assert tag == "localized"


def test_decay_ratio_propagating_tag():
    k = np.arange(400)
    seq = CoefficientSequence(values=np.exp(1.3j * k) * (1 + 0.05 * np.cos(0.21 * k)),
                              spacing=1.0)
    lam, tag = wh.decay_ratio(seq)
    assert tag == "propagating"
    assert abs(lam) >= 0.98


def test_decay_ratio_no_plateau():
    k = np.arange(200)
    seq = CoefficientSequence(values=np.exp(-0.001 * k**2) + 0j, spacing=1.0)
    with pytest.raises(NoPlateauError) as err:
        wh.decay_ratio(seq)
    assert err.value.ratios is not None


def test_regularization_modes_agree():
    # circle-radius (real beta, remainder tail) vs beta + i delta
    # (Richardson-extrapolated); both approximate the same exact solve
    beta = 4.0
    wave = IncidentWave(beta=beta, psi=np.pi / 4)
    cd = wh.solve_coefficients(make_spec(beta=beta), wave, k_max=31)
    spec_r = make_spec(beta=beta, delta_beta=0.0, n_terms=2000)
    fk_r = wh.factorize(spec_r, wh.FactorizationConfig.for_radius_mode())
    cr = wh.coefficients(fk_r, wave, k_max=31)
    scale = np.max(np.abs(cd.values))
    assert np.max(np.abs(np.abs(cd.values) - np.abs(cr.values))) <= 1e-4 * scale
