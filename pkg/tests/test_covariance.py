import math

import numpy as np
import pytest

from shellstretch.covariance import (
    LimitParams,
    NonNormalizableError,
    StationaryDensity,
    analytic_A,
    analytic_A_perp_form,
    analytic_Q,
    appendix_I,
    appendix_I_quadrature,
    crossover_radius,
    isotropic_fixed_point_trace,
    q_prefactor,
    sample_radius,
    stationary_density,
    tail_exponent,
    turbulent_kT,
    unnormalized_mass,
    unnormalized_mass_quadrature,
    zero_flux_residual,
)
from shellstretch.shell_noise import InvalidParameterError

KT1 = math.pi * math.log(2) / 8


def test_kT_value():
    assert math.isclose(turbulent_kT(1.0), 0.2721982612879502, rel_tol=1e-14)
    assert math.isclose(turbulent_kT(2.0), 4 * KT1, rel_tol=1e-14)


def test_A_examples_and_forms():
    assert np.allclose(analytic_A((1.0, 0.0), 1.0), KT1 * np.diag([1.0, 3.0]), rtol=1e-14)
    assert np.all(analytic_A((0.0, 0.0), 1.0) == 0.0)
    rng = np.random.default_rng(2)
    r = rng.normal(size=(50, 2))
    assert np.allclose(analytic_A(r, 1.7), analytic_A_perp_form(r, 1.7), rtol=1e-13, atol=1e-15)


def test_A_eigenpairs():
    r = np.array([0.6, -1.3])
    rp = np.array([-r[1], r[0]])
    A = analytic_A(r, 1.0)
    n2 = r @ r
    assert np.allclose(A @ r, KT1 * n2 * r, rtol=1e-13)
    assert np.allclose(A @ rp, 3 * KT1 * n2 * rp, rtol=1e-13)


def test_A_rotation_equivariant():
    r = np.array([0.8, 0.1])
    for phi in (0.3, 1.9, 4.0):
        c, s = math.cos(phi), math.sin(phi)
        rot = np.array([[c, -s], [s, c]])
        assert np.allclose(analytic_A(rot @ r, 1.0), rot @ analytic_A(r, 1.0) @ rot.T, atol=1e-14)


def test_A_rows_divergence_free():
    h = 1e-4
    for r in ([0.5, 0.2], [-1.0, 2.0]):
        r = np.array(r)
        div = np.zeros(2)
        for j in range(2):
            e = np.zeros(2)
            e[j] = h
            div += (analytic_A(r + e, 1.0)[:, j] - analytic_A(r - e, 1.0)[:, j]) / (2 * h)
        assert np.max(np.abs(div)) < 1e-9


def test_Q_examples_and_square_root():
    c = math.sqrt(math.pi * math.log(2)) / (2 * math.sqrt(2))
    assert math.isclose(q_prefactor(1.0), c, rel_tol=1e-15)
    assert np.allclose(analytic_Q((1.0, 0.0), 1.0), np.diag([c, math.sqrt(3) * c]), rtol=1e-14)
    assert np.all(analytic_Q((0.0, 0.0), 1.0) == 0.0)
    rng = np.random.default_rng(3)
    for r in rng.normal(size=(20, 2)) * 3:
        Q = analytic_Q(r, 1.0)
        assert np.allclose(Q, Q.T)
        assert np.min(np.linalg.eigvalsh(Q)) >= 0
        A = analytic_A(r, 1.0)
        assert np.linalg.norm(Q @ Q - A) <= 1e-12 * np.linalg.norm(A)


def test_angular_integral():
    assert np.allclose(appendix_I((1.0, 0.0)), math.pi / 8 * np.diag([1.0, 3.0]), rtol=0, atol=1e-15)
    assert np.all(appendix_I((0.0, 0.0)) == 0.0)
    for r in ([1.0, 1.0], [0.3, -2.0]):
        assert np.allclose(appendix_I(r), appendix_I_quadrature(r), rtol=0, atol=1e-10)


def test_tail_exponent_examples():
    assert math.isclose(tail_exponent(LimitParams(1.0, 1.0, 1.0)), 7.3479, rel_tol=1e-4)
    assert math.isclose(tail_exponent(LimitParams(1.0, 2.0, 1.0)), tail_exponent(LimitParams(1.0, 1.0, 1.0)) / 2, rel_tol=1e-14)
    assert math.isclose(tail_exponent(LimitParams.from_kT_beta(0.4)), 5.0, rel_tol=1e-13)
    assert tail_exponent(LimitParams(0.0, 1.0, 1.0)) == math.inf
    ps = [tail_exponent(LimitParams(a, 1.0, 1.0)) for a in (0.5, 1.0, 2.0)]
    assert ps[0] > ps[1] > ps[2]


@pytest.mark.parametrize("kw", [dict(a=-1, beta=1, sigma=1), dict(a=1, beta=0, sigma=1), dict(a=1, beta=1, sigma=-1), dict(a=math.inf, beta=1, sigma=1)])
def test_invalid_limit_params(kw):
    with pytest.raises(InvalidParameterError):
        LimitParams(**kw)


def test_stationary_density_shape():
    p = LimitParams(1.0, 1.0, 1.3)
    sd = StationaryDensity(p, g0=2.0)
    assert sd(0.0) == 2.0
    assert math.isclose(sd.C * p.sigma ** (-tail_exponent(p)), 2.0, rel_tol=1e-14)
    rho = np.linspace(0, 20, 200)
    assert np.all(np.diff(sd(rho)) < 0)
    slope = (math.log(sd(1e4)) - math.log(sd(1e3))) / math.log(10)
    assert abs(slope / -tail_exponent(p) - 1) < 0.01
    with pytest.raises(InvalidParameterError):
        stationary_density(-1.0, sd)


def test_stationary_density_closed_form_half():
    p = LimitParams.from_kT_beta(0.5)
    sd = StationaryDensity(p)
    rho = np.array([0.5, 1.0, 3.0])
    # exponent 1/(k_T beta) = 2 in the bracket, so g ~ rho^-4 at large rho
    assert np.allclose(sd(rho), (1 + p.kT_turb / 2 * rho**2) ** -2, rtol=1e-13)
    assert math.isclose(sd(1e6) * 1e24, (p.kT_turb / 2) ** -2, rel_tol=1e-6)


def test_gaussian_when_no_noise():
    p = LimitParams(0.0, 2.0, 0.7)
    rho = np.linspace(0, 5, 30)
    assert np.allclose(StationaryDensity(p)(rho), np.exp(-rho**2 / (2 * 0.49 * 2.0)), rtol=1e-14)


def test_zero_flux_identity():
    for p in (LimitParams(1.0, 1.0, 1.0), LimitParams.from_kT_beta(0.4), LimitParams(0.0, 1.0, 1.0), LimitParams(2.0, 3.0, 0.5)):
        rho = np.geomspace(1e-3, 1e4, 300)
        assert np.max(zero_flux_residual(rho, p)) <= 1e-10


@pytest.mark.parametrize("p", [LimitParams(1.0, 1.0, 1.0), LimitParams.from_kT_beta(0.4), LimitParams.from_kT_beta(0.9, 2.0, 0.5), LimitParams(0.0, 1.0, 2.0)])
def test_normalization_matches_quadrature(p):
    assert math.isclose(unnormalized_mass(p), unnormalized_mass_quadrature(p), rel_tol=1e-9)
    sd = StationaryDensity(p, normalized=True)
    assert math.isclose(float(sd.radial_mass(0.0, np.inf)), 1.0, rel_tol=1e-12)


def test_non_normalizable():
    p = LimitParams.from_kT_beta(1.0)
    with pytest.raises(NonNormalizableError):
        StationaryDensity(p, normalized=True)
    StationaryDensity(p)  # unnormalised form is still available


def test_fixed_point_trace_matches_second_moment_quadrature():
    from scipy import integrate

    for kb in (0.2, 0.4):
        p = LimitParams.from_kT_beta(kb, beta=1.5, sigma=0.8)
        sd = StationaryDensity(p, normalized=True)
        f = lambda x: 2 * math.pi * x**3 * sd(x)
        split = crossover_radius(p)
        m2 = integrate.quad(f, 0, split, epsabs=1e-12)[0] + integrate.quad(f, split, np.inf, epsabs=1e-12, limit=200)[0]
        assert math.isclose(m2, isotropic_fixed_point_trace(p), rel_tol=1e-6)


def test_radius_sampler_matches_survival():
    p = LimitParams.from_kT_beta(0.4)
    rho = sample_radius(p, 200_000, np.random.default_rng(0))
    sd = StationaryDensity(p, normalized=True)
    for level in (0.5, 1.0, 3.0, 10.0):
        expected = float(sd.radial_mass(level, np.inf))
        se = math.sqrt(expected * (1 - expected) / rho.size)
        assert abs(np.mean(rho > level) - expected) < 4 * se + 1e-12
