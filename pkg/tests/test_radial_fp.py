import math

import numpy as np
import pytest

from shellstretch.covariance import LimitParams, NonNormalizableError, StationaryDensity
from shellstretch.radial_fp import (
    CFLViolation,
    RadialField,
    RadialGrid,
    default_grid,
    flux_operator,
    fp_distance_to_stationary,
    fp_radial_checkpoints,
    fp_radial_evolve,
    gaussian_field,
    make_grid,
    stationary_cell_averages,
    stationary_field,
    stationary_ode_solve,
)
from shellstretch.shell_noise import InvalidParameterError

P04 = LimitParams.from_kT_beta(0.4)


def test_grid_structure():
    g = make_grid(40.0, 2.0, 256)
    assert g.n_cells == 256 and g.edges[0] == 0.0 and g.rho_max == 40.0
    w = np.diff(g.edges)
    assert np.all(w > 0) and np.all(g.volumes > 0)
    assert math.isclose(g.volumes.sum(), math.pi * 40.0**2, rel_tol=1e-12)
    lin = g.edges[g.edges <= 2.0 + 1e-12]
    assert np.allclose(np.diff(lin), np.diff(lin)[0])
    ratio = w[1:] / w[:-1]
    assert ratio.max() < 1.2
    with pytest.raises(InvalidParameterError):
        RadialGrid(np.array([0.0, 1.0, 1.0]))


@pytest.mark.parametrize("kb", [0.0, 0.2, 0.5, 0.9])
def test_stationary_ode_matches_closed_form(kb):
    p = LimitParams(0.0, 1.0, 1.0) if kb == 0 else LimitParams.from_kT_beta(kb)
    grid = default_grid(p, 1024)
    sol = stationary_ode_solve(p, grid, 1.0)
    exact = StationaryDensity(p)(grid.centers)
    # the Gaussian underflows near rho_max; compare wherever it is a normal double
    ok = exact > np.finfo(float).tiny
    assert ok.sum() > grid.n_cells // 2
    assert np.max(np.abs(sol.values[ok] / exact[ok] - 1.0)) <= 1e-6


def test_stationary_ode_zero_start():
    grid = default_grid(P04, 64)
    assert np.all(stationary_ode_solve(P04, grid, 0.0).values == 0.0)


def test_mass_conservation_per_step_and_long_run():
    grid = default_grid(P04, 256)
    f = gaussian_field(grid, 0.3)
    op = flux_operator(grid, P04)
    dt = op.max_explicit_dt()
    g = f.values.copy()
    m0 = f.mass
    for _ in range(20):
        g = fp_radial_evolve(RadialField(grid, g), P04, dt, dt).values
        assert abs(RadialField(grid, g).mass - m0) <= 1e-12 * m0
    out = fp_radial_evolve(f, P04, dt, 1e4 * dt)
    assert abs(out.mass - m0) <= 1e-8 * m0
    assert out.values.min() >= -1e-12


def test_closed_form_is_discrete_fixed_point():
    grid = default_grid(P04, 1024)
    st = stationary_field(P04, grid)
    op = flux_operator(grid, P04)
    rate = math.fsum(np.abs(op.apply(st.values)) * grid.volumes)
    assert rate <= 1e-8
    later = fp_radial_evolve(st, P04, 0.05, 1.0, scheme="implicit")
    assert np.max(np.abs(later.values / st.values - 1.0)) <= 1e-8


def test_gaussian_variance_relaxes_at_rate_two_over_beta():
    # a = 0: the second moment obeys m' = -(2/beta)(m - 2 sigma^2 beta)
    p = LimitParams(0.0, 1.5, 0.8)
    grid = default_grid(p, 1024)
    f0 = gaussian_field(grid, 0.2)
    times = [0.25, 0.5, 1.0, 2.0]
    fields = fp_radial_checkpoints(f0, p, 2e-3, times, scheme="implicit")
    eq = 2 * p.sigma**2 * p.beta
    for f in fields:
        predicted = eq + (f0.second_moment - eq) * math.exp(-2 * f.time / p.beta)
        assert abs(f.second_moment / predicted - 1) < 2e-3
    # shape stays Gaussian: compare with the exact cell averages at the predicted variance
    last = fields[-1]
    var = predicted / 2
    assert math.fsum(np.abs(last.values - gaussian_field(grid, var).values) * grid.volumes) < 2e-3


def test_distance_non_increasing_and_converges():
    grid = default_grid(P04, 1024)
    f0 = gaussian_field(grid, 0.5)
    fields = fp_radial_checkpoints(f0, P04, 1e-2, [1, 2, 5, 10, 20], scheme="implicit")
    d = [fp_distance_to_stationary(f0, P04)] + [fp_distance_to_stationary(f, P04) for f in fields]
    assert all(b <= a + 1e-12 for a, b in zip(d, d[1:]))
    assert d[-1] < 0.02


def test_explicit_and_implicit_agree():
    grid = default_grid(P04, 256)
    f0 = gaussian_field(grid, 0.5)
    dt = flux_operator(grid, P04).max_explicit_dt()
    ex = fp_radial_evolve(f0, P04, dt, 0.5, scheme="explicit")
    im = fp_radial_evolve(f0, P04, dt, 0.5, scheme="implicit")
    assert math.fsum(np.abs(ex.values - im.values) * grid.volumes) < 1e-4


def test_cfl_violation_suggests_step():
    grid = default_grid(P04, 256)
    f0 = gaussian_field(grid, 0.5)
    with pytest.raises(CFLViolation) as info:
        fp_radial_evolve(f0, P04, 1.0, 1.0, scheme="explicit")
    ok = info.value.suggested_dt
    assert 0 < ok < 1.0
    fp_radial_evolve(f0, P04, ok, 10 * ok, scheme="explicit")


def test_distance_of_stationary_is_small_and_errors():
    grid = default_grid(P04, 1024)
    assert fp_distance_to_stationary(stationary_cell_averages(P04, grid), P04) == 0.0
    assert fp_distance_to_stationary(stationary_field(P04, grid), P04) < 1e-4
    with pytest.raises(NonNormalizableError):
        fp_distance_to_stationary(stationary_field(P04, grid), LimitParams.from_kT_beta(1.2))
    with pytest.raises(InvalidParameterError):
        flux_operator(grid, LimitParams(1.0, 1.0, 0.0))
    with pytest.raises(InvalidParameterError):
        fp_radial_checkpoints(gaussian_field(grid, 1.0), P04, 0.1, [1.0], scheme="leapfrog")
