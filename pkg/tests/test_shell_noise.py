import math
from fractions import Fraction

import numpy as np
import pytest

from shellstretch.shell_noise import (
    InvalidParameterError,
    Phase,
    alpha_N,
    covariance_Q,
    enumerate_shell,
    grad_sigma_r_eval,
    noise_covariance,
    quadrant,
    sigma_eval,
    stretching_covariance_sum,
)


def brute_force_shell(N):
    return sorted(
        (k1, k2)
        for k1 in range(-2 * N, 2 * N + 1)
        for k2 in range(-2 * N, 2 * N + 1)
        if N * N <= k1 * k1 + k2 * k2 <= 4 * N * N
    )


@pytest.mark.parametrize("N", [1, 2, 3, 5, 8, 13])
def test_enumeration_matches_brute_force(N):
    model = enumerate_shell(N, 1.0)
    assert sorted(map(tuple, model.k.tolist())) == brute_force_shell(N)
    assert len(set(map(tuple, model.k.tolist()))) == len(model)


def test_first_shell():
    model = enumerate_shell(1, 1.0)
    assert len(model) == 12
    assert {int(s) for s in (model.k**2).sum(axis=1)} == {1, 2, 4}
    theta = dict(zip(map(tuple, model.k.tolist()), model.theta))
    assert theta[(1, 1)] == 0.5


def test_zero_intensity():
    model = enumerate_shell(1, 0.0)
    assert len(model) == 12 and np.all(model.theta == 0.0)
    assert alpha_N(model) == 0.0


@pytest.mark.parametrize("N,a", [(0, 1.0), (-1, 1.0), (1, -0.5), (1.5, 1.0), (1, float("nan"))])
def test_invalid_parameters(N, a):
    with pytest.raises(InvalidParameterError):
        enumerate_shell(N, a)


def test_quadrants_partition_lattice():
    # every nonzero k lies in exactly one quadrant and -k lies in the opposite one
    opposite = {"++": "--", "--": "++", "-+": "+-", "+-": "-+"}
    for k1 in range(-128, 129, 3):
        for k2 in range(-128, 129, 7):
            if k1 == 0 and k2 == 0:
                continue
            q = quadrant(k1, k2)
            assert quadrant(-k1, -k2) == opposite[q]
    with pytest.raises(InvalidParameterError):
        quadrant(0, 0)


def test_phase_assignment_pairs_each_mode_with_its_mirror():
    model = enumerate_shell(6, 1.0)
    index = {tuple(k): i for i, k in enumerate(model.k.tolist())}
    for i, (k1, k2) in enumerate(model.k.tolist()):
        j = index[(-k1, -k2)]
        assert model.is_cos[i] != model.is_cos[j]
        assert model.theta[i] == model.theta[j]
    assert model.modes[0].phase in (Phase.COS, Phase.SIN)


def test_sigma_examples():
    model = enumerate_shell(1, 1.0)
    i = model.k.tolist().index([1, 0])
    assert np.allclose(sigma_eval(model, (0.0, 0.0))[i], [0.0, 1.0], atol=1e-15)
    assert np.allclose(sigma_eval(model, (math.pi / 2, 0.0))[i], [0.0, 0.0], atol=1e-15)
    assert np.allclose(grad_sigma_r_eval(model, (math.pi / 2, 0.0), (1.0, 0.0))[i], [0.0, -1.0], atol=1e-15)
    assert np.all(grad_sigma_r_eval(model, (0.3, 1.1), (0.0, 0.0)) == 0.0)


def test_modes_are_divergence_free_and_gradient_consistent():
    model = enumerate_shell(3, 1.0)
    rng = np.random.default_rng(4)
    h = 1e-5
    for _ in range(5):
        x = rng.uniform(0, 2 * math.pi, 2)
        r = rng.normal(size=2)
        e1, e2 = np.array([h, 0.0]), np.array([0.0, h])
        d1 = (sigma_eval(model, x + e1) - sigma_eval(model, x - e1)) / (2 * h)
        d2 = (sigma_eval(model, x + e2) - sigma_eval(model, x - e2)) / (2 * h)
        div = d1[:, 0] + d2[:, 1]
        assert np.max(np.abs(div)) < 1e-8
        jac_r = d1 * r[0] + d2 * r[1]
        assert np.allclose(jac_r, grad_sigma_r_eval(model, x, r), atol=1e-7)


def test_alpha_first_shell_exact():
    assert Fraction(alpha_N(enumerate_shell(1, 1.0))).limit_denominator(1000) == Fraction(21, 32)
    assert alpha_N(enumerate_shell(1, 2.0)) == 4 * 21 / 32


def test_alpha_decays_like_inverse_square():
    # alpha_N * N^2 approaches 3 pi a^2 / 32 (shell area 3 pi N^2 / 4 times a^2 / (2 N^4) averaged)
    vals = [alpha_N(enumerate_shell(N, 1.0)) * N**2 for N in (16, 32, 64)]
    assert abs(vals[-1] - 3 * math.pi / 32) < 0.01
    assert abs(vals[-1] - 3 * math.pi / 32) < abs(vals[0] - 3 * math.pi / 32) + 1e-3


def test_stretching_sum_first_shell():
    S = stretching_covariance_sum(enumerate_shell(1, 1.0), (1.0, 0.0))
    assert np.allclose(S, [[0.25, 0.0], [0.0, 1.5]], atol=1e-15)
    assert np.all(stretching_covariance_sum(enumerate_shell(1, 1.0), (0.0, 0.0)) == 0.0)


def test_stretching_sum_equals_pointwise_sum_anywhere():
    model = enumerate_shell(4, 1.3)
    r = np.array([0.4, -1.1])
    S = stretching_covariance_sum(model, r)
    for x in [(0.0, 0.0), (1.0, 2.0), (5.5, 0.2)]:
        v = grad_sigma_r_eval(model, x, r)
        assert np.allclose(v.T @ v, S, rtol=1e-12, atol=1e-14)


def test_stretching_sum_homogeneous_of_degree_two():
    model = enumerate_shell(5, 1.0)
    r = np.array([0.3, 0.8])
    assert np.allclose(stretching_covariance_sum(model, 2.5 * r), 6.25 * stretching_covariance_sum(model, r), rtol=1e-13)


def test_spatial_covariance_homogeneous_mirror_and_isotropic():
    model = enumerate_shell(5, 1.0)
    x, y = np.array([0.7, 2.1]), np.array([4.0, 1.3])
    assert np.allclose(noise_covariance(model, x, y), covariance_Q(model, x - y), atol=1e-13)
    z = np.array([0.9, -0.4])
    assert np.array_equal(covariance_Q(model, z), covariance_Q(model, -z))
    # quarter-turn symmetry of the lattice: Q(Rz) = R Q(z) R^T
    rot = np.array([[0.0, -1.0], [1.0, 0.0]])
    assert np.allclose(covariance_Q(model, rot @ z), rot @ covariance_Q(model, z) @ rot.T, atol=1e-13)
    Q0 = covariance_Q(model, (0.0, 0.0))
    assert np.allclose(Q0, Q0[0, 0] * np.eye(2), atol=1e-14)
    # Q(0) = 2 alpha_N I, the Ito-Stratonovich corrector of the X equation
    assert math.isclose(Q0[0, 0], 2 * alpha_N(model), rel_tol=1e-12)
