"""Closed-form objects of the N -> infinity limit.

Stretching covariance A(r) = k_T (3|r|^2 I - 2 r r^T), its square root Q(r),
the angular integral I(r), and the rotation-invariant stationary density
g(rho) = C (sigma^2 + k_T rho^2 / 2)^(-1/(k_T beta)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .shell_noise import InvalidParameterError

LOG2 = math.log(2.0)


class NonNormalizableError(ValueError):
    """The stationary density has infinite mass (k_T beta >= 1)."""


def turbulent_kT(a: float) -> float:
    """k_T = pi log(2) a^2 / 8."""
    return math.pi * LOG2 / 8.0 * a * a


@dataclass(frozen=True)
class LimitParams:
    a: float
    beta: float
    sigma: float

    def __post_init__(self):
        if not (self.a >= 0 and math.isfinite(self.a)):
            raise InvalidParameterError(f"a must be finite and >= 0, got {self.a!r}")
        if not (self.beta > 0 and math.isfinite(self.beta)):
            raise InvalidParameterError(f"beta must be finite and > 0, got {self.beta!r}")
        if not (self.sigma >= 0 and math.isfinite(self.sigma)):
            raise InvalidParameterError(f"sigma must be finite and >= 0, got {self.sigma!r}")

    @classmethod
    def from_kT_beta(cls, kT_beta: float, beta: float = 1.0, sigma: float = 1.0) -> "LimitParams":
        """Parameters with a prescribed product k_T * beta."""
        a = math.sqrt(8.0 * kT_beta / (math.pi * LOG2 * beta))
        return cls(a=a, beta=beta, sigma=sigma)

    @property
    def kT_turb(self) -> float:
        return turbulent_kT(self.a)

    @property
    def kT_thermal(self) -> float:
        """Thermal kT = sigma^2 beta (not to be confused with k_T)."""
        return self.sigma**2 * self.beta

    @property
    def exponent(self) -> float:
        return tail_exponent(self)


def _as_r(r) -> np.ndarray:
    return np.asarray(r, dtype=float)


def analytic_A(r, a: float) -> np.ndarray:
    """A(r) = k_T (3|r|^2 I - 2 r r^T); batched over leading axes of ``r``."""
    r = _as_r(r)
    kT = turbulent_kT(a)
    rr = np.einsum("...i,...j->...ij", r, r)
    r2 = np.einsum("...i,...i->...", r, r)
    return kT * (3.0 * r2[..., None, None] * np.eye(2) - 2.0 * rr)


def analytic_A_perp_form(r, a: float) -> np.ndarray:
    """Second closed form k_T (|r|^2 I + 2 r_perp r_perp^T)."""
    r = _as_r(r)
    rp = np.stack([-r[..., 1], r[..., 0]], axis=-1)
    r2 = np.einsum("...i,...i->...", r, r)
    return turbulent_kT(a) * (r2[..., None, None] * np.eye(2) + 2.0 * np.einsum("...i,...j->...ij", rp, rp))


def q_prefactor(a: float) -> float:
    """a sqrt(pi log 2) / (2 sqrt 2), the scale of Q."""
    return a * math.sqrt(math.pi * LOG2) / (2.0 * math.sqrt(2.0))


def analytic_Q(r, a: float) -> np.ndarray:
    """Symmetric PSD square root of A(r); Q(0) = 0 by continuity."""
    r = _as_r(r)
    norm = np.sqrt(np.einsum("...i,...i->...", r, r))
    safe = np.where(norm > 0, norm, 1.0)
    u = r / safe[..., None]
    up = np.stack([-u[..., 1], u[..., 0]], axis=-1)
    m = np.einsum("...i,...j->...ij", u, u) + math.sqrt(3.0) * np.einsum("...i,...j->...ij", up, up)
    return q_prefactor(a) * norm[..., None, None] * m


def appendix_I(r) -> np.ndarray:
    """(pi/8) [[3|r|^2 - 2 r1^2, -2 r1 r2], [-2 r1 r2, 3|r|^2 - 2 r2^2]]."""
    r1, r2 = (float(v) for v in r)
    n2 = r1 * r1 + r2 * r2
    return (math.pi / 8.0) * np.array(
        [[3.0 * n2 - 2.0 * r1 * r1, -2.0 * r1 * r2], [-2.0 * r1 * r2, 3.0 * n2 - 2.0 * r2 * r2]]
    )


def _angular_integrand(phi: float, r1: float, r2: float, i: int, j: int) -> float:
    c, s = math.cos(phi), math.sin(phi)
    proj = (r1 * c + r2 * s) ** 2
    m = ((s * s, -s * c), (-s * c, c * c))
    return proj * m[i][j]


def appendix_I_quadrature(r, epsabs: float = 1e-13, epsrel: float = 1e-13) -> np.ndarray:
    """Adaptive quadrature of the angular integral over (0, pi/2] u (3pi/2, 2pi]."""
    r1, r2 = (float(v) for v in r)
    out = np.empty((2, 2))
    for i in range(2):
        for j in range(2):
            total = 0.0
            for lo, hi in ((0.0, 0.5 * math.pi), (1.5 * math.pi, 2.0 * math.pi)):
                val, _ = integrate.quad(_angular_integrand, lo, hi, args=(r1, r2, i, j), epsabs=epsabs, epsrel=epsrel)
                total += val
            out[i, j] = total
    return out


def tail_exponent(params: LimitParams) -> float:
    """Power p = 2/(k_T beta) of the stationary density tail (inf if a = 0)."""
    kT = params.kT_turb
    if kT == 0.0:
        return math.inf
    return 2.0 / (kT * params.beta)


@dataclass(frozen=True)
class StationaryDensity:
    """Rotation-invariant stationary solution, parametrised by its value at 0.

    With ``normalized=True`` the value at the origin is chosen so that
    2 pi int_0^inf g(rho) rho d rho = 1, which needs k_T beta < 1.
    """

    params: LimitParams
    g0: float = 1.0
    normalized: bool = False

    def __post_init__(self):
        if self.params.sigma <= 0:
            raise InvalidParameterError("stationary density needs sigma > 0")
        if self.normalized:
            object.__setattr__(self, "g0", 1.0 / unnormalized_mass(self.params))
        elif not self.g0 >= 0:
            raise InvalidParameterError(f"g0 must be >= 0, got {self.g0!r}")

    @property
    def C(self) -> float:
        """Prefactor C = g0 sigma^(2/(k_T beta)); inf-free only for k_T > 0."""
        p = tail_exponent(self.params)
        return self.g0 * self.params.sigma**p

    def __call__(self, rho):
        return stationary_density(rho, self)

    def log_derivative(self, rho):
        """d/d rho of log g."""
        p = self.params
        rho = np.asarray(rho, dtype=float)
        return -rho / (p.beta * (p.sigma**2 + 0.5 * p.kT_turb * rho * rho))

    def radial_mass(self, lo, hi):
        """Exact 2 pi int_lo^hi g(rho) rho d rho (vectorised over lo, hi)."""
        p = self.params
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        s2, kT = p.sigma**2, p.kT_turb
        if kT == 0.0:
            F = lambda x: -2.0 * math.pi * s2 * p.beta * np.exp(-x * x / (2.0 * s2 * p.beta))
        else:
            m = 1.0 / (kT * p.beta)
            # integral of (1 + kT x^2 / (2 s2))^(-m) rho d rho, times g0
            if m == 1.0:
                F = lambda x: 2.0 * math.pi * (s2 / kT) * np.log1p(0.5 * kT * x * x / s2)
            else:
                F = lambda x: 2.0 * math.pi * (s2 / kT) * np.exp((1.0 - m) * np.log1p(0.5 * kT * x * x / s2)) / (1.0 - m)
        return self.g0 * (F(hi) - F(lo))


def _shape(rho, params: LimitParams):
    """g(rho)/g(0), evaluated stably for small k_T."""
    rho = np.asarray(rho, dtype=float)
    s2, kT, beta = params.sigma**2, params.kT_turb, params.beta
    if kT == 0.0:
        return np.exp(-rho * rho / (2.0 * s2 * beta))
    return np.exp(-np.log1p(0.5 * kT * rho * rho / s2) / (kT * beta))


def stationary_density(rho, sd: StationaryDensity):
    """g(rho) = g0 (1 + k_T rho^2/(2 sigma^2))^(-1/(k_T beta)), Gaussian if a = 0."""
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < 0):
        raise InvalidParameterError("rho must be >= 0")
    out = sd.g0 * _shape(rho, sd.params)
    return float(out) if out.ndim == 0 else out


def unnormalized_mass(params: LimitParams) -> float:
    """2 pi int_0^inf (g/g0) rho d rho in closed form."""
    kT, s2, beta = params.kT_turb, params.sigma**2, params.beta
    if kT * beta >= 1.0:
        raise NonNormalizableError(f"k_T beta = {kT * beta:.6g} >= 1: stationary density has infinite mass")
    if kT == 0.0:
        return 2.0 * math.pi * s2 * beta
    m = 1.0 / (kT * beta)
    return 2.0 * math.pi * s2 / (kT * (m - 1.0))


def crossover_radius(params: LimitParams) -> float:
    """rho* = sigma sqrt(2/k_T), where thermal and turbulent diffusion balance."""
    kT = params.kT_turb
    return math.inf if kT == 0.0 else params.sigma * math.sqrt(2.0 / kT)


def unnormalized_mass_quadrature(params: LimitParams, epsabs: float = 1e-12) -> float:
    """Same mass as ``unnormalized_mass`` by adaptive quadrature, split at rho*."""
    if params.kT_turb * params.beta >= 1.0:
        raise NonNormalizableError("k_T beta >= 1")
    f = lambda x: 2.0 * math.pi * x * float(_shape(x, params))
    split = crossover_radius(params)
    if not math.isfinite(split):
        split = params.sigma * math.sqrt(params.beta)
    head, _ = integrate.quad(f, 0.0, split, epsabs=epsabs, epsrel=1e-13, limit=200)
    tail, _ = integrate.quad(f, split, math.inf, epsabs=epsabs, epsrel=1e-13, limit=200)
    return head + tail


def isotropic_fixed_point_trace(params: LimitParams) -> float:
    """tr T* = 2 sigma^2 beta / (1 - 2 k_T beta), the stationary E|R|^2."""
    kb = params.kT_turb * params.beta
    if kb >= 0.5:
        return math.inf
    return 2.0 * params.sigma**2 * params.beta / (1.0 - 2.0 * kb)


def zero_flux_residual(rho, params: LimitParams) -> np.ndarray:
    """Relative residual of ((k_T/2) rho + sigma^2/rho) g' + g/beta = 0 for the closed form.

    Divided through by g/beta, so it stays meaningful where g underflows.
    """
    sd = StationaryDensity(params)
    rho = np.asarray(rho, dtype=float)
    lhs = (0.5 * params.kT_turb * rho + params.sigma**2 / rho) * sd.log_derivative(rho) * params.beta + 1.0
    return np.abs(lhs)


def sample_radius(params: LimitParams, size: int, rng: np.random.Generator) -> np.ndarray:
    """Draw |R| from the normalised stationary density by inverse CDF."""
    kT, s2, beta = params.kT_turb, params.sigma**2, params.beta
    u = rng.random(size)
    if kT == 0.0:
        return np.sqrt(-2.0 * s2 * beta * np.log1p(-u))
    if kT * beta >= 1.0:
        raise NonNormalizableError("k_T beta >= 1")
    m = 1.0 / (kT * beta)
    # survival S(rho) = (1 + kT rho^2 / (2 s2))^(1 - m)
    return np.sqrt(2.0 * s2 / kT * np.expm1(np.log1p(-u) / (1.0 - m)))


def unit_vectors(n: int, seed: int = 0) -> np.ndarray:
    """``n`` unit vectors at uniformly random angles."""
    phi = np.random.default_rng(seed).uniform(0.0, 2.0 * math.pi, n)
    return np.stack([np.cos(phi), np.sin(phi)], axis=1)


def covariance_convergence(N_list, a: float = 1.0, r_samples: int = 16, seed: int = 0) -> dict:
    """Lattice stretching covariance against A(r) for several shells.

    For each N reports max over random unit r of ||S_N(r) - A(r)||_F / ||A(r)||_F,
    and the least-squares slope of log error against log N.
    """
    from .shell_noise import enumerate_shell, stretching_covariance_sum

    rs = unit_vectors(r_samples, seed)
    errors = []
    for N in N_list:
        model = enumerate_shell(N, a)
        worst = 0.0
        for r in rs:
            A = analytic_A(r, a)
            S = stretching_covariance_sum(model, r)
            worst = max(worst, float(np.linalg.norm(S - A) / np.linalg.norm(A)))
        errors.append(worst)
    slope = float(np.polyfit(np.log(N_list), np.log(errors), 1)[0]) if len(N_list) > 1 else math.nan
    return {"N": [int(n) for n in N_list], "rel_error": errors, "slope": slope, "r": rs.tolist(), "a": a}
