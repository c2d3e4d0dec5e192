"""Shell-structured transport noise on the 2-torus.

The noise is a finite family of divergence-free Fourier modes

    sigma_k(x) = theta_k k_perp/|k| cos(k.x)   for k in K_+
    sigma_k(x) = theta_k k_perp/|k| sin(k.x)   for k in K_-

with theta_k = a/|k|^2 on the shell N <= |k| <= 2N and k_perp = (-k2, k1).
Lattice sums (the correctors) are reduced with ``math.fsum`` so they are
correctly rounded and independent of summation order or partitioning.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np


class InvalidParameterError(ValueError):
    """Raised when a model or simulation parameter is out of range."""


class Phase(enum.Enum):
    COS = "cos"  # k in K_+
    SIN = "sin"  # k in K_-


def quadrant(k1: int, k2: int) -> str:
    """Name of the quadrant ('++', '-+', '--', '+-') that contains k != 0."""
    if k1 == 0 and k2 == 0:
        raise InvalidParameterError("k = (0, 0) belongs to no quadrant")
    if k1 >= 0 and k2 > 0:
        return "++"
    if k1 < 0 and k2 >= 0:
        return "-+"
    if k1 <= 0 and k2 < 0:
        return "--"
    return "+-"


def in_k_plus(k1, k2):
    """Vectorised membership test for K_+ = K_++ u K_+-."""
    k1 = np.asarray(k1)
    k2 = np.asarray(k2)
    return ((k1 >= 0) & (k2 > 0)) | ((k1 > 0) & (k2 <= 0))


@dataclass(frozen=True)
class ShellMode:
    k: tuple[int, int]
    theta: float
    phase: Phase


@dataclass(frozen=True, eq=False)
class NoiseModel:
    """All modes of the shell N <= |k| <= 2N, in canonical order.

    Canonical order is by |k|^2, then lexicographic in (k1, k2). The array
    attributes hold the same data as ``modes`` in vectorised form.
    """

    N: int
    a: float
    k: np.ndarray = field(repr=False)  # (M, 2) int64
    theta: np.ndarray = field(repr=False)  # (M,)
    is_cos: np.ndarray = field(repr=False)  # (M,) bool

    def __len__(self) -> int:
        return len(self.theta)

    @property
    def modes(self) -> list[ShellMode]:
        return [
            ShellMode((int(k1), int(k2)), float(t), Phase.COS if c else Phase.SIN)
            for (k1, k2), t, c in zip(self.k, self.theta, self.is_cos)
        ]

    @property
    def k_norm(self) -> np.ndarray:
        return np.sqrt((self.k * self.k).sum(axis=1).astype(float))

    @property
    def k_perp(self) -> np.ndarray:
        return np.stack([-self.k[:, 1], self.k[:, 0]], axis=1)

    @property
    def amplitude(self) -> np.ndarray:
        """theta_k / |k|, the prefactor of k_perp in every mode."""
        return self.theta / self.k_norm


def enumerate_shell(N: int, a: float) -> NoiseModel:
    """Build the shell ensemble for index ``N`` and intensity ``a``.

    Membership is decided in integer arithmetic, N^2 <= |k|^2 <= 4N^2.
    """
    if int(N) != N or N < 1:
        raise InvalidParameterError(f"shell index N must be a positive integer, got {N!r}")
    if not (a >= 0) or not math.isfinite(a):
        raise InvalidParameterError(f"intensity a must be finite and >= 0, got {a!r}")
    N = int(N)
    span = np.arange(-2 * N, 2 * N + 1, dtype=np.int64)
    k1, k2 = np.meshgrid(span, span, indexing="ij")
    k1 = k1.ravel()
    k2 = k2.ravel()
    s = k1 * k1 + k2 * k2
    keep = (s >= N * N) & (s <= 4 * N * N)
    k1, k2, s = k1[keep], k2[keep], s[keep]
    order = np.lexsort((k2, k1, s))
    k1, k2, s = k1[order], k2[order], s[order]
    k = np.stack([k1, k2], axis=1)
    theta = float(a) / s.astype(float)
    return NoiseModel(N=N, a=float(a), k=k, theta=theta, is_cos=in_k_plus(k1, k2))


def _phases(model: NoiseModel, x) -> np.ndarray:
    return model.k @ np.asarray(x, dtype=float)


def sigma_eval(model: NoiseModel, x) -> np.ndarray:
    """Velocity of every mode at ``x``; shape (M, 2), rows in mode order."""
    ph = _phases(model, x)
    trig = np.where(model.is_cos, np.cos(ph), np.sin(ph))
    return (model.amplitude * trig)[:, None] * model.k_perp


def grad_sigma_r_eval(model: NoiseModel, x, r) -> np.ndarray:
    """Stretching vectors (grad sigma_k(x)) r of every mode; shape (M, 2).

    For K_+ modes this is -(k.r) theta k_perp/|k| sin(k.x), for K_- modes
    (k.r) theta k_perp/|k| cos(k.x).
    """
    ph = _phases(model, x)
    kr = model.k @ np.asarray(r, dtype=float)
    trig = np.where(model.is_cos, -np.sin(ph), np.cos(ph))
    return (model.amplitude * kr * trig)[:, None] * model.k_perp


def alpha_N(model: NoiseModel) -> float:
    """Scalar x-diffusion corrector (1/2) sum_{K_++} theta_k^2."""
    k1, k2 = model.k[:, 0], model.k[:, 1]
    pp = (k1 >= 0) & (k2 > 0)
    return 0.5 * math.fsum(model.theta[pp] ** 2)


def _fsum_outer(weights: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Correctly rounded sum_m w_m u_m (x) v_m for (M, 2) arrays u, v."""
    out = np.empty((2, 2))
    for i in range(2):
        for j in range(2):
            out[i, j] = math.fsum(weights * u[:, i] * v[:, j])
    return out


def noise_covariance(model: NoiseModel, x, y) -> np.ndarray:
    """Spatial covariance Q(x, y) = sum_k sigma_k(x) (x) sigma_k(y)."""
    return _fsum_outer(np.ones(len(model)), sigma_eval(model, x), sigma_eval(model, y))


def covariance_Q(model: NoiseModel, z) -> np.ndarray:
    """Space-homogeneous covariance Q(z) = sum_k sigma_k(z) (x) sigma_k(0)."""
    return noise_covariance(model, z, (0.0, 0.0))


def stretching_covariance_sum(model: NoiseModel, r) -> np.ndarray:
    """Exact lattice value of sum_k (grad sigma_k r) (x) (grad sigma_k r).

    The sum does not depend on x: pairing k in K_- with -k in K_+ turns
    sin^2 + cos^2 into 1, leaving sum_{K_+} theta^2 (k.r)^2 k_perp k_perp^T/|k|^2.
    """
    plus = model.is_cos
    k = model.k[plus].astype(float)
    kp = model.k_perp[plus].astype(float)
    kr = k @ np.asarray(r, dtype=float)
    w = model.amplitude[plus] ** 2 * kr * kr
    return _fsum_outer(w, kp, kp)
