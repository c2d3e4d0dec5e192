"""Lagrangian Monte Carlo for the polymer dumbbell (X, R).

Pre-limit system (Stratonovich, one Brownian motion per shell mode):

    dX = u_L(X) dt + sum_k sigma_k(X) o dW^k
    dR = grad u_L(X) R dt - R/beta dt + sum_k grad sigma_k(X) R o dW^k + sqrt(2) sigma dW

Limit system (Ito):

    dX = u_L(X) dt
    dR = (grad u_L(X) R - R/beta) dt + Q(R) dW~~ + sqrt(2) sigma dW~

Random numbers come from Philox streams keyed by (seed, block index) with a
fixed block size, so a path's increments depend only on (seed, path index)
and the ensemble is identical for any number of worker threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from .covariance import LimitParams, q_prefactor, turbulent_kT
from .shell_noise import InvalidParameterError, NoiseModel, enumerate_shell

TWO_PI = 2.0 * math.pi

LIMIT_BLOCK = 16384
PRELIMIT_BLOCK = 256


class IntegrationBlowup(ArithmeticError):
    """A path left the finite range; carries the time and path index."""

    def __init__(self, message, time=None, path=None):
        super().__init__(message)
        self.time = time
        self.path = path


class StepRejected(ArithmeticError):
    """Moment ODE step lost positive semidefiniteness (dt too large)."""


@dataclass(frozen=True)
class VelocityField:
    """Large-scale flow u_L = grad_perp psi with

        psi(x) = sum_j c_j cos(m_j . x) + s_j sin(m_j . x).

    Each term is (m1, m2, c, s). grad_perp psi = (-d2 psi, d1 psi) is
    divergence free by construction.
    """

    terms: tuple[tuple[int, int, float, float], ...] = ()

    @classmethod
    def zero(cls) -> "VelocityField":
        return cls(())

    @classmethod
    def cellular(cls, amplitude: float = 1.0) -> "VelocityField":
        """psi = amplitude sin x1 sin x2 = (amplitude/2)(cos(x1 - x2) - cos(x1 + x2))."""
        h = 0.5 * amplitude
        return cls(((1, -1, h, 0.0), (1, 1, -h, 0.0)))

    @property
    def is_zero(self) -> bool:
        return all(c == 0 and s == 0 for _, _, c, s in self.terms)

    def _arrays(self):
        t = np.asarray(self.terms, dtype=float).reshape(-1, 4)
        return t[:, :2], t[:, 2], t[:, 3]

    def stream(self, x) -> np.ndarray:
        m, c, s = self._arrays()
        ph = np.asarray(x, dtype=float) @ m.T
        return (c * np.cos(ph) + s * np.sin(ph)).sum(axis=-1)

    def velocity(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.is_zero:
            return np.zeros_like(x)
        m, c, s = self._arrays()
        ph = x @ m.T
        dpsi = -c * np.sin(ph) + s * np.cos(ph)  # d psi / d(phase)
        d1 = (dpsi * m[:, 0]).sum(axis=-1)
        d2 = (dpsi * m[:, 1]).sum(axis=-1)
        return np.stack([-d2, d1], axis=-1)

    def gradient(self, x) -> np.ndarray:
        """Matrix (du_i/dx_j), shape (..., 2, 2)."""
        x = np.asarray(x, dtype=float)
        if self.is_zero:
            return np.zeros(x.shape[:-1] + (2, 2))
        m, c, s = self._arrays()
        ph = x @ m.T
        dd = -c * np.cos(ph) - s * np.sin(ph)  # second derivative in the phase
        h11 = (dd * m[:, 0] * m[:, 0]).sum(axis=-1)
        h12 = (dd * m[:, 0] * m[:, 1]).sum(axis=-1)
        h22 = (dd * m[:, 1] * m[:, 1]).sum(axis=-1)
        # u1 = -d2 psi, u2 = d1 psi
        row1 = np.stack([-h12, -h22], axis=-1)
        row2 = np.stack([h11, h12], axis=-1)
        return np.stack([row1, row2], axis=-2)


@dataclass
class PolymerState:
    """Centre of mass X on the torus and end-to-end vector R; (2,) or (n, 2)."""

    X: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.R = np.asarray(self.R, dtype=float)


@dataclass(frozen=True)
class SimParams:
    """Configuration of one Monte Carlo experiment.

    ``N=None`` selects the limit SDE; an integer selects the pre-limit shell
    system with that shell index. ``r0`` is the initial end-to-end vector for
    every path; ``x0=None`` draws the centres uniformly on the torus.
    """

    beta: float = 1.0
    sigma: float = 1.0
    a: float = 1.0
    dt: float = 0.01
    t_final: float = 1.0
    n_paths: int = 1000
    seed: int = 0
    N: int | None = None
    u_L: VelocityField = field(default_factory=VelocityField.zero)
    r0: tuple[float, float] = (0.0, 0.0)
    x0: tuple[float, float] | None = None
    n_out: int = 10
    quantile_levels: tuple[float, ...] = (0.5, 0.9, 0.99)

    def __post_init__(self):
        LimitParams(self.a, self.beta, self.sigma)
        if not (self.dt > 0 and self.t_final > 0 and self.dt <= self.t_final):
            raise InvalidParameterError("need 0 < dt <= t_final")
        if int(self.n_paths) != self.n_paths or self.n_paths < 1:
            raise InvalidParameterError("n_paths must be a positive integer")
        if not 0 <= int(self.seed) < 2**64:
            raise InvalidParameterError("seed must fit in 64 unsigned bits")
        if self.N is not None:
            enumerate_shell(self.N, self.a)  # validates N
        if int(self.n_out) != self.n_out or self.n_out < 1:
            raise InvalidParameterError("n_out must be a positive integer")

    @property
    def limit_params(self) -> LimitParams:
        return LimitParams(self.a, self.beta, self.sigma)

    @property
    def is_limit(self) -> bool:
        return self.N is None


def _drift(X, R, params: SimParams):
    u = params.u_L.velocity(X)
    G = params.u_L.gradient(X)
    return u, np.einsum("...ij,...j->...i", G, R) - R / params.beta


def _check_finite(X, R):
    bad = ~(np.isfinite(X).all(axis=-1) & np.isfinite(R).all(axis=-1))
    if np.any(bad):
        idx = int(np.flatnonzero(np.atleast_1d(bad))[0])
        raise IntegrationBlowup(f"non-finite state in path {idx}", path=idx)


def shell_forcing(model: NoiseModel, X, R, dW_modes):
    """Noise terms sum_k sigma_k(X) dW^k and sum_k (grad sigma_k(X) R) dW^k."""
    X2 = np.ascontiguousarray(np.atleast_2d(X), dtype=float)
    R2 = np.ascontiguousarray(np.atleast_2d(R), dtype=float)
    dW = np.ascontiguousarray(np.atleast_2d(dW_modes), dtype=float)
    gx = np.empty_like(X2)
    gr = np.empty_like(R2)
    _kernels.shell_forcing(X2, R2, dW, model.k, model.amplitude, model.is_cos, 2 * model.N, gx, gr)
    if np.ndim(X) == 1:
        return gx[0], gr[0]
    return gx, gr


def step_prelimit(state: PolymerState, model: NoiseModel, params: SimParams, dW_modes, dW_thermal) -> PolymerState:
    """One Heun (predictor-corrector) step of the Stratonovich pre-limit system.

    ``dW_modes`` has one N(0, dt) increment per mode, in mode order (shape (M,)
    or (n, M)); ``dW_thermal`` is the thermal 2-vector increment. Both noise
    evaluations reuse the same increments.
    """
    X, R = state.X, state.R
    dt = params.dt
    th = math.sqrt(2.0) * params.sigma * np.asarray(dW_thermal, dtype=float)
    u0, f0 = _drift(X, R, params)
    gx0, gr0 = shell_forcing(model, X, R, dW_modes)
    Xp = X + u0 * dt + gx0
    Rp = R + f0 * dt + gr0 + th
    u1, f1 = _drift(Xp, Rp, params)
    gx1, gr1 = shell_forcing(model, Xp, Rp, dW_modes)
    Xn = X + 0.5 * (u0 + u1) * dt + 0.5 * (gx0 + gx1)
    Rn = R + 0.5 * (f0 + f1) * dt + 0.5 * (gr0 + gr1) + th
    _check_finite(Xn, Rn)
    return PolymerState(np.mod(Xn, TWO_PI), Rn)


def q_times(R, dW, a: float):
    """Q(R) dW without forming the matrix; zero where R = 0."""
    R = np.asarray(R, dtype=float)
    dW = np.asarray(dW, dtype=float)
    r1, r2 = R[..., 0], R[..., 1]
    norm = np.hypot(r1, r2)
    along = r1 * dW[..., 0] + r2 * dW[..., 1]
    across = -r2 * dW[..., 0] + r1 * dW[..., 1]
    scale = q_prefactor(a) / np.where(norm > 0, norm, 1.0)
    s3 = math.sqrt(3.0)
    out = np.stack([r1 * along - s3 * r2 * across, r2 * along + s3 * r1 * across], axis=-1)
    return out * scale[..., None]


def step_limit(state: PolymerState, params: SimParams, dW_q, dW_thermal) -> PolymerState:
    """One Euler-Maruyama step of the limit Ito SDE.

    No Ito-Stratonovich drift is needed: the rows of A(r) are divergence free.
    """
    X, R = state.X, state.R
    dt = params.dt
    u, f = _drift(X, R, params)
    Rn = R + f * dt + q_times(R, dW_q, params.a) + math.sqrt(2.0) * params.sigma * np.asarray(dW_thermal, dtype=float)
    Xn = X + u * dt
    _check_finite(Xn, Rn)
    return PolymerState(np.mod(Xn, TWO_PI), Rn)


# ---------------------------------------------------------------- moments


def moment_rhs(T, params: LimitParams, grad_u=None):
    """dT/dt = L T + T L^T - (2/beta)(T - sigma^2 beta I) + k_T (3 tr T I - 2 T)."""
    kT = params.kT_turb
    eye = np.eye(2)
    out = -(2.0 / params.beta) * (T - params.sigma**2 * params.beta * eye) + kT * (3.0 * np.trace(T) * eye - 2.0 * T)
    if grad_u is not None:
        L = np.asarray(grad_u, dtype=float)
        out = out + L @ T + T @ L.T
    return out


def moment_ode_solve(params: LimitParams, T0, t_final: float, dt: float, grad_u=None, psd_tol: float = 1e-10):
    """RK4 for the structure tensor T = E[R R^T] of the limit SDE.

    Returns ``(times, T)`` with T of shape (n+1, 2, 2). The step is shortened
    so that it divides ``t_final``. ``grad_u`` is an optional constant velocity
    gradient (homogeneous flow); the default is no large-scale flow.
    """
    if not (dt > 0 and t_final >= 0):
        raise InvalidParameterError("need dt > 0 and t_final >= 0")
    n = max(1, math.ceil(t_final / dt - 1e-12))
    h = t_final / n
    T = np.empty((n + 1, 2, 2))
    T[0] = np.asarray(T0, dtype=float)
    for i in range(n):
        y = T[i]
        k1 = moment_rhs(y, params, grad_u)
        k2 = moment_rhs(y + 0.5 * h * k1, params, grad_u)
        k3 = moment_rhs(y + 0.5 * h * k2, params, grad_u)
        k4 = moment_rhs(y + h * k3, params, grad_u)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        y = 0.5 * (y + y.T)
        lam = np.linalg.eigvalsh(y)[0]
        if lam < -psd_tol * max(1.0, np.trace(y)):
            raise StepRejected(f"structure tensor lost PSD at t={(i + 1) * h:.6g} (min eig {lam:.3g}); reduce dt")
        T[i + 1] = y
    return np.linspace(0.0, t_final, n + 1), T


def stable_dt(params: SimParams) -> float:
    """Largest step allowed by dt <= min(beta/50, 1/(50 k_T E|R|^2)).

    E|R|^2 is the running maximum of the moment-ODE prediction started from
    r0 r0^T, so the rule does not couple paths to each other.
    """
    lp = params.limit_params
    bound = params.beta / 50.0
    kT = lp.kT_turb
    if kT > 0:
        T0 = np.outer(params.r0, params.r0)
        _, T = moment_ode_solve(lp, T0, params.t_final, min(params.beta / 200.0, params.t_final / 50.0))
        peak = float(np.max(T[:, 0, 0] + T[:, 1, 1]))
        if peak > 0:
            bound = min(bound, 1.0 / (50.0 * kT * peak))
    return bound


# ---------------------------------------------------------------- ensembles


@dataclass
class EnsembleStats:
    """Per-checkpoint ensemble statistics. ``*_se`` are std/sqrt(n_paths)."""

    times: np.ndarray
    T: np.ndarray  # (n_t, 2, 2) mean of R R^T
    T_se: np.ndarray
    mean_R: np.ndarray  # (n_t, 2)
    mean_R_se: np.ndarray
    mean_r2: np.ndarray  # (n_t,) mean |R|^2
    mean_r2_se: np.ndarray
    quantile_levels: np.ndarray
    quantiles: np.ndarray  # (n_t, n_levels) of |R|
    final_radii: np.ndarray
    dt: float
    n_paths: int

    def to_dict(self) -> dict:
        return {
            "dt": self.dt,
            "n_paths": self.n_paths,
            "times": self.times.tolist(),
            "T": self.T.tolist(),
            "T_se": self.T_se.tolist(),
            "mean_R": self.mean_R.tolist(),
            "mean_R_se": self.mean_R_se.tolist(),
            "mean_r2": self.mean_r2.tolist(),
            "mean_r2_se": self.mean_r2_se.tolist(),
            "quantile_levels": self.quantile_levels.tolist(),
            "quantiles": self.quantiles.tolist(),
        }


# statistics tracked per checkpoint: R1R1, R1R2, R2R2, R1, R2, |R|^2
_N_STATS = 6


def _observables(R):
    r1, r2 = R[:, 0], R[:, 1]
    return np.stack([r1 * r1, r1 * r2, r2 * r2, r1, r2, r1 * r1 + r2 * r2], axis=1)


def _block_moments(R):
    obs = _observables(R)
    mean = obs.mean(axis=0)
    m2 = ((obs - mean) ** 2).sum(axis=0)
    return len(R), mean, m2


def _merge(acc, part):
    """Chan et al. pairwise update of (count, mean, M2)."""
    n_a, mean_a, m2_a = acc
    n_b, mean_b, m2_b = part
    n = n_a + n_b
    delta = mean_b - mean_a
    return n, mean_a + delta * (n_b / n), m2_a + m2_b + delta * delta * (n_a * n_b / n)


def block_generator(seed: int, block: int) -> np.random.Generator:
    """Counter-based stream for one block of paths."""
    return np.random.Generator(np.random.Philox(key=np.array([seed, block], dtype=np.uint64)))


def _run_block(params: SimParams, model, block: int, start: int, stop: int, n_sub: int, dt: float):
    rng = block_generator(params.seed, block)
    n = stop - start
    if params.x0 is None:
        X = rng.random((n, 2)) * TWO_PI
    else:
        X = np.tile(np.mod(np.asarray(params.x0, dtype=float), TWO_PI), (n, 1))
    R = np.tile(np.asarray(params.r0, dtype=float), (n, 1))
    state = PolymerState(X, R)
    step_params = _with_dt(params, dt)
    sq = math.sqrt(dt)
    moments = [_block_moments(state.R)]
    radii = [np.hypot(state.R[:, 0], state.R[:, 1])]
    fast = model is None and params.u_L.is_zero
    qpref = q_prefactor(params.a)
    th = math.sqrt(2.0) * params.sigma
    dW = np.empty((n, 4))
    for interval in range(params.n_out):
        for s in range(n_sub):
            try:
                if model is None:
                    # columns 0-1 drive Q(R), 2-3 the thermal noise
                    rng.standard_normal(out=dW)
                    dW *= sq
                    if fast:
                        bad = _kernels.limit_steps_still(state.R, dW, dt, params.beta, th, qpref)
                        if bad >= 0:
                            raise IntegrationBlowup(f"non-finite state in path {bad}", path=bad)
                    else:
                        state = step_limit(state, step_params, dW[:, :2], dW[:, 2:])
                else:
                    dWm = rng.standard_normal((n, len(model))) * sq
                    dWt = rng.standard_normal((n, 2)) * sq
                    state = step_prelimit(state, model, step_params, dWm, dWt)
            except IntegrationBlowup as exc:
                t = (interval * n_sub + s + 1) * dt
                raise IntegrationBlowup(
                    f"blowup at t={t:.6g} in path {start + exc.path}", time=t, path=start + exc.path
                ) from None
        moments.append(_block_moments(state.R))
        radii.append(np.hypot(state.R[:, 0], state.R[:, 1]))
    return moments, radii


def _with_dt(params: SimParams, dt: float) -> SimParams:
    return replace(params, dt=min(dt, params.t_final))


def effective_dt(params: SimParams) -> tuple[float, int]:
    """Step actually used and the number of steps per output interval."""
    interval = params.t_final / params.n_out
    target = min(params.dt, stable_dt(params))
    n_sub = max(1, math.ceil(interval / target - 1e-9))
    return interval / n_sub, n_sub


def run_ensemble(params: SimParams, threads: int = 1, max_halvings: int = 3) -> EnsembleStats:
    """Integrate ``params.n_paths`` independent paths and collect statistics.

    The result is the same for any ``threads``: blocks of paths have fixed
    size and private RNG streams, and block results are merged in block order.
    A blowup halves the step and restarts the ensemble, at most
    ``max_halvings`` times, before propagating.
    """
    model = None if params.is_limit else enumerate_shell(params.N, params.a)
    dt, n_sub = effective_dt(params)
    size = LIMIT_BLOCK if model is None else PRELIMIT_BLOCK
    blocks = [(b, s, min(s + size, params.n_paths)) for b, s in enumerate(range(0, params.n_paths, size))]
    workers = threads if threads and threads > 0 else None
    for attempt in range(max_halvings + 1):
        try:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(lambda blk: _run_block(params, model, *blk, n_sub, dt), blocks))
            break
        except IntegrationBlowup:
            if attempt == max_halvings:
                raise
            dt, n_sub = dt / 2.0, n_sub * 2
    return _collect(params, results, dt)


def _collect(params: SimParams, results, dt: float) -> EnsembleStats:
    n_t = params.n_out + 1
    n = params.n_paths
    means = np.empty((n_t, _N_STATS))
    ses = np.empty((n_t, _N_STATS))
    for i in range(n_t):
        acc = results[0][0][i]
        for moments, _ in results[1:]:
            acc = _merge(acc, moments[i])
        count, mean, m2 = acc
        var = m2 / (count - 1) if count > 1 else np.zeros_like(m2)
        means[i] = mean
        ses[i] = np.sqrt(var / count)
    radii = [np.concatenate([r[i] for _, r in results]) for i in range(n_t)]
    levels = np.asarray(params.quantile_levels, dtype=float)
    quantiles = np.array([np.quantile(r, levels) for r in radii]).reshape(n_t, len(levels))

    def tensor(cols):
        return np.stack(
            [np.stack([cols[:, 0], cols[:, 1]], -1), np.stack([cols[:, 1], cols[:, 2]], -1)], axis=-2
        )

    return EnsembleStats(
        times=np.linspace(0.0, params.t_final, n_t),
        T=tensor(means),
        T_se=tensor(ses),
        mean_R=means[:, 3:5],
        mean_R_se=ses[:, 3:5],
        mean_r2=means[:, 5],
        mean_r2_se=ses[:, 5],
        quantile_levels=levels,
        quantiles=quantiles,
        final_radii=radii[-1],
        dt=dt,
        n_paths=n,
    )


def expected_stretching(T, a: float):
    """E A(R) = k_T (3 tr T I - 2 T), using that A is linear in R R^T."""
    T = np.asarray(T, dtype=float)
    tr = np.trace(T, axis1=-2, axis2=-1)
    return turbulent_kT(a) * (3.0 * tr[..., None, None] * np.eye(2) - 2.0 * T)


__all__ = [
    "IntegrationBlowup",
    "StepRejected",
    "VelocityField",
    "PolymerState",
    "SimParams",
    "EnsembleStats",
    "shell_forcing",
    "step_prelimit",
    "step_limit",
    "q_times",
    "moment_ode_solve",
    "moment_rhs",
    "stable_dt",
    "effective_dt",
    "run_ensemble",
    "expected_stretching",
    "block_generator",
]
