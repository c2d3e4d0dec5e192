"""Compiled inner loops. Callers in the package own validation and shapes."""

import math

import numba
import numpy as np


@numba.njit(cache=True, nogil=True)
def shell_forcing(X, R, dW, k, amp, is_cos, kmax, gx, gr):
    """Accumulate sum_m sigma_m(X) dW_m into gx and sum_m (grad sigma_m(X) R) dW_m into gr.

    Per-path trig tables for the two coordinates make every mode a complex
    product instead of a fresh cos/sin evaluation.
    """
    B = X.shape[0]
    M = k.shape[0]
    n = 2 * kmax + 1
    c1 = np.empty(n)
    s1 = np.empty(n)
    c2 = np.empty(n)
    s2 = np.empty(n)
    for b in range(B):
        x1 = X[b, 0]
        x2 = X[b, 1]
        for j in range(n):
            q = j - kmax
            c1[j] = math.cos(q * x1)
            s1[j] = math.sin(q * x1)
            c2[j] = math.cos(q * x2)
            s2[j] = math.sin(q * x2)
        r1 = R[b, 0]
        r2 = R[b, 1]
        ax = 0.0
        ay = 0.0
        bx = 0.0
        by = 0.0
        for m in range(M):
            k1 = k[m, 0]
            k2 = k[m, 1]
            i1 = k1 + kmax
            i2 = k2 + kmax
            c = c1[i1] * c2[i2] - s1[i1] * s2[i2]
            s = s1[i1] * c2[i2] + c1[i1] * s2[i2]
            w = amp[m] * dW[b, m]
            kr = k1 * r1 + k2 * r2
            if is_cos[m]:
                fx = w * c
                fr = -w * kr * s
            else:
                fx = w * s
                fr = w * kr * c
            ax -= fx * k2
            ay += fx * k1
            bx -= fr * k2
            by += fr * k1
        gx[b, 0] = ax
        gx[b, 1] = ay
        gr[b, 0] = bx
        gr[b, 1] = by


@numba.njit(cache=True, nogil=True)
def fv_explicit_steps(g, w_lo, w_hi, inv_vol, n_steps, dt):
    """Forward-Euler finite-volume steps, in place.

    Interior face j (1 <= j < M) carries the outward flux
    w_lo[j] g[j-1] - w_hi[j] g[j]; the first and last faces carry none.
    """
    M = g.shape[0]
    flux = np.zeros(M + 1)
    for _ in range(n_steps):
        for j in range(1, M):
            flux[j] = w_lo[j] * g[j - 1] - w_hi[j] * g[j]
        for i in range(M):
            g[i] += dt * inv_vol[i] * (flux[i] - flux[i + 1])
    return g


@numba.njit(cache=True, nogil=True)
def limit_steps_still(R, dW, dt, beta, th, qpref):
    """One Euler-Maruyama step of the limit R-equation with no mean flow, in place.

    dW[:, 0:2] drive Q(R), dW[:, 2:4] the thermal term (already times sqrt(dt)).
    Returns the first path with a non-finite result, or -1.
    """
    s3 = math.sqrt(3.0)
    decay = 1.0 - dt / beta
    bad = -1
    for i in range(R.shape[0]):
        r1 = R[i, 0]
        r2 = R[i, 1]
        w1 = dW[i, 0]
        w2 = dW[i, 1]
        norm = math.hypot(r1, r2)
        scale = qpref / norm if norm > 0.0 else 0.0
        along = r1 * w1 + r2 * w2
        across = -r2 * w1 + r1 * w2
        n1 = r1 * decay + scale * (r1 * along - s3 * r2 * across) + th * dW[i, 2]
        n2 = r2 * decay + scale * (r2 * along + s3 * r1 * across) + th * dW[i, 3]
        R[i, 0] = n1
        R[i, 1] = n2
        if bad < 0 and not (math.isfinite(n1) and math.isfinite(n2)):
            bad = i
    return bad
