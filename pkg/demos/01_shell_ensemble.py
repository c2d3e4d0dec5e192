"""
The shell noise ensemble
========================

Build the family of Fourier modes on the shell N <= |k| <= 2N and look at
the two lattice sums that survive the Stratonovich-to-Ito conversion.
"""

import math

import numpy as np

from shellstretch.shell_noise import alpha_N, covariance_Q, enumerate_shell

# The first shell has twelve modes: |k|^2 in {1, 2, 4}.
model = enumerate_shell(1, a=1.0)
for (k1, k2), theta, is_cos in zip(model.k, model.theta, model.is_cos):
    print(f"k=({k1:+d},{k2:+d})  theta={theta:.4f}  {'cos' if is_cos else 'sin'}")

# Mode count grows like the shell area 3 pi N^2.
for N in (4, 16, 64):
    print(N, len(enumerate_shell(N, 1.0)), round(3 * math.pi * N * N))

# The scalar corrector alpha_N decays like 1/N^2; alpha_N N^2 settles near 3 pi / 32.
for N in (1, 2, 8, 32, 64):
    print(f"N={N:3d}  alpha_N={alpha_N(enumerate_shell(N, 1.0)):.3e}  N^2 alpha_N={N * N * alpha_N(enumerate_shell(N, 1.0)):.4f}")
print("3 pi / 32 =", 3 * math.pi / 32)

# The spatial covariance is even in z, so its gradient at the origin vanishes.
m16 = enumerate_shell(16, 1.0)
z = np.array([0.3, -1.2])
print(np.abs(covariance_Q(m16, z) - covariance_Q(m16, -z)).max())
