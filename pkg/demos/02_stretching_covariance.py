"""
From lattice sums to the limit covariance A(r)
==============================================

The stretching term sum_k (grad sigma_k r)(grad sigma_k r)^T is a lattice sum
that converges to A(r) = k_T (3|r|^2 I - 2 r r^T). Its square root Q(r) is
the diffusion matrix of the limit SDE.
"""

import numpy as np

from shellstretch.covariance import analytic_A, analytic_Q, covariance_convergence, turbulent_kT
from shellstretch.shell_noise import enumerate_shell, stretching_covariance_sum

r = np.array([1.0, 0.0])
print("k_T =", turbulent_kT(1.0))
print("A((1,0)) =\n", analytic_A(r, 1.0))

for N in (4, 16, 64):
    S = stretching_covariance_sum(enumerate_shell(N, 1.0), r)
    print(f"N={N:3d}\n{S}")

# Relative error against A over random directions, and its log-log slope.
res = covariance_convergence([8, 16, 32, 64, 128])
for N, e in zip(res["N"], res["rel_error"]):
    print(f"N={N:4d}  max rel. error {e:.3e}  N * error {N * e:.3f}")
print("fitted slope:", round(res["slope"], 3))

# Q is the symmetric square root of A.
r = np.array([0.4, -0.9])
Q = analytic_Q(r, 1.0)
print(np.abs(Q @ Q - analytic_A(r, 1.0)).max())
