"""
The stationary radial density and its power-law tail
====================================================

With no mean flow the limit Fokker-Planck equation has the rotation-invariant
stationary solution g(rho) = g0 (1 + k_T rho^2 / (2 sigma^2))^(-1/(k_T beta)),
which decays like rho^(-p) with p = 2/(k_T beta).
"""

import numpy as np

from shellstretch.covariance import (
    LimitParams,
    StationaryDensity,
    isotropic_fixed_point_trace,
    tail_exponent,
    unnormalized_mass,
    unnormalized_mass_quadrature,
)

for kb in (0.2, 0.4, 0.5, 0.9):
    p = LimitParams.from_kT_beta(kb)
    print(f"k_T beta={kb}:  p={tail_exponent(p):.3f}  survival exponent={tail_exponent(p) - 2:.3f}")

p = LimitParams.from_kT_beta(0.4)
sd = StationaryDensity(p, normalized=True)
print("normalisation, closed form vs quadrature:", unnormalized_mass(p), unnormalized_mass_quadrature(p))

# Local slope of log g approaches -p far out.
rho = np.array([1e2, 1e3, 1e4])
print(np.diff(np.log(sd(rho))) / np.diff(np.log(rho)))

# The second moment is finite for k_T beta < 1/2 and matches the moment-ODE fixed point.
print("E|R|^2 =", isotropic_fixed_point_trace(p))
