"""
Adding a large-scale cellular flow
==================================

The mean flow u_L = grad_perp(sin x1 sin x2) stretches R through grad u_L.
Compare the structure tensor with and without it.
"""

from shellstretch.lagrangian_mc import SimParams, VelocityField, run_ensemble

base = dict(a=0.5, t_final=2.0, n_paths=20_000, seed=3, r0=(1.0, 0.0), n_out=4)
still = run_ensemble(SimParams(**base))
cells = run_ensemble(SimParams(**base, u_L=VelocityField.cellular(1.0)))
for t, a, b in zip(still.times, still.mean_r2, cells.mean_r2):
    print(f"t={t:.1f}  E|R|^2 still={a:.3f}  cellular={b:.3f}")
