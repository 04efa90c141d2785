"""
Self-similar rescaling
======================

``u^lam(x, t) = lam u(lam x, lam t)`` converges weakly to the box profile
of height 1/(A t). Pairings against a test function are computed from
the stored solution at ``lam t0`` with the dilated test function, so one
run serves the whole lambda sweep.
"""

# %%
from aggregation1d import Grid, SolverConfig, evolve, initial_datum, make_kernel
from aggregation1d.diagnostics import TestFunction, rarefaction_pairing, rescaled_pairing

# %%
k = make_kernel("ExponentialBump", 2.0, 0.5)
t0, lambdas = 5.0, [1, 4, 16, 64]
grid = Grid(800.0, 8192)
states = {}
evolve(initial_datum("Gaussian", grid), k,
       SolverConfig(epsilon=0.0, t_end=320.0, checkpoint_times=[lam * t0 for lam in lambdas]),
       observer=lambda u: states.setdefault(u.time, u))

# %%
for phi in (TestFunction("Bump", 0.0, 3.0), TestFunction("GaussianTest", 0.0, 1.5)):
    target = rarefaction_pairing(phi, t0, k.A)
    print(f"{phi.kind.value}: limit pairing {target:.6f}")
    for lam in lambdas:
        val = rescaled_pairing(states, lam, t0, phi)
        print(f"   lambda = {lam:3d}   pairing = {val:.6f}   gap = {abs(val - target):.2e}")
