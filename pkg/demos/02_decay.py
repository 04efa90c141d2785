"""
L^p decay of the density
========================

Starting from a unit Gaussian, the density spreads into a box of width
A t and height 1/(A t), so ||u||_inf decays like 1/t. That is faster than
the 1/sqrt(t) of pure diffusion. The explicit bound
(A - ||V_x||_1)^((1-p)/p) t^((1-p)/p) sits above the solution at all times.
"""

# %%
import numpy as np

from aggregation1d import Grid, SolverConfig, evolve, initial_datum, make_kernel
from aggregation1d.diagnostics import decay_bound, fit_rate, lp_norm

# %%
k = make_kernel("ExponentialBump", 2.0, 0.5)
times = [1, 2, 5, 10, 20, 50, 100, 200]
grid = Grid(320.0, 4096)
u0 = initial_datum("Gaussian", grid, center=0.0, variance=1.0)

states = {}
final = evolve(u0, k, SolverConfig(epsilon=0.1, t_end=200.0, checkpoint_times=times),
               observer=lambda u: states.setdefault(u.time, u))
print("steps taken:", final.meta["steps"])

# %%
print("   t      mass-1      ||u||_inf   bound_inf   ratio_2")
for t, u in states.items():
    r2 = lp_norm(u, 2) / decay_bound(2, t, k.A, k.tv_vx)
    print(f"{t:5g}  {u.mass - 1:+.1e}  {lp_norm(u, 'inf'):.4e}  {decay_bound('inf', t, k.A, k.tv_vx):.4e}  {r2:.3f}")

# %% [markdown]
# A log-log fit over the later checkpoints recovers the 1/t rate.

# %%
ts = np.array([t for t in states if t >= 5])
print("fitted slope:", fit_rate(ts, [lp_norm(states[t], "inf") for t in ts]))
