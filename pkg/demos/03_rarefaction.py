"""
Convergence to the rarefaction wave
===================================

The primitive ``U = int u - 1/2`` approaches the rarefaction wave
``W^R(x, t) = clip(x/(A t), -1/2, 1/2)``. Its smooth viscous counterpart Z
is available in closed form, and here it is checked against a direct
numerical Burgers solve.
"""

# %%
import numpy as np

from aggregation1d import Grid, SolverConfig, evolve, initial_datum, make_kernel, primitive
from aggregation1d.reference import burgers_oracle_extrapolated, rarefaction, viscous_rarefaction

# %% [markdown]
# First the viscous profile against the oracle. The oracle is a first-order
# finite-volume solve, Richardson-extrapolated from two grids.

# %%
g = Grid(12.0, 1200)
oracle = burgers_oracle_extrapolated(g, A=1.0, eps=0.5, t=5.0)
z = viscous_rarefaction(g.x, 5.0, 1.0, 0.5)
print("sup |Z - oracle| =", np.max(np.abs(z - oracle.values)))

# %% [markdown]
# Now the aggregation equation itself. Track ||U - W^R||_inf, normalised
# by sqrt(t)/log(2+t).

# %%
k = make_kernel("ExponentialBump", 2.0, 0.5)
grid = Grid(240.0, 4096)
u0 = initial_datum("Gaussian", grid)
rows = []


def watch(u):
    U = primitive(u)
    d_wr = np.max(np.abs(U.values - rarefaction(U.x, u.time, k.A)))
    d_z = grid.dx * np.sum(np.abs(U.values - viscous_rarefaction(U.x, u.time, k.A, 0.5)))
    rows.append((u.time, d_wr, d_z))


evolve(u0, k, SolverConfig(epsilon=0.5, t_end=100.0, checkpoint_times=[5, 10, 20, 50, 100]), observer=watch)
print("   t   ||U-W^R||_inf   normalised   ||U-Z||_1/log(2+t)")
for t, d, dz in rows:
    print(f"{t:5g}   {d:.4e}     {d * np.sqrt(t) / np.log(2 + t):.4f}       {dz / np.log(2 + t):.4f}")
