"""
Interaction kernels and the two convolutions
============================================

The velocity field is ``a = K' * u`` with ``K' = -(A/2) sign(x) + V(x)``.
The jump part is a prefix sum; the smooth part ``V`` is a zero-padded
FFT convolution.
"""

# %%
import numpy as np

from aggregation1d import Field, Grid, HypothesisViolation, make_kernel, sign_convolution, v_convolution

# %% [markdown]
# A kernel is valid only while ||V_x||_1 < A. The exponential bump has
# ||V_x||_1 = 2|beta|, so beta = 0.5 is admissible for A = 2 ...

# %%
k = make_kernel("ExponentialBump", A=2.0, beta=0.5)
print(k)

# %% [markdown]
# ... while A = 1, beta = 0.6 is refused.

# %%
try:
    make_kernel("ExponentialBump", A=1.0, beta=0.6)
except HypothesisViolation as exc:
    print("rejected:", exc)

# %% [markdown]
# For the odd family the constructor integrates |V_x| by adaptive
# quadrature; the closed form serves as a check.

# %%
odd = make_kernel("OddSmooth", 2.0, 0.5)
print("OddSmooth tv_vx =", odd.tv_vx, " closed form:", 2 * np.sqrt(2) * np.exp(-0.5) * 0.5)

# %% [markdown]
# ``sign(x) * phi'`` equals ``2 phi``. On the grid the identity holds to
# second order in dx.

# %%
for N in (512, 1024, 2048, 4096):
    g = Grid(10.0, N)
    phi = np.exp(-g.x**2)
    err = np.max(np.abs(sign_convolution(Field(g, np.gradient(phi, g.dx))).values - 2 * phi))
    print(f"N = {N:5d}  error = {err:.3e}")

# %% [markdown]
# FFT and direct summation agree to rounding.

# %%
g = Grid(8.0, 1024)
u = Field(g, np.random.default_rng(0).random(g.N))
fft = v_convolution(k, u, method="fft").values
direct = v_convolution(k, u, method="direct").values
print("max |fft - direct| =", np.max(np.abs(fft - direct)))
