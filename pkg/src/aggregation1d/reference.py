"""Reference profiles: the rarefaction wave, its derivative, and the viscous
rarefaction obtained from the Hopf-Cole transform.

For the step datum Z(x, 0) = sign(x)/2 of ``Z_t - eps Z_xx + A Z Z_x = 0``
the heat-equation potential is a sum of two half-line integrals, each a
complementary error function. Writing ``s = sqrt(4 eps t)``,
``b = A t / 2`` and ``z_pm = (b -+ x)/s`` one gets

    Z = 1/2 tanh(d/2),   d = log erfcx(z_-) - log erfcx(z_+),

where the Gaussian factors of erfc cancel exactly against the exponential
weights. Evaluating through ``erfcx`` keeps every term O(1) until |z| is
huge, so there is no cancellation for |x| >> sqrt(eps t).
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import erfcx

from .grid import Field, Grid

_HALF_BELOW = np.nextafter(0.5, 0.0)
# beyond |d| ~ 37.4, tanh(d/2) rounds to +-1 in double precision
_D_SATURATE = 2.0 * math.atanh(1.0 - 2.0**-52)


def _require_positive_time(t):
    if np.any(np.asarray(t) <= 0):
        raise ValueError("reference profiles need t > 0")


def rarefaction(x, t, A):
    """Entropy rarefaction wave from -1/2 to 1/2 with speed scale A."""
    _require_positive_time(t)
    x = np.asarray(x, dtype=float)
    out = np.clip(x / (A * t), -0.5, 0.5)
    return float(out) if out.ndim == 0 else out


def rarefaction_derivative(x, t, A):
    """Box of height 1/(At) on |x| < At/2; zero on the closed complement."""
    _require_positive_time(t)
    x = np.asarray(x, dtype=float)
    out = np.where(np.abs(x) < 0.5 * A * t, 1.0 / (A * t), 0.0)
    return float(out) if out.ndim == 0 else out


def _log_erfcx(z):
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    safe = z > -25.0
    out[safe] = np.log(erfcx(z[safe]))
    zn = z[~safe]
    # erfcx(z) = 2 exp(z^2) - erfcx(-z) for z << 0
    out[~safe] = math.log(2.0) + zn * zn + np.log1p(-0.5 * erfcx(-zn) * np.exp(-zn * zn))
    return out


def _hopf_cole_exponent(x, t, A, eps):
    s = np.sqrt(4.0 * eps * t)
    b = 0.5 * A * t
    z_minus = (b - x) / s
    z_plus = (b + x) / s
    return _log_erfcx(z_minus) - _log_erfcx(z_plus), z_minus, z_plus, s


def viscous_rarefaction(x, t, A, eps, return_flag: bool = False):
    """Hopf-Cole solution Z(x, t) of viscous Burgers from the step sign(x)/2.

    Values that would round to +-1/2 are clamped to the nearest double
    inside (-1/2, 1/2); with ``return_flag=True`` a boolean array marks them.
    """
    _require_positive_time(t)
    if not eps > 0:
        raise ValueError("viscous rarefaction needs eps > 0")
    x, t = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(t, dtype=float))
    d, *_ = _hopf_cole_exponent(x, t, A, eps)
    flag = np.abs(d) >= _D_SATURATE
    z = 0.5 * np.tanh(0.5 * d)
    z = np.clip(z, -_HALF_BELOW, _HALF_BELOW)
    if z.ndim == 0:
        z = float(z)
        flag = bool(flag)
    return (z, flag) if return_flag else z


def viscous_rarefaction_dx(x, t, A, eps):
    """Analytic x-derivative of :func:`viscous_rarefaction`."""
    _require_positive_time(t)
    x, t = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(t, dtype=float))
    d, z_minus, z_plus, s = _hopf_cole_exponent(x, t, A, eps)
    k = A / (4.0 * eps)
    c = 2.0 / (math.sqrt(math.pi) * s)
    d_x = c * (1.0 / erfcx(z_minus) + 1.0 / erfcx(z_plus)) - 2.0 * k
    out = 0.25 * d_x / np.cosh(0.5 * np.clip(d, -700, 700)) ** 2
    return float(out) if out.ndim == 0 else out


def burgers_oracle(grid: Grid, A: float, eps: float, t: float, cfl: float = 0.45) -> Field:
    """Direct solve of ``Z_t + (A Z^2/2)_x = eps Z_xx`` from a tanh-smoothed step.

    Engquist-Osher upwind flux, centred explicit diffusion, Dirichlet states
    -1/2 and 1/2 beyond the ends. First order in dx; see
    :func:`burgers_oracle_extrapolated` for the Richardson-corrected value.
    """
    if not eps > 0:
        raise ValueError("Burgers oracle needs eps > 0")
    if not t > 0:
        raise ValueError("Burgers oracle needs t > 0")
    dx = grid.dx
    if dx > eps / (5.0 * A):
        raise ValueError(f"grid under-resolves the viscous layer: dx = {dx:g} > eps/(5A) = {eps / (5 * A):g}")
    z = 0.5 * np.tanh(grid.x / dx)
    dt_max = cfl * min(dx / (0.5 * A), dx * dx / (2.0 * eps))
    nsteps = int(math.ceil(t / dt_max))
    dt = t / nsteps
    lam = dt / dx
    mu = eps * dt / (dx * dx)
    ext = np.empty(grid.N + 2)
    ext[0], ext[-1] = -0.5, 0.5
    for _ in range(nsteps):
        ext[1:-1] = z
        left, right = ext[:-1], ext[1:]
        flux = 0.5 * A * (np.maximum(left, 0.0) ** 2 + np.minimum(right, 0.0) ** 2)
        z = z - lam * (flux[1:] - flux[:-1]) + mu * (ext[2:] - 2.0 * z + ext[:-2])
    return Field(grid, z, t)


def burgers_oracle_extrapolated(grid: Grid, A: float, eps: float, t: float) -> Field:
    """Richardson combination ``2 Z_{dx/2} - Z_{dx}`` of two oracle solves.

    The fine solution is restricted to the coarse centres by averaging the two
    fine cells sharing each coarse cell (second-order accurate).
    """
    coarse = burgers_oracle(grid, A, eps, t)
    fine = burgers_oracle(Grid(grid.L, 2 * grid.N), A, eps, t)
    restricted = 0.5 * (fine.values[0::2] + fine.values[1::2])
    return Field(grid, 2.0 * restricted - coarse.values, t)


def sample_rarefaction(grid: Grid, t: float, A: float) -> Field:
    return Field(grid, rarefaction(grid.x, t, A), t)


def sample_viscous_rarefaction(grid: Grid, t: float, A: float, eps: float) -> Field:
    return Field(grid, viscous_rarefaction(grid.x, t, A, eps), t)
