"""Repulsive interaction kernels K'(x) = -(A/2) sign(x) + V(x) and their convolutions.

The jump part is handled exactly through prefix sums (``sign_convolution``);
the smooth perturbation ``V`` is convolved on the grid, by FFT for large
grids and by direct summation for small ones.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.fft
from scipy import integrate

from .grid import Field

FFT_THRESHOLD = 256


class HypothesisViolation(ValueError):
    """Kernel parameters break the smallness condition ||V_x||_1 < A."""


class Family(str, enum.Enum):
    ZERO = "ZeroV"
    EXPONENTIAL = "ExponentialBump"
    GAUSSIAN = "GaussianBump"
    ODD = "OddSmooth"


def _v_exponential(x, beta):
    return beta * np.exp(-np.abs(x))


def _v_gaussian(x, beta):
    return beta * np.exp(-np.square(x))


def _v_odd(x, beta):
    return beta * x * np.exp(-np.square(x))


def _v_zero(x, beta):
    return np.zeros_like(np.asarray(x, dtype=float))


_PROFILES = {
    Family.ZERO: (_v_zero, lambda x, b: np.zeros_like(np.asarray(x, dtype=float))),
    Family.EXPONENTIAL: (_v_exponential, lambda x, b: -b * np.sign(x) * np.exp(-np.abs(x))),
    Family.GAUSSIAN: (_v_gaussian, lambda x, b: -2.0 * b * x * np.exp(-np.square(x))),
    Family.ODD: (_v_odd, lambda x, b: b * (1.0 - 2.0 * np.square(x)) * np.exp(-np.square(x))),
}


def _quad_tv(vx, beta: float) -> float:
    """||V_x||_1 by adaptive quadrature; V_x is even for the odd family."""
    f = lambda x: abs(vx(x, beta))  # noqa: E731
    # split at the sign changes of V_x to keep the integrand smooth per piece
    breaks = [0.0, 1.0 / math.sqrt(2.0), 4.0, 12.0, np.inf]
    total = 0.0
    for a, b in zip(breaks[:-1], breaks[1:]):
        val, _ = integrate.quad(f, a, b, epsabs=1e-12, epsrel=1e-12, limit=200)
        total += val
    return 2.0 * total


@dataclass(frozen=True)
class KernelSpec:
    """Interaction kernel ``K' = -(A/2) H + V`` with ``V`` from a named family.

    ``tv_vx`` caches ``||V_x||_1``. Instances can only be built through
    :func:`make_kernel` (or ``from_dict``), which enforces ``tv_vx < A``.
    """

    A: float
    family: Family
    beta: float
    tv_vx: float

    def V(self, x):
        return _PROFILES[self.family][0](np.asarray(x, dtype=float), self.beta)

    def V_x(self, x):
        return _PROFILES[self.family][1](np.asarray(x, dtype=float), self.beta)

    @property
    def has_v(self) -> bool:
        """False when V vanishes identically, so its convolution can be skipped."""
        return self.family is not Family.ZERO and self.beta != 0

    def K_prime(self, x):
        x = np.asarray(x, dtype=float)
        return -0.5 * self.A * np.sign(x) + self.V(x)

    @property
    def sup_v(self) -> float:
        """||V||_inf, exact for the built-in families."""
        b = abs(self.beta)
        return {
            Family.ZERO: 0.0,
            Family.EXPONENTIAL: b,
            Family.GAUSSIAN: b,
            Family.ODD: b * math.exp(-0.5) / math.sqrt(2.0),
        }[self.family]

    @property
    def l1_v(self) -> float:
        """||V||_1, exact for the built-in families."""
        b = abs(self.beta)
        return {
            Family.ZERO: 0.0,
            Family.EXPONENTIAL: 2.0 * b,
            Family.GAUSSIAN: b * math.sqrt(math.pi),
            Family.ODD: b,
        }[self.family]

    def to_dict(self) -> dict:
        return {"family": self.family.value, "A": self.A, "beta": self.beta}

    @classmethod
    def from_dict(cls, d: dict) -> "KernelSpec":
        return make_kernel(d.get("family", Family.ZERO), d["A"], d.get("beta", 0.0))


def make_kernel(family, A: float, beta: float = 0.0) -> KernelSpec:
    """Build and validate a kernel.

    ``ZeroV`` has ``V = 0``; ``ExponentialBump`` ``V = beta e^{-|x|}``;
    ``GaussianBump`` ``V = beta e^{-x^2}``; ``OddSmooth`` ``V = beta x e^{-x^2}``.

    Raises
    ------
    HypothesisViolation
        If ``||V_x||_1 >= A``.
    """
    family = Family(family)
    A = float(A)
    beta = float(beta)
    if not (math.isfinite(A) and A > 0):
        raise ValueError(f"jump amplitude A must be positive and finite, got {A}")
    if not math.isfinite(beta):
        raise ValueError(f"beta must be finite, got {beta}")
    if family is Family.ZERO:
        beta = 0.0
        tv = 0.0
    elif family in (Family.EXPONENTIAL, Family.GAUSSIAN):
        tv = 2.0 * abs(beta)
    else:
        tv = _quad_tv(_PROFILES[Family.ODD][1], beta)
    if tv >= A:
        raise HypothesisViolation(
            f"kernel violates ‖V_x‖₁ < A: ‖V_x‖₁ = {tv:.6g} ≥ A = {A:.6g} "
            f"(family {family.value}, beta={beta:g})"
        )
    k = KernelSpec(A=A, family=family, beta=beta, tv_vx=tv)
    xs = np.linspace(-20.0, 20.0, 4001)
    if np.max(np.abs(k.V(xs))) > tv * (1 + 1e-12) + 1e-300:
        raise HypothesisViolation("sampled ||V||_inf exceeds ||V_x||_1")
    return k


def truncation_error_bound(k: KernelSpec, L: float) -> float:
    """Bound on |V * u| lost by ignoring V beyond |x| > 2L, for mass-1 u."""
    if k.family is Family.ZERO:
        return 0.0
    r = 2.0 * L
    b = abs(k.beta)
    if k.family is Family.EXPONENTIAL:
        return b * math.exp(-r)
    if k.family is Family.GAUSSIAN:
        return b * math.exp(-r * r)
    return b * r * math.exp(-r * r)


def _check_finite(u: Field):
    if not np.all(np.isfinite(u.values)):
        raise ValueError("non-finite input field")


def sign_convolution(u: Field) -> Field:
    """``(H * u)(x_j) = 2 P_j - M`` with midpoint prefix sums, O(N)."""
    _check_finite(u)
    dx = u.grid.dx
    cs = np.cumsum(u.values)
    prefix = dx * (cs - 0.5 * u.values)
    mass = dx * cs[-1]
    return u.with_values(2.0 * prefix - mass)


@lru_cache(maxsize=32)
def _kernel_samples(k: KernelSpec, N: int, dx: float) -> np.ndarray:
    return k.V(np.arange(-(N - 1), N) * dx)


@lru_cache(maxsize=32)
def _kernel_rfft(k: KernelSpec, N: int, dx: float):
    nfft = scipy.fft.next_fast_len(2 * N - 1, real=True)
    return nfft, scipy.fft.rfft(_kernel_samples(k, N, dx), nfft)


def _convolve_v(k: KernelSpec, values: np.ndarray, dx: float, method: str = "auto") -> np.ndarray:
    N = values.shape[0]
    if method == "auto":
        method = "fft" if N >= FFT_THRESHOLD else "direct"
    if method == "fft":
        nfft, kf = _kernel_rfft(k, N, dx)
        out = scipy.fft.irfft(scipy.fft.rfft(values, nfft) * kf, nfft)[N - 1 : 2 * N - 1]
    elif method == "direct":
        out = np.convolve(values, _kernel_samples(k, N, dx))[N - 1 : 2 * N - 1]
    else:
        raise ValueError(f"unknown convolution method {method!r}")
    return dx * out


def v_convolution(k: KernelSpec, u: Field, method: str = "auto") -> Field:
    """Zero-padded linear convolution ``(V * u)(x_j) = dx sum_i V(x_j - x_i) u_i``.

    ``method`` is ``"auto"`` (FFT when N >= 256), ``"fft"`` or ``"direct"``.
    The kernel is sampled on offsets spanning [-2L, 2L], so no wrap-around
    occurs.
    """
    _check_finite(u)
    if not k.has_v:
        return u.with_values(np.zeros(u.grid.N))
    return u.with_values(_convolve_v(k, u.values, u.grid.dx, method))


def velocity_array(k: KernelSpec, values: np.ndarray, dx: float) -> np.ndarray:
    """Array-level ``K' * u``; no validation, used inside time loops."""
    cs = np.cumsum(values)
    # -(A/2) (2P - M) = -A (P - M/2)
    a = -k.A * (dx * (cs - 0.5 * values) - 0.5 * dx * cs[-1])
    if k.has_v:
        a += _convolve_v(k, values, dx)
    return a


def interaction_velocity(k: KernelSpec, u: Field) -> Field:
    """``a = K' * u = -(A/2) (H * u) + V * u`` on the grid of ``u``.

    Negative density values only trigger a warning here; the time stepper
    is responsible for rejecting genuine positivity loss.
    """
    if np.min(u.values) < 0:
        warnings.warn("negative density values passed to interaction_velocity", RuntimeWarning, stacklevel=2)
    hu = sign_convolution(u).values
    a = -0.5 * k.A * hu
    if k.has_v:
        a = a + v_convolution(k, u).values
    return u.with_values(a)
