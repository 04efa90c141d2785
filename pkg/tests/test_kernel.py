import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from aggregation1d.grid import Field, Grid
from aggregation1d.kernel import (
    Family,
    HypothesisViolation,
    KernelSpec,
    interaction_velocity,
    make_kernel,
    sign_convolution,
    truncation_error_bound,
    v_convolution,
)
from aggregation1d.solver import primitive


def gaussian_field(grid, var=1.0, center=0.0):
    x = grid.x
    return Field(grid, np.exp(-((x - center) ** 2) / (2 * var)) / math.sqrt(2 * math.pi * var))


# --- construction -----------------------------------------------------------


def test_zero_kernel_valid():
    k = make_kernel("ZeroV", 2.0, 0.0)
    assert k.tv_vx == 0.0
    assert k.family is Family.ZERO
    assert np.all(k.V(np.linspace(-3, 3, 7)) == 0)


def test_exponential_tv_matches_hand_integral():
    k = make_kernel("ExponentialBump", 2.0, 0.5)
    assert k.tv_vx == 1.0
    # independent check: integrate |V_x| numerically
    val, _ = integrate.quad(lambda x: abs(float(k.V_x(x))), 0, np.inf)
    assert 2 * val == pytest.approx(1.0, abs=1e-10)


def test_gaussian_tv():
    k = make_kernel("GaussianBump", 3.0, -0.7)
    assert k.tv_vx == pytest.approx(1.4)


def test_odd_tv_closed_form():
    # |V_x| integrates in closed form: 2 sqrt(2) e^{-1/2} |beta|
    for beta in (0.1, -0.4, 0.9):
        k = make_kernel("OddSmooth", 2.0, beta)
        assert k.tv_vx == pytest.approx(2 * math.sqrt(2) * math.exp(-0.5) * abs(beta), abs=1e-10)


def test_hypothesis_violation_message():
    with pytest.raises(HypothesisViolation, match="‖V_x‖₁ = 1.2 ≥ A"):
        make_kernel("ExponentialBump", 1.0, 0.6)


def test_boundary_case_rejected():
    # strict inequality: tv == A fails
    with pytest.raises(HypothesisViolation):
        make_kernel("GaussianBump", 1.0, 0.5)


@pytest.mark.parametrize("A", [0.0, -1.0, float("nan"), float("inf")])
def test_bad_amplitude(A):
    with pytest.raises(ValueError):
        make_kernel("ZeroV", A, 0.0)


def test_unknown_family():
    with pytest.raises(ValueError):
        make_kernel("Lorentzian", 1.0, 0.1)


@given(
    family=st.sampled_from(["ExponentialBump", "GaussianBump", "OddSmooth"]),
    A=st.floats(0.1, 10.0),
    frac=st.floats(-0.99, 0.99),
)
def test_constructed_kernels_satisfy_hypothesis(family, A, frac):
    # choose beta so that tv is a fraction of A, then check invariants
    scale = 2.0 if family != "OddSmooth" else 2 * math.sqrt(2) * math.exp(-0.5)
    k = make_kernel(family, A, frac * A / scale)
    assert k.tv_vx < A
    xs = np.linspace(-30, 30, 6001)
    assert np.max(np.abs(k.V(xs))) <= k.tv_vx + 1e-15
    assert abs(float(k.V(30.0))) < 1e-12  # decays at infinity


def test_sup_and_l1_norms():
    for fam, beta in [("ExponentialBump", 0.3), ("GaussianBump", 0.3), ("OddSmooth", 0.3)]:
        k = make_kernel(fam, 2.0, beta)
        xs = np.linspace(-20, 20, 400001)
        assert np.max(np.abs(k.V(xs))) == pytest.approx(k.sup_v, rel=1e-6)
        l1, _ = integrate.quad(lambda x: abs(float(k.V(x))), -40, 40, points=[0.0], limit=200)
        assert l1 == pytest.approx(k.l1_v, rel=1e-8)


def test_roundtrip_dict():
    k = make_kernel("OddSmooth", 2.0, 0.25)
    assert KernelSpec.from_dict(k.to_dict()) == k


def test_k_prime_sign_convention():
    k = make_kernel("ZeroV", 2.0)
    assert k.K_prime(1.0) == -1.0
    assert k.K_prime(-1.0) == 1.0
    assert k.K_prime(0.0) == 0.0  # H(0) = 0


def test_truncation_bound_small():
    k = make_kernel("ExponentialBump", 2.0, 0.5)
    assert truncation_error_bound(k, 20.0) < 1e-17
    assert truncation_error_bound(make_kernel("ZeroV", 1.0), 1.0) == 0.0


# --- sign convolution -------------------------------------------------------


def test_sign_convolution_symmetric_gaussian_zero_at_center():
    g = Grid(10.0, 1024)
    hu = sign_convolution(gaussian_field(g))
    # the centre sits between two cells; average them
    mid = g.N // 2
    assert 0.5 * (hu.values[mid - 1] + hu.values[mid]) == pytest.approx(0.0, abs=1e-12)


def test_sign_convolution_indicator():
    g = Grid(4.0, 800)
    u = Field(g, ((g.x > 0) & (g.x < 1)).astype(float))
    hu = sign_convolution(u)
    assert np.allclose(hu.values[g.x > 1], 1.0, atol=1e-12)
    assert np.allclose(hu.values[g.x < 0], -1.0, atol=1e-12)


def test_sign_convolution_of_derivative_gives_twice_phi():
    g = Grid(10.0, 4096)
    phi = np.exp(-g.x**2)
    dphi = Field(g, -2 * g.x * phi)
    hu = sign_convolution(dphi)
    mid = g.N // 2
    assert 0.5 * (hu.values[mid - 1] + hu.values[mid]) == pytest.approx(2.0, abs=1e-4)
    assert np.max(np.abs(hu.values - 2 * phi)) < 1e-4


def test_sign_identity_second_order():
    errs = []
    for N in (1024, 2048, 4096):
        g = Grid(10.0, N)
        phi = np.exp(-g.x**2)
        d = np.gradient(phi, g.dx)
        errs.append(np.max(np.abs(sign_convolution(Field(g, d)).values - 2 * phi)))
    assert errs[0] / errs[1] >= 3.5
    assert errs[1] / errs[2] >= 3.5


def test_sign_convolution_rejects_nonfinite():
    g = Grid(1.0, 16)
    bad = Field(g, np.zeros(16))
    object.__setattr__(bad, "values", np.full(16, np.nan))
    with pytest.raises(ValueError):
        sign_convolution(bad)


# --- V convolution ----------------------------------------------------------


def direct_oracle(k, u):
    """Plain double loop over cells: dx sum_i V(x_j - x_i) u_i."""
    x = u.x
    return u.dx * (k.V(x[:, None] - x[None, :]) @ u.values)


def test_zero_v_convolution():
    g = Grid(5.0, 64)
    out = v_convolution(make_kernel("ZeroV", 1.0), gaussian_field(g))
    assert np.all(out.values == 0)


def test_point_mass_recovers_kernel():
    g = Grid(10.0, 1001)
    vals = np.zeros(g.N)
    vals[g.N // 2] = 1.0 / g.dx
    k = make_kernel("ExponentialBump", 2.0, 0.5)
    out = v_convolution(k, Field(g, vals))
    assert np.allclose(out.values, k.V(g.x - g.x[g.N // 2]), atol=1e-14)


def test_gaussian_bump_closed_form_and_direct():
    # e^{-x^2} * (e^{-x^2}/sqrt(pi)) = e^{-x^2/2}/sqrt(2)
    g = Grid(12.0, 2048)
    k = make_kernel("GaussianBump", 4.0, 1.0)
    u = gaussian_field(g, var=0.5)
    out = v_convolution(k, u)
    exact = np.exp(-g.x**2 / 2) / math.sqrt(2)
    assert np.max(np.abs(out.values - exact)) < 1e-10
    idx = np.array([100, 700, 1024, 1500, 1900])
    direct = u.dx * np.array([np.sum(k.V(g.x[j] - g.x) * u.values) for j in idx])
    assert np.allclose(out.values[idx], direct, rtol=1e-12, atol=1e-15)


@pytest.mark.parametrize("N", [256, 1024])
@pytest.mark.parametrize("family", ["ExponentialBump", "GaussianBump", "OddSmooth"])
def test_fft_matches_direct(N, family, rng):
    g = Grid(7.0, N)
    k = make_kernel(family, 2.0, 0.3)
    u = Field(g, rng.random(N))
    fft = v_convolution(k, u, method="fft").values
    direct = v_convolution(k, u, method="direct").values
    oracle = direct_oracle(k, u)
    scale = np.max(np.abs(oracle))
    assert np.max(np.abs(fft - oracle)) <= 1e-12 * scale
    assert np.max(np.abs(direct - oracle)) <= 1e-12 * scale


def test_unknown_method():
    g = Grid(1.0, 32)
    with pytest.raises(ValueError):
        v_convolution(make_kernel("GaussianBump", 1.0, 0.1), Field(g, np.ones(32)), method="magic")


# --- interaction velocity ---------------------------------------------------


def test_velocity_symmetric_zero_at_center():
    g = Grid(10.0, 1024)
    a = interaction_velocity(make_kernel("ZeroV", 2.0), gaussian_field(g)).values
    mid = g.N // 2
    assert 0.5 * (a[mid - 1] + a[mid]) == pytest.approx(0.0, abs=1e-12)


def test_velocity_when_all_mass_left():
    g = Grid(10.0, 1000)
    u = gaussian_field(g, var=0.25, center=-5.0)
    u = u.with_values(u.values / u.mass)
    a = interaction_velocity(make_kernel("ZeroV", 2.0), u).values
    assert np.allclose(a[g.x > 2.0], -1.0, atol=1e-12)


def test_velocity_bounded(rng):
    g = Grid(8.0, 512)
    k = make_kernel("ExponentialBump", 2.0, 0.7)
    for _ in range(20):
        u = Field(g, rng.random(g.N) * rng.random())
        a = interaction_velocity(k, u).values
        M = u.mass
        assert np.max(np.abs(a)) <= 0.5 * k.A * M + k.sup_v * M + 1e-12


def test_velocity_primitive_identity(rng):
    g = Grid(8.0, 512)
    k = make_kernel("OddSmooth", 2.0, 0.4)
    u = Field(g, rng.random(g.N))
    u = u.with_values(u.values / u.mass)
    a = interaction_velocity(k, u).values
    alt = -k.A * primitive(u).values + v_convolution(k, u).values
    assert np.max(np.abs(a - alt)) <= 1e-10


@given(st.lists(st.floats(0.0, 5.0), min_size=16, max_size=200))
def test_sign_part_nonincreasing(vals):
    n = len(vals)
    g = Grid(3.0, max(n, 16))
    u = np.zeros(g.N)
    u[: n] = vals
    a = interaction_velocity(make_kernel("ZeroV", 1.5), Field(g, u)).values
    assert np.all(np.diff(a) <= 1e-12)


def test_negative_input_warns_not_raises():
    g = Grid(2.0, 32)
    u = np.full(32, 0.25)
    u[3] = -1e-13
    with pytest.warns(RuntimeWarning):
        interaction_velocity(make_kernel("ZeroV", 1.0), Field(g, u))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        interaction_velocity(make_kernel("ZeroV", 1.0), Field(g, np.abs(u)))
