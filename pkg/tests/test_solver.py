import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from aggregation1d.diagnostics import decay_bound, lp_norm
from aggregation1d.grid import Field, Grid
from aggregation1d.kernel import interaction_velocity, make_kernel, v_convolution
from aggregation1d.reference import rarefaction, rarefaction_derivative
from aggregation1d.solver import (
    BoundaryMassError,
    PositivityError,
    SolverConfig,
    evolve,
    initial_datum,
    primitive,
    required_half_width,
    stable_dt,
    step,
)

ZERO2 = make_kernel("ZeroV", 2.0)
EXP = make_kernel("ExponentialBump", 2.0, 0.5)


# --- configuration and grids -------------------------------------------------


def test_grid_geometry():
    g = Grid(2.0, 16)
    assert g.dx == 0.25
    assert g.x[0] == pytest.approx(-1.875)
    assert np.all(np.diff(g.x) > 0)
    with pytest.raises(ValueError):
        Grid(1.0, 8)
    with pytest.raises(ValueError):
        Grid(-1.0, 32)


def test_field_validation():
    g = Grid(1.0, 16)
    with pytest.raises(ValueError):
        Field(g, np.zeros(15))
    with pytest.raises(ValueError):
        Field(g, np.full(16, np.inf))
    with pytest.raises(ValueError):
        Field(g, np.zeros(16), time=-1.0)


@pytest.mark.parametrize(
    "kw",
    [dict(epsilon=-0.1), dict(cfl=0.0), dict(cfl=1.5), dict(t_end=0.0), dict(checkpoint_times=[2.0, 1.0]),
     dict(t_end=1.0, checkpoint_times=[2.0])],
)
def test_solver_config_rejects(kw):
    with pytest.raises(ValueError):
        SolverConfig(**kw)


def test_solver_config_defaults():
    cfg = SolverConfig()
    assert cfg.cfl == 0.4
    assert cfg.boundary_tol == 1e-8
    assert SolverConfig(t_end=10, checkpoint_times=[1, 2, 5]).output_gap == 1.0


# --- initial data -------------------------------------------------------------


def test_gaussian_datum_mass_one():
    u0 = initial_datum("Gaussian", Grid(50.0, 2048), center=0.0, variance=1.0)
    assert u0.mass == pytest.approx(1.0, abs=1e-15)
    assert u0.values.min() >= 0


def test_box_datum_height():
    u0 = initial_datum("Box", Grid(10.0, 1000), lo=-1.0, hi=1.0)
    assert np.max(u0.values) == pytest.approx(0.5, abs=1e-12)
    assert u0.mass == pytest.approx(1.0, abs=1e-15)


def test_double_bump_first_moment():
    u0 = initial_datum("DoubleBump", Grid(20.0, 2048), centers=(-3.0, 3.0), variance=1.0)
    fm = u0.meta["first_moment"]
    assert math.isfinite(fm)
    # E|X| for an equal mixture of N(+-3, 1) is 3 erf(3/sqrt 2) + 2 phi(3)
    exact = 3 * math.erf(3 / math.sqrt(2)) + 2 * math.exp(-4.5) / math.sqrt(2 * math.pi)
    assert fm == pytest.approx(exact, abs=1e-4)


def test_datum_touching_boundary_rejected():
    with pytest.raises(BoundaryMassError):
        initial_datum("Gaussian", Grid(3.0, 256), variance=1.0)


def test_unknown_datum():
    with pytest.raises(ValueError):
        initial_datum("Triangle", Grid(3.0, 256))


# --- stable dt ----------------------------------------------------------------


def test_stable_dt_advective():
    g = Grid(1.0, 200)  # dx = 0.01
    vals = np.zeros(g.N)
    vals[90:110] = 1.0
    u = Field(g, vals / (g.dx * vals.sum()))
    a = interaction_velocity(ZERO2, u).values
    assert np.max(np.abs(a)) == pytest.approx(1.0, abs=1e-15)
    dt = stable_dt(u, ZERO2, SolverConfig(epsilon=0.0, t_end=100.0))
    assert dt == pytest.approx(0.004, rel=1e-12)


def test_stable_dt_diffusive():
    g = Grid(1.0, 200)
    dt = stable_dt(Field(g, np.zeros(g.N)), ZERO2, SolverConfig(epsilon=1.0, t_end=100.0))
    assert dt == pytest.approx(2e-5, rel=1e-12)


def test_stable_dt_zero_state_capped_by_output_gap():
    g = Grid(1.0, 200)
    dt = stable_dt(Field(g, np.zeros(g.N)), ZERO2, SolverConfig(epsilon=0.0, t_end=3.0))
    assert dt == pytest.approx(0.4 * 3.0)
    assert math.isfinite(dt)


# --- single steps -----------------------------------------------------------------


def test_zero_is_fixed_point():
    g = Grid(1.0, 64)
    out = step(Field(g, np.zeros(g.N)), EXP, SolverConfig(epsilon=0.3), 1e-4)
    assert np.all(out.values == 0)


@given(
    seed=st.integers(0, 2**31),
    eps=st.sampled_from([0.0, 0.05, 0.5]),
    family=st.sampled_from(["ZeroV", "ExponentialBump", "OddSmooth"]),
)
def test_step_conserves_mass(seed, eps, family):
    rng = np.random.default_rng(seed)
    g = Grid(10.0, 256)
    vals = np.zeros(g.N)
    vals[64:192] = rng.random(128)
    u = Field(g, vals / (g.dx * vals.sum()))
    k = make_kernel(family, 2.0, 0.4 if family != "ZeroV" else 0.0)
    cfg = SolverConfig(epsilon=eps, t_end=1.0)
    out = step(u, k, cfg, stable_dt(u, k, cfg))
    assert abs(out.mass - u.mass) <= 1e-13
    assert out.values.min() >= -1e-10


def test_step_preserves_symmetry():
    g = Grid(10.0, 512)
    u = initial_datum("DoubleBump", g, centers=(-2.0, 2.0), variance=0.5)
    cfg = SolverConfig(epsilon=0.1, t_end=1.0)
    out = step(u, ZERO2, cfg, stable_dt(u, ZERO2, cfg))
    assert np.max(np.abs(out.values - out.values[::-1])) <= 1e-13


def test_oversized_step_reports_positivity():
    g = Grid(10.0, 256)
    u = initial_datum("Box", g, lo=-1.0, hi=1.0)
    with pytest.raises(PositivityError) as info:
        # diffusive number eps dt / dx^2 ~ 8, far beyond the explicit limit
        step(u, ZERO2, SolverConfig(epsilon=0.1), 0.5)
    assert info.value.time == pytest.approx(0.5)


def test_boundary_mass_detected():
    g = Grid(6.0, 256)
    u0 = initial_datum("Gaussian", g, variance=0.3)
    with pytest.raises(BoundaryMassError) as info:
        evolve(u0, ZERO2, SolverConfig(epsilon=0.0, t_end=20.0))
    assert info.value.time is not None and info.value.time < 20.0


# --- evolution ----------------------------------------------------------------


def test_empty_evolution():
    g = Grid(10.0, 256)
    u0 = initial_datum("Gaussian", g)
    u0 = u0.with_values(u0.values, time=2.0)
    out = evolve(u0, ZERO2, SolverConfig(t_end=2.0))
    assert out is u0


def test_observer_schedule():
    g = Grid(20.0, 512)
    u0 = initial_datum("Gaussian", g)
    seen = []
    evolve(u0, EXP, SolverConfig(epsilon=0.1, t_end=4.0, checkpoint_times=[1, 2, 4]), observer=lambda u: seen.append(u.time))
    assert seen == [1.0, 2.0, 4.0]


def test_observer_sees_initial_checkpoint():
    g = Grid(20.0, 256)
    u0 = initial_datum("Gaussian", g)
    seen = []
    evolve(u0, EXP, SolverConfig(t_end=1.0, checkpoint_times=[0.0, 1.0]), observer=lambda u: seen.append(u.time))
    assert seen == [0.0, 1.0]


def test_evolve_deterministic():
    g = Grid(30.0, 1024)
    u0 = initial_datum("Gaussian", g)
    cfg = SolverConfig(epsilon=0.05, t_end=5.0)
    a = evolve(u0, EXP, cfg).values
    b = evolve(u0, EXP, cfg).values
    assert np.array_equal(a, b)


@pytest.mark.parametrize("eps", [0.0, 0.2])
def test_windowed_matches_full_grid(eps):
    g = Grid(60.0, 4096)
    u0 = initial_datum("Gaussian", g, variance=0.5)
    cfg = SolverConfig(epsilon=eps, t_end=8.0, checkpoint_times=[2.0, 8.0])
    win = evolve(u0, EXP, cfg, windowed=True)
    full = evolve(u0, EXP, cfg, windowed=False)
    assert np.max(np.abs(win.values - full.values)) < 1e-14
    assert abs(win.mass - 1.0) < 1e-13


def test_linf_decay_bound_zero_kernel():
    t_end = 100.0
    L = required_half_width(2.0, t_end, 8.0)
    g = Grid(L, 4096)
    u0 = initial_datum("Gaussian", g)
    out = evolve(u0, ZERO2, SolverConfig(epsilon=0.1, t_end=t_end))
    assert lp_norm(out, "inf") <= 1.05 * decay_bound("inf", t_end, 2.0, 0.0)


def test_refinement_first_order():
    # ||u(T)||_2 on successively doubled grids: differences shrink by ~2
    norms = []
    for N in (512, 1024, 2048):
        g = Grid(20.0, N)
        u0 = initial_datum("Gaussian", g)
        norms.append(lp_norm(evolve(u0, EXP, SolverConfig(epsilon=0.0, t_end=5.0)), 2))
    d1, d2 = abs(norms[0] - norms[1]), abs(norms[1] - norms[2])
    assert 1.5 < d1 / d2 < 2.6


# --- primitive ----------------------------------------------------------------


def test_primitive_gaussian():
    g = Grid(10.0, 1001)  # odd N puts a cell centre at 0
    u0 = initial_datum("Gaussian", g)
    U = primitive(u0)
    assert U.values[500] == pytest.approx(0.0, abs=g.dx)
    assert np.all(np.diff(U.values) >= 0)


@given(st.integers(0, 2**31))
def test_primitive_endpoints(seed):
    rng = np.random.default_rng(seed)
    g = Grid(5.0, 200)
    u = Field(g, rng.random(g.N))
    u = u.with_values(u.values / u.mass)
    U = primitive(u).values
    assert U.max() == pytest.approx(0.5 - 0.5 * g.dx * u.values[-1], abs=1e-12)
    assert abs(U.max() - 0.5) <= g.dx * u.values.max()
    assert abs(U.min() + 0.5) <= g.dx * u.values.max()


def test_primitive_of_self_similar_profile():
    t, A = 4.0, 2.0
    for N in (400, 800):
        g = Grid(8.0, N)
        u = Field(g, rarefaction_derivative(g.x, t, A))
        U = primitive(u).values
        assert np.max(np.abs(U - rarefaction(g.x, t, A))) <= 2 * g.dx / (A * t) + 1e-12


def test_velocity_consistency_after_evolution():
    g = Grid(40.0, 2048)
    u = evolve(initial_datum("Gaussian", g), EXP, SolverConfig(epsilon=0.1, t_end=3.0))
    a = interaction_velocity(EXP, u).values
    alt = -EXP.A * primitive(u).values + v_convolution(EXP, u).values
    assert np.max(np.abs(a - alt)) <= 1e-10


def test_margin_rule():
    assert required_half_width(2.0, 1000.0, 8.0) == pytest.approx(1508.0)
