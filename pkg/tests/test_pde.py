import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pdlss.errors import ConfigurationError, InstabilityError, PositivityError
from pdlss.experiments import gaussian
from pdlss.pde import SolverParams, apply_floor, rhs, rk4_step, solve
from pdlss.spectral import SampledFunction, make_grid

REF = SolverParams(mu=1.0, C=0.2, eps=0.1)


def test_coefficients():
    p = SolverParams(mu=0.5, C=0.2, eps=0.1)
    assert p.K == 4.0 / 3.0 * 0.5 * 0.2
    assert p.L == 0.1 * (0.4 - 2 * 0.04)
    assert p.L >= 0


@pytest.mark.parametrize("kw", [dict(mu=1.5, C=0.2, eps=0.1), dict(mu=0.0, C=0.3, eps=0.1),
                                dict(mu=0.0, C=0.2, eps=-1.0), dict(mu=0.0, C=0.2, eps=0.1, h=0.0)])
def test_bad_params(kw):
    with pytest.raises(ConfigurationError):
        SolverParams(**kw)


def test_from_rates():
    p = SolverParams.from_rates(4.0, 1.0, eps=0.1)
    assert p.mu == pytest.approx(-1.0 / 3.0)
    assert p.C == pytest.approx(2.0 / 9.0)


def test_rhs_constant_is_zero():
    g = make_grid(math.pi, 5)
    assert np.max(np.abs(rhs(SampledFunction(g, np.full(g.size, 3.0)), REF).values)) < 1e-12


def test_rhs_smooth_periodic_closed_form():
    g = make_grid(math.pi, 6)
    x = g.points
    p = REF.with_(eps=0.0)
    out = rhs(g.sample(lambda x: (2 + np.sin(x)) ** 2), p).values
    np.testing.assert_allclose(out, -2 * p.K * (2 + np.sin(x)) * np.cos(x), atol=1e-11)


def test_rhs_full_closed_form():
    # v = 2 + sin x: v'' = -sin, v''' = -cos, v'''' = sin
    g = make_grid(math.pi, 6)
    s, c = np.sin(g.points), np.cos(g.points)
    v = 2 + s
    expected = 2 * REF.K * v * (-c) - 2 * REF.L * (v * s - s * s)
    np.testing.assert_allclose(rhs(g.sample(lambda x: (2 + np.sin(x)) ** 2), REF).values, expected, atol=1e-11)


def _fd_rhs(w_fn, x, p, h):
    v = lambda y: np.sqrt(w_fn(y))
    st5 = lambda f, k: f(x + k * h)
    d2 = (-st5(v, -2) + 16 * st5(v, -1) - 30 * st5(v, 0) + 16 * st5(v, 1) - st5(v, 2)) / (12 * h * h)
    d3 = (-st5(v, -2) + 2 * st5(v, -1) - 2 * st5(v, 1) + st5(v, 2)) / (2 * h**3)
    d4 = (st5(v, -2) - 4 * st5(v, -1) + 6 * st5(v, 0) - 4 * st5(v, 1) + st5(v, 2)) / h**4
    vv = v(x)
    return 2 * p.K * vv * d3 - 2 * p.L * (vv * d4 - d2 * d2)


def test_rhs_gaussian_against_finite_differences():
    g = make_grid(40.0, 10)
    out = rhs(g.sample(gaussian), REF).values
    ref = _fd_rhs(gaussian, g.points, REF, g.spacing / 16)
    assert np.max(np.abs(out - ref)) < 1e-6


def test_rhs_positivity_violation():
    g = make_grid(1.0, 2)
    with pytest.raises(PositivityError):
        rhs(SampledFunction(g, [1.0, -1e-3, 1.0, 1.0]), REF)


def test_floor_examples():
    g = make_grid(1.0, 2)
    out, n = apply_floor(SampledFunction(g, [1.0, -1e-14, 2.0, 0.5]), 1e-12, conserve_mass=False)
    np.testing.assert_array_equal(out.values, [1.0, 0.0, 2.0, 0.5])
    assert n == 1
    same, n = apply_floor(SampledFunction(g, [1.0, 2.0, 3.0, 4.0]), 1e-12)
    np.testing.assert_array_equal(same.values, [1.0, 2.0, 3.0, 4.0])
    assert n == 0
    with pytest.raises(PositivityError):
        apply_floor(SampledFunction(g, [-1e-3, 1.0, 1.0, 1.0]), 1e-12)


def test_floor_conserves_mass():
    g = make_grid(1.0, 2)
    w = SampledFunction(g, [1.0, -1e-10, 2.0, 0.5])
    out, _ = apply_floor(w, 1e-8)
    assert out.values.sum() == pytest.approx(w.values.sum(), rel=1e-15)
    assert out.values.min() == 0.0


def test_rk4_constant_and_identity():
    g = make_grid(math.pi, 5)
    const = SampledFunction(g, np.full(g.size, 2.0))
    np.testing.assert_array_equal(rk4_step(const, REF).values, const.values)
    w = g.sample(lambda x: (2 + np.sin(x)) ** 2)
    frozen = SolverParams(mu=0.0, C=0.25, eps=0.0)
    np.testing.assert_array_equal(rk4_step(w, frozen).values, w.values)


def test_rk4_order_short_horizon():
    from pdlss.checks import rk4_errors

    errs, slope = rk4_errors(t_max=0.1)
    assert 3.7 <= slope <= 4.3
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    assert np.all((ratios > 8) & (ratios < 32))  # 2**4 within a factor 2


def test_solve_frozen_dynamics():
    g = make_grid(40.0, 9)
    w0 = g.sample(gaussian)
    traj = solve(w0, SolverParams(mu=0.0, C=0.25, eps=0.0, t_max=1.0), 100, 20)
    assert traj.completed
    for _, snap in traj.snapshots:
        np.testing.assert_array_equal(snap.values, w0.values)


def test_solve_snapshots_and_positivity():
    g = make_grid(128.0, 10)
    traj = solve(g.sample(gaussian), REF.with_(t_max=2.0), 200, 40)
    ts = traj.times
    assert np.all(np.diff(ts) > 0)
    np.testing.assert_allclose(ts / REF.h, np.round(ts / REF.h), atol=1e-9)
    assert all(s.values.min() >= 0.0 for _, s in traj.snapshots)
    drift = abs(traj.diagnostics[-1].a - traj.diagnostics[0].a)
    assert drift < 1e-10


def test_solve_positivity_after_every_step():
    g = make_grid(128.0, 10)
    mins = []
    solve(g.sample(gaussian), REF.with_(t_max=0.5), 1, 1, on_step=lambda s, w, tr: mins.append(w.min()))
    assert len(mins) == 201 and min(mins) >= 0.0


def test_solve_rejects_untruncated_data():
    g = make_grid(5.0, 8)
    with pytest.raises(ConfigurationError):
        solve(g.sample(gaussian), REF.with_(t_max=0.01))


def test_solve_warns_on_boundary_growth():
    g = make_grid(math.pi, 5)
    w0 = g.sample(lambda x: (2 + np.sin(x)) ** 2)
    with pytest.warns(RuntimeWarning, match="box edge"):
        traj = solve(w0, REF.with_(t_max=0.01), 4, 4, check_initial=False)
    assert traj.warnings and traj.warnings[0]["kind"] == "boundary_growth"


def test_solve_reports_instability_with_time():
    # far too coarse a step for the fourth-order term
    g = make_grid(20.0, 10)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        traj = solve(g.sample(gaussian), REF.with_(h=0.05, t_max=5.0), 10, 10)
    assert not traj.completed
    assert isinstance(traj.failure, (InstabilityError, PositivityError))
    assert traj.failure.t == pytest.approx(traj.final_step * 0.05)
    assert traj.diagnostics  # partial trajectory kept


def _short(w0, p):
    return solve(w0, p, 40, 40).final_w


@settings(max_examples=6, deadline=None)
@given(st.integers(-64, 64))
def test_translation_equivariance(shift):
    g = make_grid(128.0, 10)
    w0 = g.sample(gaussian)
    p = REF.with_(t_max=0.1)
    a = _short(w0, p)
    b = _short(SampledFunction(g, np.roll(w0.values, shift)), p)
    assert np.max(np.abs(np.roll(a, shift) - b)) < 1e-12


@settings(max_examples=6, deadline=None)
@given(st.floats(0.25, 4.0))
def test_amplitude_equivariance(scale):
    # the flow is homogeneous of degree one in w
    g = make_grid(128.0, 10)
    w0 = g.sample(gaussian)
    p = REF.with_(t_max=0.1)
    a = _short(w0, p)
    b = _short(SampledFunction(g, scale * w0.values), p)
    assert np.max(np.abs(scale * a - b)) < 1e-11 * scale


def test_reflection_equivariance():
    # x -> -x maps the flow with K to the flow with -K
    g = make_grid(128.0, 10)
    w0 = g.sample(lambda x: gaussian(x - 1.0) + 0.5 * gaussian(x + 2.0))
    a = _short(w0, REF.with_(t_max=0.1))
    mirrored = np.roll(w0.values[::-1], 1)  # grid is symmetric about 0 up to the first point
    b = _short(SampledFunction(g, mirrored), REF.with_(mu=-1.0, t_max=0.1))
    assert np.max(np.abs(np.roll(a[::-1], 1) - b)) < 1e-12
