import math

import numpy as np
import pytest

from pdlss import checks, oracle
from pdlss.errors import ConfigurationError, DomainError
from pdlss.pde import SolverParams
from pdlss.spectral import SampledFunction, make_grid

REF = SolverParams(mu=1.0, C=0.2, eps=0.1)


def test_sin_wave_values():
    sol = oracle.ExactSolution("sin_wave", oracle.Coefficients(K=0.7, L=0.0))
    x = np.linspace(-3, 3, 11)
    np.testing.assert_allclose(sol(0.0, x), np.sin(x))
    np.testing.assert_allclose(sol(2 * math.pi / 0.7, x), np.sin(x), atol=1e-12)


def test_airy_at_origin():
    sol = oracle.ExactSolution("airy_profile", oracle.Coefficients(K=-1.0, L=0.0))
    assert sol(1.0, 0.0) == pytest.approx(0.3550280539, abs=1e-9)


def test_airy_requires_positive_time_and_K():
    sol = oracle.ExactSolution("airy_profile", REF)
    with pytest.raises(DomainError):
        sol(0.0, 1.0)
    with pytest.raises(ConfigurationError):
        oracle.ExactSolution("airy_profile", oracle.Coefficients(K=0.0, L=0.1))
    with pytest.raises(ConfigurationError):
        oracle.ExactSolution("cosh_wave", REF)


def test_period_check():
    sol = oracle.ExactSolution("sin_wave", oracle.Coefficients(K=1.0, L=0.0))
    oracle.check_period(sol, make_grid(2 * math.pi, 4))
    with pytest.raises(ConfigurationError):
        oracle.check_period(sol, make_grid(3.0, 4))


def test_sin_wave_residual():
    assert checks.sin_wave_residual() < 1e-6


def test_airy_residual_negative_K():
    assert checks.airy_residual() < 1e-5
    assert checks.airy_residual(1.005) < 1e-5


def test_airy_residual_positive_K():
    # real cube root: the mirrored profile solves the K > 0 flow
    sol = oracle.ExactSolution("airy_profile", REF)
    res, n = oracle.windowed_airy_residual(sol, make_grid(40.0, 10), 1.0, -30.0, 30.0, 8.0)
    assert res < 1e-5 and n > 50


def test_second_kind_residual_on_window():
    sol = oracle.ExactSolution("airy_second_kind_profile", oracle.Coefficients(K=-1.0, L=0.0))
    grid = make_grid(40.0, 10)
    win = oracle.smooth_window(grid.points, -25.0, 2.0, 6.0)
    field = oracle.sampled_field(sol, grid, win)
    mask = (win == 1.0) & (np.abs(field(1.0).values) > 1e-3)
    assert oracle.v_residual(field, 1.0, sol.params, restrict=True, mask=mask) < 1e-5


def test_non_solution_detected():
    g = make_grid(math.pi, 6)
    v = g.sample(lambda x: np.exp(np.sin(x)))
    res = oracle.v_residual(lambda t: v, 0.0, oracle.Coefficients(K=1.0, L=0.0))
    x = g.points
    d3 = np.exp(np.sin(x)) * (np.cos(x) ** 3 - 3 * np.sin(x) * np.cos(x) - np.cos(x))
    assert res == pytest.approx(np.max(np.abs(d3)), rel=1e-8)
    assert res > 0.1


def test_small_v_needs_restriction():
    g = make_grid(math.pi, 6)
    sol = oracle.ExactSolution("sin_wave", oracle.Coefficients(K=0.0, L=0.1))
    field = oracle.sampled_field(sol, g)
    with pytest.raises(DomainError):
        oracle.v_residual(field, 0.0, sol.params)
    # with K = 0, sin also solves the L > 0 flow: v'''' = v''**2 / v
    assert oracle.v_residual(field, 0.0, sol.params, restrict=True) < 1e-6


def test_w_identity():
    g = make_grid(math.pi, 7)
    assert oracle.w_residual_identity_check(g.sample(lambda x: 2 + np.sin(x)), REF) < 1e-8
    assert oracle.w_residual_identity_check(SampledFunction(g, np.full(g.size, 3.0)), REF) == 0.0
    k0 = oracle.Coefficients(K=0.0, L=REF.L)
    assert oracle.w_residual_identity_check(g.sample(lambda x: 2 + np.cos(2 * x)), k0) < 1e-8


def test_w_identity_rejects_small_v():
    g = make_grid(math.pi, 5)
    with pytest.raises(DomainError):
        oracle.w_residual_identity_check(g.sample(np.sin), REF)


def test_sinh_finite_difference_residual():
    sol = oracle.ExactSolution("sinh_wave", REF)
    assert oracle.fd_v_residual(sol, 0.3, np.linspace(0.5, 2.0, 7)) < 1e-5
    with pytest.raises(ConfigurationError):
        oracle.check_period(sol, make_grid(math.pi, 4))
