import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from supersol.diagnostics import (EnergyConfig, RateSeries, delta_phi_check, diffusion_compare,
                                  diffusion_target, fit_rate, hardy_check, hardy_constant,
                                  hardy_lambda_bound, random_test_functions, running_sup_check,
                                  series_from, weighted_l2)
from supersol.errors import DataError, ParameterError
from supersol.grid import RadialGrid
from supersol.pde import FieldState, WaveState
from supersol.potential import CoefficientProfile, build_radial_potential, structural_constants
from supersol.supersolution import SupersolutionParams, eval_phi_field, laplacian_phi


def test_fit_rate_exact_power_law():
    t = np.linspace(1.0, 100.0, 200)
    fit = fit_rate(RateSeries(t, 3.0 * t ** -0.75))
    assert fit.slope == pytest.approx(-0.75, abs=1e-12)
    assert fit.rsq == pytest.approx(1.0)
    assert fit.n_points == int(np.sum(t >= 10.0))


def test_fit_rate_log_corrected():
    t = np.geomspace(1.0, 1e4, 100)
    v = t ** -1.2 * np.sqrt(np.log(2.0 + t))
    assert fit_rate(RateSeries(t, v), (10.0, 1e4), log_corrected=True).slope == pytest.approx(-1.2, abs=1e-12)
    assert fit_rate(RateSeries(t, v), (10.0, 1e4)).slope > -1.2


def test_fit_rate_errors():
    t = np.linspace(1.0, 10.0, 20)
    with pytest.raises(DataError):
        fit_rate(RateSeries(t, -t))
    with pytest.raises(DataError):
        fit_rate(RateSeries(t, t), (9.5, 10.0))
    with pytest.raises(DataError):
        RateSeries(t[::-1], t)
    with pytest.raises(DataError):
        RateSeries(t, t[:-1])


def test_running_sup():
    t = np.arange(1.0, 11.0)
    ok, before, after = running_sup_check(RateSeries(t, np.array([1, 3, 2, 2, 2, 2, 2, 2, 3.1, 1.0])), 5.0)
    assert ok and before == 3 and after == 3.1
    assert not running_sup_check(RateSeries(t, t), 5.0)[0]
    with pytest.raises(DataError):
        running_sup_check(RateSeries(t, t), 20.0)


def test_diffusion_target_values():
    # sigma >= alpha: -sigma/(2-alpha) - 2(1-alpha)/(2-alpha) with the log factor
    assert diffusion_target(3, 0.0, 1.0) == (pytest.approx(-1.5), True)
    exp, logc = diffusion_target(3, 0.5, 0.25)
    assert not logc
    assert exp == pytest.approx(-0.25 / 1.5 - 2 * 0.5 * 0.25 / (1.5 * 0.5))
    with pytest.raises(ParameterError):
        diffusion_target(3, 0.5, 1.3)


def test_hardy_constant_and_bound():
    assert hardy_constant(3, 0.0, 0.0, 1.0) == pytest.approx(8.0 / 3.0)
    c = 2.0 / 3.0 + 0.1
    assert hardy_constant(3, 0.0, 0.1, 0.5) == pytest.approx(4 * c / (0.9 - 0.5 * c) ** 2)
    lam = hardy_lambda_bound(3, 0.5, 0.1)
    c = 1.5 / 2.5 + 0.1
    assert 1 - 0.1 + (lam - 1) * c == pytest.approx(0.0, abs=1e-14)
    with pytest.raises(ParameterError):
        hardy_constant(3, 0.5, 0.1, lam - 1e-3)


def test_hardy_is_sharp_for_constant_coefficient():
    # a = 1, N = 3, Psi = A = r^2/6: int w^2 <= (4/9) int r^2 |w'|^2, with near-extremals
    # r^(-3/2) g(log r) reaching the constant up to (4/9) int g'^2 / int g^2
    grid = RadialGrid(1.0, 1e4, 0.01, 3)
    prof = CoefficientProfile(0.0, 1.0, "pure-power", 3)
    pt = build_radial_potential(prof, grid)
    L = math.log(1e4)
    w = grid.r ** -1.5 * np.sin(math.pi * np.log(grid.r) / L)
    w[-1] = 0.0
    lhs, rhs, C = hardy_check(w, 1.0, 0.0, pt, prof, grid, t=0.0, t0=0.0)
    ratio = lhs / (C * rhs)
    assert ratio <= 1.0
    assert ratio == pytest.approx(1.0 / (1.0 + (4.0 / 9.0) * (math.pi / L) ** 2), rel=2e-3)


def test_hardy_check_errors():
    grid = RadialGrid(0.0, 10.0, 0.1, 3)
    prof = CoefficientProfile(0.5, 1.0, "japanese-bracket", 3)
    pt = build_radial_potential(prof, grid)
    with pytest.raises(ParameterError):
        hardy_check(np.zeros(grid.n), -5.0, 0.1, pt, prof, grid)
    w = np.ones(grid.n)
    with pytest.raises(ParameterError):
        hardy_check(w, 1.0, 0.1, pt, prof, grid)


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 3), st.floats(0.0, 0.9), st.floats(0.02, 0.3), st.floats(0.0, 2.0),
       st.integers(0, 2 ** 16))
def test_hardy_inequality_property(N, alpha, eps, lam_excess, seed):
    grid = RadialGrid(0.0, 60.0, 0.05, N)
    prof = CoefficientProfile(alpha, 1.0, "japanese-bracket", N)
    pt = build_radial_potential(prof, grid)
    lam = max(hardy_lambda_bound(N, alpha, eps), 0.0) + 0.05 + lam_excess
    for w in random_test_functions(grid, 3, seed=seed):
        lhs, rhs, C = hardy_check(w, lam, eps, pt, prof, grid, t=1.0)
        assert lhs <= C * rhs * (1 + 1e-8)


def test_random_test_functions_deterministic_and_admissible():
    grid = RadialGrid(1.0, 20.0, 0.05, 2)
    a = random_test_functions(grid, 5, seed=7)
    b = random_test_functions(grid, 5, seed=7)
    assert all(np.array_equal(x, y) for x, y in zip(a, b))
    assert all(f[0] == 0 and f[-1] == 0 and np.any(f != 0) for f in a)
    assert not np.array_equal(a[0], random_test_functions(grid, 1, seed=8)[0])


def test_delta_phi_inequality_on_random_functions():
    N, alpha, eps = 3, 0.5, 0.1
    grid = RadialGrid(0.0, 80.0, 0.05, N)
    prof = CoefficientProfile(alpha, 1.0, "japanese-bracket", N)
    pt = build_radial_potential(prof, grid)
    sp = SupersolutionParams.from_sigma(0.75, alpha, N, eps)
    for t in (0.0, 20.0):
        phi = eval_phi_field(sp, pt, t)
        lap = laplacian_phi(sp, pt, t)
        for u in random_test_functions(grid, 10, seed=3):
            lhs, rhs = delta_phi_check(u, phi, lap, 0.1, grid)
            assert lhs <= rhs + 1e-8 * abs(rhs)
    with pytest.raises(ParameterError):
        delta_phi_check(u, phi, lap, 0.5, grid)


def test_weighted_l2_and_energy_config():
    grid = RadialGrid(0.0, 10.0, 0.01, 1)
    prof = CoefficientProfile(0.0, 1.0, "pure-power", 1)
    f = np.where(grid.r < 10.0, 1.0, 0.0)
    assert weighted_l2(f, 0.0, prof, grid) == pytest.approx(math.sqrt(10.0), rel=1e-3)
    cfg = EnergyConfig(0.3, 0.1)
    assert cfg.beta == pytest.approx(0.375)
    cfg.check(structural_constants(0.0, 3, 0.1))
    with pytest.raises(ParameterError):
        EnergyConfig(2.0, 0.1).check(structural_constants(0.0, 3, 0.1))
    for bad in (dict(lambda_=0.0, delta=0.1), dict(lambda_=0.3, delta=0.5),
                dict(lambda_=0.3, delta=0.1, k=2), dict(lambda_=0.3, delta=0.1, j=2),
                dict(lambda_=0.3, delta=0.1, nu=0.0)):
        with pytest.raises(ParameterError):
            EnergyConfig(**bad)


def test_diffusion_compare_and_series_from():
    grid = RadialGrid(0.0, 5.0, 0.1, 1)
    prof = CoefficientProfile(0.0, 1.0, "pure-power", 1)
    z = np.zeros(grid.n)
    one = np.where(grid.r < 5.0, 1.0, 0.0)
    wave = [WaveState(t, one * t, z, z, 0.0, 0.0) for t in (1.0, 2.0)]
    heat = [FieldState(t, z) for t in (1.0, 2.0)]
    s = diffusion_compare(wave, heat, prof, grid)
    assert s.values[1] / s.values[0] == pytest.approx(2.0)
    with pytest.raises(DataError):
        diffusion_compare(wave, heat[:1], prof, grid)
    with pytest.raises(DataError):
        diffusion_compare(wave, [FieldState(1.0, z), FieldState(3.0, z)], prof, grid)
    series = series_from([FieldState(0.0, z)] + heat, lambda st_: st_.t)
    assert list(series.t) == [1.0, 2.0]
