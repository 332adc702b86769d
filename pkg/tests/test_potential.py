import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from supersol.errors import ConstructionError, ParameterError
from supersol.grid import RadialGrid
from supersol.potential import (CoefficientProfile, build_radial_potential, closed_form_potential,
                                structural_constants, verify_potential)

# A(r) and A'(r) for a = (1+r^2)^(-alpha/2) by nested mpmath quadrature (30 digits)
QUAD_ORACLE = {
    (3, 0.5): [(1.0, 0.156807321767422241, 0.29772123190419715),
               (5.0, 2.66685978688316078, 0.868508092089745404),
               (20.0, 23.3843923683720355, 1.78445944308058849)],
    (2, 0.3): [(1.0, 0.242367900633050808, 0.472059367777447346),
               (5.0, 4.91215234592474318, 1.75867947470552823),
               (20.0, 55.4532551260186504, 4.77006396319435179)],
    (1, 0.3): [(1.0, 0.489621354042768831, 0.961680721820216178),
               (5.0, 10.4955566048952385, 3.85779079568457593),
               (20.0, 125.99469870209865, 11.0697988982992843)],
}


def test_grid_basics():
    g = RadialGrid(0.0, 1.0, 0.1, 3)
    assert g.n == 11 and g.whole_space
    assert g.r[-1] == 1.0
    # int_0^1 r^4 dr = 1/5 plus the trapezoid error h^2/12 [f'] - h^4/720 [f''']
    assert g.integrate(g.r ** 2) == pytest.approx(0.2 + 0.01 / 3 - 1e-4 / 30, rel=1e-12)
    assert RadialGrid.covering(0.0, 1.05, 0.1, 3).rmax == pytest.approx(1.1)
    with pytest.raises(ConstructionError):
        RadialGrid(0.0, 0.5, 0.1, 3)
    with pytest.raises(ConstructionError):
        RadialGrid(0.0, 1.05, 0.1, 3)
    with pytest.raises(ParameterError):
        RadialGrid(0.0, 1.0, 0.1, 0)
    with pytest.raises(ConstructionError):
        g.check_field(np.zeros(5))


@pytest.mark.parametrize("N,alpha", [(2, 0.0), (3, 0.0), (2, 0.5), (3, 0.5), (1, 0.5)])
def test_pure_power_matches_closed_form(N, alpha):
    grid = RadialGrid(0.0, 10.0, 1e-3, N)
    profile = CoefficientProfile(alpha, 1.3, "pure-power", N)
    pt = build_radial_potential(profile, grid)
    exact = closed_form_potential(alpha, 1.3, N, grid.r)
    pos = grid.r > 0
    assert np.max(np.abs(pt.A[pos] / exact[pos] - 1)) < 1e-6
    assert pt.A[0] == 0


@pytest.mark.parametrize("N,alpha", sorted(QUAD_ORACLE))
def test_japanese_bracket_matches_quadrature(N, alpha):
    grid = RadialGrid(0.0, 30.0, 0.01, N)
    pt = build_radial_potential(CoefficientProfile(alpha, 1.0, "japanese-bracket", N), grid)
    for r, A, Ap in QUAD_ORACLE[(N, alpha)]:
        i = int(round(r / grid.dr))
        assert pt.A[i] == pytest.approx(A, rel=1e-5)
        assert pt.Aprime[i] == pytest.approx(Ap, rel=1e-5)


def test_exterior_grid_uses_integrals_from_origin():
    whole = build_radial_potential(CoefficientProfile(0.5, 1.0, "japanese-bracket", 3),
                                   RadialGrid(0.0, 10.0, 0.01, 3))
    ext = build_radial_potential(CoefficientProfile(0.5, 1.0, "japanese-bracket", 3),
                                 RadialGrid(1.0, 10.0, 0.01, 3))
    assert ext.A == pytest.approx(whole.A[100:], rel=1e-12)


def test_laplacian_of_table_by_finite_differences():
    N, alpha = 3, 0.5
    grid = RadialGrid(0.0, 20.0, 0.01, N)
    pt = build_radial_potential(CoefficientProfile(alpha, 1.0, "japanese-bracket", N), grid)
    r, A, h = grid.r, pt.A, grid.dr
    i = np.arange(10, grid.n - 1)
    lap = (A[i + 1] - 2 * A[i] + A[i - 1]) / h ** 2 + (N - 1) / r[i] * (A[i + 1] - A[i - 1]) / (2 * h)
    assert np.max(np.abs(lap / pt.a[i] - 1)) < 1e-4


@pytest.mark.parametrize("N,alpha,eps", [(3, 0.5, 0.1), (2, 0.3, 0.05), (1, 0.3, 0.1), (3, 0.0, 0.1)])
def test_verification_passes_for_bracket_profiles(N, alpha, eps):
    grid = RadialGrid(0.0, 200.0, 0.01, N)
    profile = CoefficientProfile(alpha, 1.0, "japanese-bracket", N)
    rep = verify_potential(build_radial_potential(profile, grid), profile, eps)
    assert rep.passed
    assert rep.a3_max < rep.a3_target
    assert 0 < rep.c_fit <= rep.C_fit


def test_gradient_ratio_limit_for_pure_power():
    N, alpha = 3, 0.5
    grid = RadialGrid(0.0, 5.0, 0.01, N)
    profile = CoefficientProfile(alpha, 1.0, "pure-power", N)
    pt = build_radial_potential(profile, grid)
    # (A')^2/(aA) = (2-alpha)/(N-alpha) identically
    assert pt.ratio_a3 == pytest.approx((2 - alpha) / (N - alpha), rel=1e-6)
    rep = verify_potential(pt, profile, 0.0)
    assert rep.smallest_eps < 1e-6


def test_verification_flags_a_bumpy_coefficient():
    # a jump of the coefficient makes A' large where a is small again
    tr = np.linspace(0.0, 50.0, 5001)
    ta = np.where((tr > 2) & (tr < 3), 20.0, 1.0)
    profile = CoefficientProfile(0.0, 1.0, "tabulated", 3, tuple(tr), tuple(ta))
    rep = verify_potential(build_radial_potential(profile, RadialGrid(0.0, 40.0, 0.01, 3)), profile, 0.1)
    assert rep.a1_pass and not rep.a3_pass and not rep.passed
    assert rep.a3_witness_r == pytest.approx(3.0)


def test_tabulated_profile_reproduces_bracket():
    N, alpha = 3, 0.5
    tr = np.linspace(0.0, 50.0, 5001)
    ta = (1 + tr ** 2) ** (-alpha / 2)
    tab = CoefficientProfile(alpha, 1.0, "tabulated", N, tuple(tr), tuple(ta))
    grid = RadialGrid(0.0, 40.0, 0.02, N)
    a = build_radial_potential(tab, grid).A
    b = build_radial_potential(CoefficientProfile(alpha, 1.0, "japanese-bracket", N), grid).A
    assert a[1:] == pytest.approx(b[1:], rel=1e-4)


def test_profile_errors():
    with pytest.raises(ParameterError):
        CoefficientProfile(2.0, 1.0, "pure-power", 3)
    with pytest.raises(ParameterError):
        CoefficientProfile(0.5, 0.0, "pure-power", 3)
    with pytest.raises(ParameterError):
        CoefficientProfile(0.5, 1.0, "gaussian", 3)
    with pytest.raises(ParameterError):
        CoefficientProfile(0.5, 1.0, "tabulated", 3)
    with pytest.raises(ParameterError):
        CoefficientProfile(0.5, 1.0, "tabulated", 3, (0.0, 10.0), (1.0, 0.1))
    with pytest.raises(ConstructionError):
        build_radial_potential(CoefficientProfile(1.5, 1.0, "pure-power", 1), RadialGrid(0, 10, 0.1, 1))
    with pytest.raises(ParameterError):
        structural_constants(0.5, 3, 1.0)
    with pytest.raises(ParameterError):
        structural_constants(1.0, 1, 0.1)


def test_structural_constants():
    c = structural_constants(0.0, 3, 0.1)
    assert c.gamma_tilde == pytest.approx(1 / (2 / 3 + 0.1))
    assert c.gamma == pytest.approx(0.9 * c.gamma_tilde)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 4), st.floats(0.0, 0.9), st.floats(0.2, 3.0))
def test_potential_is_increasing_and_scales_with_amplitude(N, alpha, a0):
    grid = RadialGrid(0.0, 20.0, 0.05, N)
    base = build_radial_potential(CoefficientProfile(alpha, 1.0, "japanese-bracket", N), grid)
    scaled = build_radial_potential(CoefficientProfile(alpha, a0, "japanese-bracket", N), grid)
    assert np.all(np.diff(base.A) > 0)
    assert np.all(base.Aprime[1:] > 0)
    assert scaled.A == pytest.approx(a0 * base.A, rel=1e-12, abs=1e-300)
    # the gradient ratio never exceeds its origin value by more than the bracket correction
    assert np.nanmax(base.ratio_a3) <= 2.0 / (N - alpha) + 1e-12
