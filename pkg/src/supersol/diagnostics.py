"""
Weighted norms and energies of radial fields, the weighted Hardy inequality,
log-log rate fits and the wave/parabolic comparison.

All space integrals are trapezoid sums against ``r^{N-1} dr`` (the area of
the unit sphere is dropped) and gradients are second-order differences with
one-sided closure at the ends.  With ``Psi = t0 + t + A(r)``:

    E1       = int (|grad u|^2 + u_t^2) Psi^(lambda + alpha/(2-alpha))
    E0       = int (2 u u_t + a u^2) Phi_beta^(-1+2 delta)
    E1_tilde = (t0+t) int (|grad u|^2 + u_t^2) Psi^lambda
    E1^(k,j)[w] = (t0+t)^j int (|grad w|^2 + w_t^2) Psi^(lambda + (2k+1-j) alpha/(2-alpha))
    E0^(k,j)[w] = (t0+t)^j int (2 w w_t + a w^2) Psi^(lambda + (2k-j) alpha/(2-alpha))
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import ContractError, DataError, ParameterError
from .grid import RadialGrid
from .pde import WaveState, FieldState, coefficient_on_grid, laplacian_radial
from .potential import CoefficientProfile, PotentialTable, StructuralConstants
from .supersolution import SupersolutionParams, WeightField, eval_phi_field

MIN_FIT_POINTS = 8


@dataclass(frozen=True)
class EnergyConfig:
    """Exponent ``lambda``, ``delta``, order ``(k, j)`` and coupling ``nu``."""

    lambda_: float
    delta: float
    k: int = 0
    j: int = 0
    nu: float = 1e-2

    def __post_init__(self):
        if not self.lambda_ > 0:
            raise ParameterError(f"lambda={self.lambda_} must be positive")
        if not 0 < self.delta < 0.5:
            raise ParameterError(f"delta={self.delta} must lie in (0, 1/2)")
        if self.k not in (0, 1):
            raise ParameterError(f"k={self.k}: only k in {{0, 1}} is supported")
        if not 0 <= self.j <= 2 * self.k + 1:
            raise ParameterError(f"j={self.j} outside [0, {2 * self.k + 1}]")
        if not self.nu > 0:
            raise ParameterError(f"nu={self.nu} must be positive")

    def check(self, consts: StructuralConstants) -> None:
        """Raise unless ``lambda < (1 - 2 delta) gamma_eps``."""
        bound = (1.0 - 2.0 * self.delta) * consts.gamma
        if not self.lambda_ < bound:
            raise ParameterError(f"lambda={self.lambda_} must be < (1-2 delta) gamma_eps = {bound:.6g}")

    @property
    def beta(self) -> float:
        return self.lambda_ / (1.0 - 2.0 * self.delta)


@dataclass(frozen=True)
class RateSeries:
    t: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.shape != v.shape or t.ndim != 1:
            raise DataError("times and values must be 1-D arrays of equal length")
        if np.any(np.diff(t) <= 0):
            raise DataError("times must be strictly increasing")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    rsq: float
    log_corrected: bool
    n_points: int


# ---------------------------------------------------------------------------
# norms and energies


def _bracket(r):
    return np.sqrt(1.0 + r * r)


def weighted_l2(f, weight_exponent: float, profile: CoefficientProfile, grid: RadialGrid) -> float:
    """``( int |f|^2 <r>^(2 w) a(r) r^{N-1} dr )^(1/2)``."""
    f = grid.check_field(f, "f")
    a = coefficient_on_grid(profile, grid)
    return math.sqrt(grid.integrate(f * f * _bracket(grid.r) ** (2.0 * weight_exponent) * a))


def _psi(pt: PotentialTable, t: float, t0: float) -> np.ndarray:
    return t0 + t + pt.A


def _energy_density(grid: RadialGrid, w, wt):
    g = grid.gradient(w)
    return g * g + np.asarray(wt) ** 2


def energy_e1(ws: WaveState, cfg: EnergyConfig, pt: PotentialTable, profile: CoefficientProfile,
              grid: RadialGrid, t0: float) -> float:
    """``int (|grad u|^2 + u_t^2) Psi^(lambda + alpha/(2-alpha))``."""
    return energy_ekj(ws.u, ws.ut, ws.t, EnergyConfig(cfg.lambda_, cfg.delta, 0, 0, cfg.nu),
                      pt, profile, grid, t0, part="e1")


def energy_e1_tilde(ws: WaveState, cfg: EnergyConfig, pt: PotentialTable,
                    profile: CoefficientProfile, grid: RadialGrid, t0: float) -> float:
    """``(t0+t) int (|grad u|^2 + u_t^2) Psi^lambda``."""
    dens = _energy_density(grid, ws.u, ws.ut)
    return (t0 + ws.t) * grid.integrate(dens * _psi(pt, ws.t, t0) ** cfg.lambda_)


def energy_e0(ws: WaveState, cfg: EnergyConfig, sp: SupersolutionParams, pt: PotentialTable,
              profile: CoefficientProfile, grid: RadialGrid) -> float:
    """``int (2 u u_t + a u^2) Phi_beta^(-1+2 delta)`` with ``beta = lambda/(1-2 delta)``."""
    if not math.isclose(sp.beta, cfg.beta, rel_tol=1e-12):
        raise ContractError(f"supersolution beta={sp.beta} differs from lambda/(1-2 delta)={cfg.beta}")
    a = coefficient_on_grid(profile, grid)
    phi = eval_phi_field(sp, pt, ws.t).values
    return grid.integrate((2.0 * ws.u * ws.ut + a * ws.u ** 2) * phi ** (-1.0 + 2.0 * cfg.delta))


def energy_ekj(w, wt, t: float, cfg: EnergyConfig, pt: PotentialTable,
               profile: CoefficientProfile, grid: RadialGrid, t0: float, part: str = "e1") -> float:
    """
    Higher-order energy of ``w`` (typically ``w = d^k u/dt^k``).

    Parameters
    ----------
    w, wt : array_like
        The field and its time derivative at time ``t``.
    part : {"e1", "e0"}
        ``e1``: ``(t0+t)^j int (|grad w|^2 + w_t^2) Psi^(lambda + (2k+1-j) alpha/(2-alpha))``;
        ``e0``: ``(t0+t)^j int (2 w w_t + a w^2) Psi^(lambda + (2k-j) alpha/(2-alpha))``.
    """
    w = grid.check_field(w, "w")
    wt = grid.check_field(wt, "wt")
    alpha = profile.alpha
    shift = alpha / (2.0 - alpha)
    psi = _psi(pt, t, t0)
    pref = (t0 + t) ** cfg.j
    if part == "e1":
        expo = cfg.lambda_ + (2 * cfg.k + 1 - cfg.j) * shift
        return pref * grid.integrate(_energy_density(grid, w, wt) * psi ** expo)
    if part == "e0":
        a = coefficient_on_grid(profile, grid)
        expo = cfg.lambda_ + (2 * cfg.k - cfg.j) * shift
        return pref * grid.integrate((2.0 * w * wt + a * w * w) * psi ** expo)
    raise ParameterError(f"unknown energy part {part!r}")


def higher_order_sum(ws: WaveState, cfg: EnergyConfig, pt: PotentialTable,
                     profile: CoefficientProfile, grid: RadialGrid, t0: float, k: int = 1) -> float:
    """``sum_j E1^(k,j)[d^k u/dt^k]`` for ``k in {0, 1}`` (``k=1`` uses ``(u_t, u_tt)``)."""
    w, wt = (ws.u, ws.ut) if k == 0 else (ws.ut, ws.utt)
    total = 0.0
    for j in range(2 * k + 2):
        total += energy_ekj(w, wt, ws.t, EnergyConfig(cfg.lambda_, cfg.delta, k, j, cfg.nu),
                            pt, profile, grid, t0, part="e1")
    return total


def plain_energy(ws: WaveState, grid: RadialGrid) -> float:
    """``int |grad u|^2 + u_t^2`` by quadrature."""
    return grid.integrate(_energy_density(grid, ws.u, ws.ut))


def coercivity_ratio(ws: WaveState, cfg: EnergyConfig, sp: SupersolutionParams, pt: PotentialTable,
                     profile: CoefficientProfile, grid: RadialGrid, t0: float) -> float:
    """
    ``(E1 + nu E0) / (E1 + nu int a u^2 Phi^(-1+2 delta))``.

    The denominator is the positive part of the coupled energy; the ratio is
    bounded below by a positive constant when the coupling is coercive.
    """
    e1 = energy_e1(ws, cfg, pt, profile, grid, t0)
    e0 = energy_e0(ws, cfg, sp, pt, profile, grid)
    a = coefficient_on_grid(profile, grid)
    phi = eval_phi_field(sp, pt, ws.t).values
    mass = grid.integrate(a * ws.u ** 2 * phi ** (-1.0 + 2.0 * cfg.delta))
    den = e1 + cfg.nu * mass
    return (e1 + cfg.nu * e0) / den if den > 0 else 1.0


# ---------------------------------------------------------------------------
# uniform-bound quantities for the damped wave


def _growth_weight(t: float, r, alpha: float, sigma: float):
    return (1.0 + t + _bracket(r) ** (2.0 - alpha)) ** (2.0 * sigma / (2.0 - alpha))


def weighted_energy_norm(ws: WaveState, alpha: float, sigma: float, grid: RadialGrid) -> float:
    """``int (|grad u|^2 + u_t^2)(1+t+<x>^alpha)(1+t+<x>^(2-alpha))^(2 sigma/(2-alpha))``."""
    r = grid.r
    w = (1.0 + ws.t + _bracket(r) ** alpha) * _growth_weight(ws.t, r, alpha, sigma)
    return grid.integrate(_energy_density(grid, ws.u, ws.ut) * w)


def weighted_solution_norm(ws: WaveState, alpha: float, sigma: float, grid: RadialGrid) -> float:
    """``int u^2 <x>^-alpha (1+t+<x>^(2-alpha))^(2 sigma/(2-alpha))``."""
    r = grid.r
    return grid.integrate(ws.u ** 2 * _bracket(r) ** (-alpha) * _growth_weight(ws.t, r, alpha, sigma))


def dissipation_density(alpha: float, sigma: float, grid: RadialGrid):
    """
    Integrand ``u_t^2 <x>^-alpha (1+t+<x>^alpha)(1+t+<x>^(2-alpha))^(2 sigma/(2-alpha))``
    as a callable for ``solve_damped_wave(accumulators=...)``.
    """
    r = grid.r
    br = _bracket(r)

    def density(t, u, ut):
        return ut * ut * br ** (-alpha) * (1.0 + t + br ** alpha) * _growth_weight(t, r, alpha, sigma)

    return density


def running_sup_check(series: RateSeries, t_cut: float, tol: float = 0.05):
    """
    ``(passed, sup_before, max_after)``: the largest value after ``t_cut`` must not
    exceed ``(1 + tol)`` times the running maximum reached by ``t_cut``.
    """
    before = series.t <= t_cut
    if not before.any() or before.all():
        raise DataError(f"t_cut={t_cut} must split the series")
    sup_before = float(series.values[before].max())
    max_after = float(series.values[~before].max())
    return bool(max_after <= (1.0 + tol) * sup_before), sup_before, max_after


# ---------------------------------------------------------------------------
# inequalities


def hardy_constant(N: int, alpha: float, eps: float, lambda_: float) -> float:
    """``4 c min{1-eps, 1-eps + (lambda-1) c}^-2`` with ``c = (2-alpha)/(N-alpha) + eps``."""
    c = (2.0 - alpha) / (N - alpha) + eps
    m = min(1.0 - eps, 1.0 - eps + (lambda_ - 1.0) * c)
    if not m > 0:
        raise ParameterError(
            f"lambda={lambda_}: 1-eps+(lambda-1)c = {m:.4g} <= 0, no admissible constant")
    return 4.0 * c / (m * m)


def hardy_lambda_bound(N: int, alpha: float, eps: float) -> float:
    """Lower bound on ``lambda`` for which ``hardy_constant`` is positive and finite."""
    return (2.0 - N + 2.0 * eps * (N - alpha)) / (2.0 - alpha + eps * (N - alpha))


def hardy_check(w, lambda_exp: float, eps: float, pt: PotentialTable, profile: CoefficientProfile,
                grid: RadialGrid, t: float = 0.0, t0: float = 10.0):
    """
    Both sides of ``int w^2 a Psi^(lambda-1) <= C int |grad w|^2 Psi^lambda``.

    Returns
    -------
    (lhs, rhs, C)
        The inequality holds when ``lhs <= C * rhs``.
    """
    N, alpha = grid.dim, profile.alpha
    bound = hardy_lambda_bound(N, alpha, eps)
    if not lambda_exp > bound:
        raise ParameterError(f"lambda={lambda_exp} must exceed {bound:.6g}")
    C = hardy_constant(N, alpha, eps, lambda_exp)
    w = grid.check_field(w, "w")
    if w[-1] != 0 or (not grid.whole_space and w[0] != 0):
        raise ParameterError("test function must vanish on the Dirichlet boundary")
    a = coefficient_on_grid(profile, grid)
    psi = _psi(pt, t, t0)
    g = grid.gradient(w)
    lhs = grid.integrate(w * w * a * psi ** (lambda_exp - 1.0))
    rhs = grid.integrate(g * g * psi ** lambda_exp)
    return lhs, rhs, C


def random_test_functions(grid: RadialGrid, count: int, seed: int = 42, max_bumps: int = 4):
    """
    ``count`` smooth compactly supported functions: sums of 1..max_bumps bumps
    with random centres, widths and signed amplitudes, vanishing at both ends.
    """
    rng = np.random.default_rng(seed)
    r = grid.r
    lo = grid.r0
    span = grid.rmax - grid.r0
    out = []
    for _ in range(count):
        f = np.zeros(grid.n)
        for _ in range(int(rng.integers(1, max_bumps + 1))):
            width = span * 10 ** rng.uniform(-2.0, -0.5)
            c_min = lo + width if not grid.whole_space else 0.0
            centre = rng.uniform(c_min, grid.rmax - width - 2 * grid.dr)
            x = (r - centre) / width
            bump = np.zeros_like(x)
            inside = np.abs(x) < 1
            bump[inside] = np.exp(1.0 - 1.0 / (1.0 - x[inside] ** 2))
            f += rng.uniform(-1.0, 1.0) * bump
        f[-1] = 0.0
        if not grid.whole_space:
            f[0] = 0.0
        out.append(f)
    return out


def delta_phi_check(u, phi: WeightField, lapl_phi, delta: float, grid: RadialGrid):
    """
    Both sides of

        int u Delta u Phi^(-1+2d) <= -(d/(1-d)) int |grad u|^2 Phi^(-1+2d)
                                     + ((1-2d)/2) int u^2 Delta Phi Phi^(-2+2d).

    ``lapl_phi`` is ``Delta Phi`` on the grid (closed form for the profile weights).
    """
    if not 0 < delta < 0.5:
        raise ParameterError(f"delta={delta} must lie in (0, 1/2)")
    u = grid.check_field(u, "u")
    P = np.asarray(phi.values, dtype=float)
    if np.any(P <= 0):
        raise ContractError("weight must be positive")
    lap_u = laplacian_radial(grid, u)
    g = grid.gradient(u)
    w1 = P ** (-1.0 + 2.0 * delta)
    lhs = grid.integrate(u * lap_u * w1)
    rhs = (-(delta / (1.0 - delta)) * grid.integrate(g * g * w1)
           + 0.5 * (1.0 - 2.0 * delta) * grid.integrate(u * u * np.asarray(lapl_phi) * P ** (-2.0 + 2.0 * delta)))
    return lhs, rhs


# ---------------------------------------------------------------------------
# rates


def fit_rate(series: RateSeries, window: Optional[tuple] = None, log_corrected: bool = False) -> RateFit:
    """
    Least-squares slope of ``log(value)`` against ``log(t)`` over ``window``.

    With ``log_corrected`` the values are first divided by ``sqrt(log(2+t))``.
    ``window`` defaults to ``[T/10, T]`` with ``T`` the last time.
    """
    t, v = series.t, series.values
    if window is None:
        window = (t[-1] / 10.0, t[-1])
    lo, hi = window
    sel = (t >= lo * (1 - 1e-12)) & (t <= hi * (1 + 1e-12))
    if sel.sum() < MIN_FIT_POINTS:
        raise DataError(f"only {int(sel.sum())} points in window [{lo}, {hi}]; need {MIN_FIT_POINTS}")
    ts, vs = t[sel], v[sel]
    if np.any(vs <= 0) or np.any(~np.isfinite(vs)):
        raise DataError("rate fits need positive finite values")
    if log_corrected:
        vs = vs / np.sqrt(np.log(2.0 + ts))
    x, y = np.log(ts), np.log(vs)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    rsq = 1.0 if ss_tot == 0 else max(0.0, 1.0 - float(np.sum(resid ** 2)) / ss_tot)
    return RateFit(float(slope), float(intercept), rsq, log_corrected, int(sel.sum()))


def diffusion_target(N: int, alpha: float, sigma: float):
    """
    ``(exponent, log_corrected)`` for ``|| sqrt(a) (u - v) ||``:
    ``-sigma/(2-alpha) - 2(1-alpha)/(2-alpha)`` with the ``sqrt(log)`` factor
    when ``alpha <= sigma``, else ``-sigma/(2-alpha) - 2(1-alpha) sigma/((2-alpha) alpha)``.
    """
    if not 0 < sigma < 0.5 * (N - alpha):
        raise ParameterError(f"sigma={sigma} must lie in (0, (N-alpha)/2)")
    base = -sigma / (2.0 - alpha)
    if sigma >= alpha:
        return base - 2.0 * (1.0 - alpha) / (2.0 - alpha), True
    return base - 2.0 * (1.0 - alpha) * sigma / ((2.0 - alpha) * alpha), False


def diffusion_compare(wave: Sequence[WaveState], parabolic: Sequence[FieldState],
                      profile: CoefficientProfile, grid: RadialGrid) -> RateSeries:
    """``|| sqrt(a) (u(t) - v(t)) ||_{L^2}`` at the common snapshot times."""
    if len(wave) != len(parabolic):
        raise DataError(f"{len(wave)} wave snapshots vs {len(parabolic)} parabolic snapshots")
    a = coefficient_on_grid(profile, grid)
    t, vals = [], []
    for w, p in zip(wave, parabolic):
        if not math.isclose(w.t, p.t, rel_tol=1e-9, abs_tol=1e-12):
            raise DataError(f"snapshot times differ: {w.t} vs {p.t}")
        d = w.u - p.v
        t.append(w.t)
        vals.append(math.sqrt(grid.integrate(a * d * d)))
    return RateSeries(np.array(t), np.array(vals))


def series_from(states, fn) -> RateSeries:
    """``RateSeries`` of ``fn(state)`` over states with ``t > 0``."""
    pts = [(s.t, fn(s)) for s in states if s.t > 0]
    return RateSeries(np.array([p[0] for p in pts]), np.array([p[1] for p in pts]))
