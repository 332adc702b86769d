"""
Radial finite-volume solvers for

    a(r) v_t = Delta v                      (parabolic)
    u_tt - Delta u + a(r) u_t = 0           (damped wave)

on ``[r0, rmax]`` with homogeneous (or prescribed) Dirichlet data.

Spatial operator
----------------
With cell volumes ``W_i = ((r_i + h/2)^N - (r_i - h/2)^N)/N`` (clipped at the
origin) and face weights ``k_{i+1/2} = (r_i + h/2)^(N-1)/h`` the Laplacian is

    (L f)_i = (k_{i+1/2}(f_{i+1} - f_i) - k_{i-1/2}(f_i - f_{i-1})) / W_i,

i.e. ``L = W^-1 S`` with ``S`` symmetric tridiagonal.  It is second order, exact
for ``r^2`` in every dimension, and at the origin of the whole space reduces to
``2N (f_1 - f_0)/h^2``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg import eigvalsh_tridiagonal
from scipy.linalg.lapack import dgttrf, dgttrs

from .errors import ConfigError, ConstructionError, ParameterError
from .grid import RadialGrid
from .potential import CoefficientProfile

PARABOLIC_SCHEMES = ("crank-nicolson", "backward-euler")
WAVE_SCHEMES = ("semi-implicit-leapfrog",)
TAIL_TOL = 1e-8


@dataclass(frozen=True)
class SolverConfig:
    """
    Time-stepping configuration.

    ``snapshots`` are output times in ``(0, T]``; ``T`` itself is always
    included.  The parabolic solver shortens the step to land exactly on each
    snapshot; the wave solver rounds snapshots to the nearest step and also
    reports the initial state.
    """

    dt: float
    T: float
    scheme: str = "crank-nicolson"
    snapshots: tuple = ()

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigError(f"dt={self.dt} must be positive", key="dt")
        if not self.T > 0:
            raise ConfigError(f"horizon T={self.T} must be positive", key="horizon")
        if self.scheme not in PARABOLIC_SCHEMES + WAVE_SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}", key="scheme")

    def output_times(self, start: float = 0.0) -> list:
        times = sorted({float(t) for t in self.snapshots if start < t <= start + self.T + 1e-12})
        end = start + self.T
        if not times or abs(times[-1] - end) > 1e-9 * max(1.0, end):
            times.append(end)
        return times


@dataclass(frozen=True)
class FieldState:
    t: float
    v: np.ndarray
    tail_fraction: float = 0.0


@dataclass(frozen=True)
class WaveState:
    """
    Wave solution at an integer time level.

    ``ut`` is the centred difference ``(u^{n+1} - u^{n-1})/(2 dt)`` and
    ``utt = L u - a ut`` (the scheme itself).  ``energy`` is the discrete
    energy at ``t``; ``dissipated`` the discrete ``2 int_0^t int a u_t^2``;
    ``integrals`` holds the running time integrals requested by the caller.
    """

    t: float
    u: np.ndarray
    ut: np.ndarray
    utt: np.ndarray
    energy: float
    dissipated: float
    integrals: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# spatial operator


@dataclass(frozen=True)
class RadialOperator:
    """Cell volumes ``W`` and the symmetric stiffness ``S`` (``L = W^-1 S``)."""

    grid: RadialGrid
    W: np.ndarray
    kappa: np.ndarray  # face weights, length n-1

    @classmethod
    def build(cls, grid: RadialGrid) -> "RadialOperator":
        r, h, N = grid.r, grid.dr, grid.dim
        lo = np.maximum(r - 0.5 * h, 0.0)
        hi = r + 0.5 * h
        W = (hi ** N - lo ** N) / N
        faces = r[:-1] + 0.5 * h
        kappa = faces ** (N - 1) / h
        return cls(grid, W, kappa)

    @property
    def free(self) -> slice:
        """Unknown nodes: every node but the Dirichlet ends (the origin is free)."""
        return slice(0 if self.grid.whole_space else 1, self.grid.n - 1)

    def stiffness_bands(self):
        """``(lower, diag, upper)`` of S restricted to the free nodes."""
        k = self.kappa
        diag = np.zeros(self.grid.n)
        diag[:-1] -= k
        diag[1:] -= k
        sl = self.free
        d = diag[sl]
        off = k[sl.start:sl.stop - 1]
        return off, d, off

    def apply_s(self, f: np.ndarray) -> np.ndarray:
        flux = self.kappa * np.diff(f)
        out = np.zeros_like(f)
        out[:-1] += flux
        out[1:] -= flux
        return out


def laplacian_radial(grid: RadialGrid, f) -> np.ndarray:
    """
    Discrete radial Laplacian ``f'' + (N-1) f'/r`` at every node.

    Dirichlet nodes (``r0 > 0`` inner end and ``rmax``) return 0; at the origin
    of the whole space the symmetric stencil ``2N (f_1 - f_0)/dr^2`` is used.
    """
    f = grid.check_field(f, "f")
    op = RadialOperator.build(grid)
    out = op.apply_s(f) / op.W
    out[-1] = 0.0
    if not grid.whole_space:
        out[0] = 0.0
    return out


def coefficient_on_grid(profile: CoefficientProfile, grid: RadialGrid) -> np.ndarray:
    """``a`` at the nodes; the pure-power origin uses ``a0 <r>^-alpha`` for ``r < dr``."""
    if profile.dim != grid.dim:
        raise ConstructionError(f"profile dimension {profile.dim} != grid dimension {grid.dim}")
    a = profile.regularized(grid.r, grid.dr) if grid.whole_space else np.asarray(profile(grid.r), float)
    if np.any(~np.isfinite(a)) or np.any(a <= 0):
        raise ParameterError("coefficient must be finite and positive on the grid")
    return a


# ---------------------------------------------------------------------------
# initial data


def _smooth_bump(x):
    out = np.zeros_like(x)
    inside = np.abs(x) < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - x[inside] ** 2))
    return out


def initial_data(kind: str, grid: RadialGrid, *, center: float = 0.0, width: float = 1.0,
                 sigma: float = 1.0, amplitude: float = 1.0) -> np.ndarray:
    """
    Nodal initial data.

    Parameters
    ----------
    kind : {"gaussian-bump", "annular-bump", "power-decay"}
        ``gaussian-bump``: smooth compactly supported bump
        ``exp(1 - 1/(1 - ((r-center)/width)^2))`` centred at ``center``
        (use ``center=0`` for a bump at the origin); ``annular-bump``: the same
        profile, required to stay away from the origin; ``power-decay``:
        ``<r>^(-2 sigma)``, set to 0 on Dirichlet nodes.
    """
    r = grid.r
    if kind in ("gaussian-bump", "annular-bump"):
        if width <= 0:
            raise ParameterError(f"bump width {width} must be positive")
        if kind == "annular-bump" and center - width < 0:
            raise ParameterError("annular bump must not reach the origin")
        lo, hi = center - width, center + width
        if hi >= grid.rmax or (not grid.whole_space and lo <= grid.r0) or (grid.whole_space and center != 0 and lo < 0):
            raise ParameterError(f"bump support [{lo}, {hi}] exceeds the domain [{grid.r0}, {grid.rmax}]")
        return amplitude * _smooth_bump((r - center) / width)
    if kind == "power-decay":
        v = amplitude * (1.0 + r * r) ** (-sigma)
        v[-1] = 0.0
        if not grid.whole_space:
            v[0] = 0.0
        return v
    raise ParameterError(f"unknown initial data kind {kind!r}")


# ---------------------------------------------------------------------------
# parabolic solver


class _TridiagonalFactor:
    """LU factors of a tridiagonal matrix, reused for repeated solves."""

    def __init__(self, lower, diag, upper):
        dl, d, du, du2, ipiv, info = dgttrf(lower, diag, upper)
        if info != 0:
            raise ConstructionError(f"singular tridiagonal system (LAPACK info={info})")
        self._f = (dl, d, du, du2, ipiv)

    def solve(self, b):
        x, info = dgttrs(*self._f, b)
        if info != 0:
            raise ConstructionError(f"tridiagonal solve failed (LAPACK info={info})")
        return x


def _tail_fraction(grid: RadialGrid, a: np.ndarray, v: np.ndarray) -> float:
    mass = grid.weights * a * np.abs(v)
    total = mass.sum()
    if total == 0:
        return 0.0
    return float(mass[grid.r > 0.9 * grid.rmax].sum() / total)


def solve_parabolic(grid: RadialGrid, profile: CoefficientProfile, cfg: SolverConfig, v0,
                    t_start: float = 0.0,
                    boundary: Optional[tuple] = None,
                    monitor_tail: bool = True) -> list:
    """
    Integrate ``a v_t = Delta v`` from ``t_start`` to ``t_start + cfg.T``.

    Parameters
    ----------
    boundary : (callable, callable), optional
        Dirichlet values ``g_inner(t)``, ``g_outer(t)``; default zero.  The
        inner one is ignored for the whole space.
    monitor_tail : bool
        Warn when more than ``1e-8`` of the weighted mass sits in ``r > 0.9 rmax``.

    Returns
    -------
    list of FieldState
        One per output time of ``cfg``.
    """
    if cfg.scheme not in PARABOLIC_SCHEMES:
        raise ConfigError(f"scheme {cfg.scheme!r} is not a parabolic scheme", key="scheme")
    v = grid.check_field(v0, "v0").copy()
    a = coefficient_on_grid(profile, grid)
    op = RadialOperator.build(grid)
    sl = op.free
    mass = (a * op.W)[sl]
    off, diag, _ = op.stiffness_bands()
    theta = 0.5 if cfg.scheme == "crank-nicolson" else 1.0
    g_in, g_out = boundary if boundary is not None else (None, None)
    k_in = op.kappa[0]
    k_out = op.kappa[-1]

    def boundary_values(t):
        b_in = 0.0 if (grid.whole_space or g_in is None) else float(g_in(t))
        b_out = 0.0 if g_out is None else float(g_out(t))
        return b_in, b_out

    factors = {}

    def factor(h):
        key = round(h, 15)
        if key not in factors:
            if len(factors) > 8:
                factors.clear()
            factors[key] = _TridiagonalFactor(-theta * h * off, mass - theta * h * diag,
                                              -theta * h * off)
        return factors[key]

    def step(v, t, h):
        vi = v[sl]
        sv = op.apply_s(v)[sl]  # includes current boundary values
        rhs = mass * vi + (1.0 - theta) * h * sv
        b_in, b_out = boundary_values(t + h)
        if not grid.whole_space:
            rhs[0] += theta * h * k_in * b_in
        rhs[-1] += theta * h * k_out * b_out
        new = v.copy()
        new[sl] = factor(h).solve(rhs)
        if not grid.whole_space:
            new[0] = b_in
        new[-1] = b_out
        return new

    t = t_start
    out = []
    warned = False
    for target in cfg.output_times(t_start):
        while target - t > 1e-12 * max(1.0, abs(target)):
            h = min(cfg.dt, target - t)
            if target - (t + h) < 1e-9 * cfg.dt:
                h = target - t
            v = step(v, t, h)
            t = t + h
        t = target
        frac = _tail_fraction(grid, a, v) if monitor_tail else 0.0
        if monitor_tail and frac > TAIL_TOL and not warned:
            warnings.warn(f"parabolic run: {frac:.2e} of the weighted mass lies in r > 0.9 rmax "
                          f"at t={t:g}; enlarge rmax", RuntimeWarning, stacklevel=2)
            warned = True
        out.append(FieldState(t, v.copy(), frac))
    return out


# ---------------------------------------------------------------------------
# damped wave solver


def wave_stability_limit(grid: RadialGrid) -> float:
    """Largest leapfrog step ``2/sqrt(lambda_max(-L))`` for the grid's Laplacian."""
    op = RadialOperator.build(grid)
    off, diag, _ = op.stiffness_bands()
    w = op.W[op.free]
    d = -diag / w
    e = off / np.sqrt(w[:-1] * w[1:])
    lam = eigvalsh_tridiagonal(d, e, select="i", select_range=(len(d) - 1, len(d) - 1))[0]
    return 2.0 / math.sqrt(lam)


def solve_damped_wave(grid: RadialGrid, profile: CoefficientProfile, cfg: SolverConfig, u0, u1,
                      accumulators: Optional[dict] = None,
                      keep_every_step: bool = False) -> list:
    """
    Leapfrog for ``u_tt - Delta u + a u_t = 0`` with the damping centred at
    ``(n+1, n-1)``:

        (1 + a dt/2) u^{n+1} = 2 u^n - (1 - a dt/2) u^{n-1} + dt^2 L u^n,

    started by ``u^1 = u^0 + dt u_1 + dt^2/2 (L u^0 - a u_1)``.

    The discrete energy ``E^{n+1/2} = |(u^{n+1}-u^n)/dt|_W^2 - u^{n+1} . S u^n``
    satisfies ``E^{n+1/2} = E^{n-1/2} - sum a W (u^{n+1}-u^{n-1})^2/(2 dt)``
    exactly; states report ``energy = (E^{n-1/2} + E^{n+1/2})/2`` and the
    matching dissipation, so ``energy + dissipated`` is constant up to rounding.
    ``E^{-1/2}`` is defined through the same identity from the first step.

    Parameters
    ----------
    accumulators : dict of name -> callable(t, u, ut) -> per-node array, optional
        Densities whose space-time integral ``int_0^t int f r^{N-1} dr dtau`` is
        accumulated (trapezoid in time) and reported in ``WaveState.integrals``.

    Raises
    ------
    ConfigError
        ``dt > 0.9 dr`` or ``dt`` above the leapfrog stability limit.
    """
    if cfg.scheme not in WAVE_SCHEMES:
        raise ConfigError(f"scheme {cfg.scheme!r} is not a wave scheme", key="scheme")
    dt = cfg.dt
    if dt > 0.9 * grid.dr * (1 + 1e-12):
        raise ConfigError(f"CFL violated: dt={dt} > 0.9*dr={0.9 * grid.dr}", key="dt")
    limit = wave_stability_limit(grid)
    if dt > 0.98 * limit:
        raise ConfigError(f"dt={dt} exceeds the leapfrog stability limit {0.98 * limit:.4g} "
                          "of this grid", key="dt")
    u0 = grid.check_field(u0, "u0").copy()
    u1 = grid.check_field(u1, "u1").copy()
    a = coefficient_on_grid(profile, grid)
    op = RadialOperator.build(grid)
    W = op.W
    fixed = np.zeros(grid.n, dtype=bool)
    fixed[-1] = True
    if not grid.whole_space:
        fixed[0] = True
    for name, f in (("u0", u0), ("u1", u1)):
        if np.any(f[fixed] != 0):
            raise ParameterError(f"{name} must vanish on the Dirichlet boundary")
    accumulators = accumulators or {}

    def lap(u):
        out = op.apply_s(u) / W
        out[fixed] = 0.0
        return out

    plus = 1.0 + 0.5 * a * dt
    minus = 1.0 - 0.5 * a * dt

    def staggered_energy(u_new, u_old):
        d = (u_new - u_old) / dt
        return float(np.dot(W, d * d) - np.dot(u_new, op.apply_s(u_old)))

    def dissipation(u_new, u_old):
        d = u_new - u_old
        return float(np.dot(a * W, d * d) / (2.0 * dt))

    n_steps = int(round(cfg.T / dt))
    if abs(n_steps * dt - cfg.T) > 1e-9 * cfg.T:
        warnings.warn(f"horizon {cfg.T} is not a multiple of dt={dt}; using {n_steps * dt}",
                      RuntimeWarning, stacklevel=2)
    targets = sorted({0} | {min(n_steps, max(0, int(round(t / dt)))) for t in cfg.output_times()})
    if keep_every_step:
        targets = list(range(n_steps + 1))
    want = set(targets)

    u_prev = u0
    u_cur = u0 + dt * u1 + 0.5 * dt * dt * (lap(u0) - a * u1)
    u_cur[fixed] = 0.0
    # the Taylor start is the leapfrog step from the virtual level u^{-1} = u^1 - 2 dt u_1
    u_virtual = u_cur - 2.0 * dt * u1
    d_first = dissipation(u_cur, u_virtual)
    e_prev_half = staggered_energy(u_cur, u_prev)
    e_minus_half = e_prev_half + d_first

    states = []
    acc_vals = {k: 0.0 for k in accumulators}
    prev_density = {k: grid.integrate(f(0.0, u0, u1)) for k, f in accumulators.items()}
    if 0 in want:
        states.append(WaveState(0.0, u0.copy(), u1.copy(), lap(u0) - a * u1,
                                0.5 * (e_minus_half + e_prev_half), 0.0, dict(acc_vals)))
    cum = d_first  # sum of per-step dissipation over steps 0..n-1
    for n in range(1, n_steps + 1):
        u_next = (2.0 * u_cur - minus * u_prev + dt * dt * op.apply_s(u_cur) / W) / plus
        u_next[fixed] = 0.0
        step_diss = dissipation(u_next, u_prev)
        e_next_half = staggered_energy(u_next, u_cur)
        t = n * dt
        ut = (u_next - u_prev) / (2.0 * dt)
        for k, f in accumulators.items():
            dens = grid.integrate(f(t, u_cur, ut))
            acc_vals[k] += 0.5 * dt * (prev_density[k] + dens)
            prev_density[k] = dens
        if n in want:
            energy = 0.5 * (e_prev_half + e_next_half)
            diss_n = cum + 0.5 * step_diss - 0.5 * d_first
            states.append(WaveState(t, u_cur.copy(), ut, lap(u_cur) - a * ut, energy, diss_n,
                                    dict(acc_vals)))
        cum += step_diss
        e_prev_half = e_next_half
        u_prev, u_cur = u_cur, u_next
    return states


def initial_discrete_energy(grid: RadialGrid, u0, u1) -> float:
    """``|u_1|_W^2 - u_0 . S u_0``, the discrete analogue of ``int |grad u0|^2 + u1^2``."""
    op = RadialOperator.build(grid)
    u0 = grid.check_field(u0)
    u1 = grid.check_field(u1)
    return float(np.dot(op.W, u1 * u1) - np.dot(u0, op.apply_s(u0)))
