"""
Radial potential ``A`` with ``Delta A = a`` and the structural constants
``gamma_tilde = 1/((2-alpha)/(N-alpha) + eps)``, ``gamma = (1-eps) gamma_tilde``.

For a radial coefficient the Poisson equation integrates twice:

    F(r) = int_0^r tau^{N-1} a(tau) dtau,     A'(r) = F(r) / r^{N-1},
    A(r) = int_0^r A'(s) ds.

Both integrals use product integration with the singular power factored
out, so pure-power coefficients ``a0 r^-alpha`` are reproduced to rounding
error and smooth profiles to ``O(h^2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConstructionError, ParameterError
from .grid import RadialGrid

KINDS = ("pure-power", "japanese-bracket", "tabulated")

# 4-point Gauss-Legendre rule on [0, 1]
_GL_X, _GL_W = np.polynomial.legendre.leggauss(4)
_GL_X = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W


@dataclass(frozen=True)
class CoefficientProfile:
    """
    Radial coefficient ``a(r) = 1/D(r)``.

    Parameters
    ----------
    alpha : float
        Decay exponent, ``alpha < 2``.
    a0 : float
        Limit amplitude ``lim r^alpha a(r)``.
    kind : str
        ``"pure-power"`` (``a0 r^-alpha``), ``"japanese-bracket"``
        (``a0 (1+r^2)^(-alpha/2)``) or ``"tabulated"``.
    dim : int
        Ambient dimension N.
    table_r, table_a : tuple of float, optional
        Samples for the tabulated kind, linearly interpolated and held
        constant outside the table.
    """

    alpha: float
    a0: float
    kind: str
    dim: int
    table_r: Optional[tuple] = field(default=None, repr=False)
    table_a: Optional[tuple] = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"unknown profile kind {self.kind!r}; expected one of {KINDS}")
        if self.dim < 1 or int(self.dim) != self.dim:
            raise ParameterError(f"dimension must be a positive integer, got {self.dim}")
        if not self.alpha < 2:
            raise ParameterError(f"alpha={self.alpha} must be < 2")
        if not self.a0 > 0:
            raise ParameterError(f"a0={self.a0} must be positive")
        if self.kind == "tabulated":
            if self.table_r is None or self.table_a is None:
                raise ParameterError("tabulated profile needs table_r and table_a")
            tr = np.asarray(self.table_r, dtype=float)
            ta = np.asarray(self.table_a, dtype=float)
            if tr.shape != ta.shape or tr.size < 2 or np.any(np.diff(tr) <= 0):
                raise ParameterError("table_r must be strictly increasing and match table_a")
            if np.any(ta <= 0):
                raise ParameterError("tabulated coefficient must be positive")
            r_end = tr[-1]
            if r_end > 0 and abs(r_end ** self.alpha * ta[-1] / self.a0 - 1) > 0.05:
                raise ParameterError(
                    f"r^alpha a(r) = {r_end ** self.alpha * ta[-1]:.4g} at the table edge "
                    f"differs from a0={self.a0} by more than 5%")

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if self.kind == "pure-power":
            with np.errstate(divide="ignore"):
                return self.a0 * r ** (-self.alpha)
        if self.kind == "japanese-bracket":
            return self.a0 * (1.0 + r * r) ** (-0.5 * self.alpha)
        return np.interp(r, np.asarray(self.table_r), np.asarray(self.table_a))

    @property
    def singular_power(self) -> float:
        """Power p with ``r^p a(r)`` smooth at the origin."""
        return self.alpha if self.kind == "pure-power" else 0.0

    def regularized(self, r, dr: float):
        """``a(r)`` with the pure-power origin singularity replaced by ``a0 <r>^-alpha`` for r < dr."""
        r = np.asarray(r, dtype=float)
        out = np.asarray(self(np.maximum(r, dr)), dtype=float)
        if self.kind == "pure-power" and self.alpha != 0:
            near = r < dr
            out = np.where(near, self.a0 * (1.0 + r * r) ** (-0.5 * self.alpha), out)
        return out


@dataclass(frozen=True)
class StructuralConstants:
    gamma_tilde: float
    gamma: float
    epsilon: float


def structural_constants(alpha: float, N: int, eps: float) -> StructuralConstants:
    """``gamma_tilde = ((2-alpha)/(N-alpha) + eps)^-1`` and ``gamma = (1-eps) gamma_tilde``."""
    if not alpha < min(2, N):
        raise ParameterError(f"alpha={alpha} must be < min(2, N={N})")
    if not 0 <= eps < 1:
        raise ParameterError(f"eps={eps} must lie in [0, 1)")
    gt = 1.0 / ((2.0 - alpha) / (N - alpha) + eps)
    return StructuralConstants(gt, (1.0 - eps) * gt, eps)


def closed_form_potential(alpha: float, a0: float, N: int, r):
    """``a0 r^{2-alpha} / ((2-alpha)(N-alpha))``, the radial solution of ``Delta A = a0 r^-alpha``."""
    if not alpha < min(2, N):
        raise ParameterError(f"alpha={alpha} must be < min(2, N={N})")
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ParameterError("radius must be >= 0")
    out = a0 * r ** (2.0 - alpha) / ((2.0 - alpha) * (N - alpha))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class PotentialTable:
    """Nodal values of ``A``, ``A'``, ``Delta A`` and the coefficient ``a`` on ``grid``."""

    grid: RadialGrid
    A: np.ndarray
    Aprime: np.ndarray
    laplA: np.ndarray
    a: np.ndarray
    alpha: float
    singular_power: float = 0.0

    def at(self, r):
        """``A`` linearly interpolated at arbitrary radii inside the grid."""
        return np.interp(r, self.grid.r, self.A)

    @property
    def ratio_a1(self) -> np.ndarray:
        """``Delta A / a``; 1 where both are infinite (pure-power origin)."""
        with np.errstate(divide="ignore", invalid="ignore"):
            out = self.laplA / self.a
        out[np.isinf(self.a) & np.isinf(self.laplA)] = 1.0
        return out

    @property
    def ratio_a3(self) -> np.ndarray:
        """``(A')^2/(a A)``, with its limit at nodes where ``A = 0``."""
        with np.errstate(divide="ignore", invalid="ignore"):
            out = self.Aprime ** 2 / (self.a * self.A)
        origin = self.A == 0
        p = self.singular_power
        out[origin] = (2.0 - p) / (self.grid.dim - p)
        return out


def _power_moments(x1, q):
    """Exact ``int_0^{x1} x^q dx`` and ``int_0^{x1} x^{q+1} dx`` (q > -1)."""
    return x1 ** (q + 1) / (q + 1), x1 ** (q + 2) / (q + 2)


def _product_integral(x, f, q):
    """
    Cumulative ``int_0^x s^q f(s) ds`` with f linear between nodes.

    ``x[0]`` must be 0.  The first cell is integrated in closed form, the
    rest with a 4-point Gauss rule (the weight is smooth away from 0).
    """
    h = np.diff(x)
    x0 = x[:-1]
    slope = np.diff(f) / h
    pts = x0[:, None] + h[:, None] * _GL_X[None, :]
    lin = f[:-1, None] + slope[:, None] * (pts - x0[:, None])
    cell = h * (((pts ** q) * lin) @ _GL_W)
    m0, m1 = _power_moments(x[1], q)
    cell[0] = f[0] * m0 + slope[0] * m1
    return np.concatenate([[0.0], np.cumsum(cell)])


def build_radial_potential(profile: CoefficientProfile, grid: RadialGrid) -> PotentialTable:
    """
    Radial solution of ``Delta A = a`` with ``A(0) = A'(0) = 0``.

    Parameters
    ----------
    profile : CoefficientProfile
    grid : RadialGrid
        Output nodes.  For ``r0 > 0`` the integrals still start at the
        origin; extra nodes are inserted on ``[0, r0]`` with the same spacing.

    Returns
    -------
    PotentialTable
        ``laplA`` is the exact Laplacian of the quadrature construction,
        which equals ``a`` at every node.
    """
    N = grid.dim
    alpha = profile.alpha
    if alpha >= N:
        raise ConstructionError(f"alpha={alpha} >= N={N}: int_0 tau^(N-1) a(tau) diverges")
    if profile.dim != N:
        raise ConstructionError(f"profile dimension {profile.dim} != grid dimension {N}")
    p = profile.singular_power

    m = int(math.ceil(grid.r0 / grid.dr - 1e-9))
    prefix = np.linspace(0.0, grid.r0, m + 1)[:-1] if m > 0 else np.empty(0)
    x = np.concatenate([prefix, grid.r])
    start = prefix.size

    with np.errstate(divide="ignore", invalid="ignore"):
        a_x = np.asarray(profile(x), dtype=float)
        g = a_x * x ** p
    if p != 0:
        g[0] = profile.a0
    if np.any(a_x[1:] <= 0) or np.any(np.isnan(a_x)):
        raise ParameterError("coefficient must be positive on the grid")

    # F(r) = int tau^{N-1-p} g(tau);  R = F / r^{N-p} is smooth with R(0) = g(0)/(N-p)
    F = _product_integral(x, g, N - 1 - p)
    R = np.empty_like(x)
    R[0] = g[0] / (N - p)
    R[1:] = F[1:] / x[1:] ** (N - p)
    # A'(s) = s^{1-p} R(s)
    A = _product_integral(x, R, 1.0 - p)
    Aprime = x ** (1.0 - p) * R
    if p == 1.0:
        Aprime[0] = R[0]

    sl = slice(start, None)
    A_g, Ap_g, a_g = A[sl].copy(), Aprime[sl].copy(), a_x[sl].copy()
    for arr in (A_g, Ap_g, a_g):
        arr.flags.writeable = False
    return PotentialTable(grid=grid, A=A_g, Aprime=Ap_g, laplA=a_g, a=a_g, alpha=alpha,
                          singular_power=p)


@dataclass(frozen=True)
class VerificationReport:
    """Worst margins of the three potential inequalities (positive margin = satisfied)."""

    eps: float
    a1_min: float
    a1_max: float
    a1_margin: float
    a3_max: float
    a3_target: float
    a3_margin: float
    a3_witness_r: float
    c_fit: float
    C_fit: float
    a2_margin: float
    smallest_eps: float

    @property
    def a1_pass(self) -> bool:
        return self.a1_margin >= 0

    @property
    def a2_pass(self) -> bool:
        return self.a2_margin > 0

    @property
    def a3_pass(self) -> bool:
        return self.a3_margin >= 0

    @property
    def passed(self) -> bool:
        return self.a1_pass and self.a2_pass and self.a3_pass


def verify_potential(pt: PotentialTable, profile: CoefficientProfile, eps: float,
                     rtol: float = 1e-12) -> VerificationReport:
    """
    Check ``(1-eps) a <= Delta A <= (1+eps) a``, the two-sided growth
    ``c <r>^{2-alpha} <= A <= C <r>^{2-alpha}`` and
    ``(A')^2/(aA) <= (2-alpha)/(N-alpha) + eps`` on the grid.

    The growth constants are fitted over ``r >= 1`` (the radial construction
    vanishes at the origin); ``rtol`` absorbs rounding in the two ratio checks.
    """
    N = pt.grid.dim
    r = pt.grid.r
    finite = np.isfinite(pt.a) & (pt.a > 0)
    a1 = pt.ratio_a1[finite]
    a1_min, a1_max = float(a1.min()), float(a1.max())
    a1_margin = eps + rtol - max(1.0 - a1_min, a1_max - 1.0)

    a3 = pt.ratio_a3
    limit = (2.0 - profile.alpha) / (N - profile.alpha)
    i3 = int(np.nanargmax(a3))
    a3_max = float(a3[i3])
    target = limit + eps
    a3_margin = target * (1 + rtol) - a3_max

    far = r >= 1.0 if r[-1] >= 1.0 else r > 0
    growth = pt.A[far] / (1.0 + r[far] ** 2) ** (0.5 * (2.0 - profile.alpha))
    c_fit, C_fit = float(growth.min()), float(growth.max())

    smallest = max(0.0, 1.0 - a1_min, a1_max - 1.0, a3_max - limit)
    return VerificationReport(
        eps=eps, a1_min=a1_min, a1_max=a1_max, a1_margin=a1_margin,
        a3_max=a3_max, a3_target=target, a3_margin=a3_margin, a3_witness_r=float(r[i3]),
        c_fit=c_fit, C_fit=C_fit, a2_margin=c_fit, smallest_eps=smallest)
