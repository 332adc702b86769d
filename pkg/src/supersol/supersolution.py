"""
Kummer-profile supersolutions of ``a(x) v_t = Delta v``.

With ``z = gamma_tilde A(r)/(t0+t)`` the weight is

    Phi_beta(r, t) = (t0+t)^-beta phi_beta(z),

and its residual is evaluated in closed form from ``phi, phi', phi''``:

    a Phi_t - Delta Phi = -a (t0+t)^(-beta-1) [ beta phi + z phi'
                          + gamma_tilde (Delta A/a) phi'
                          + gamma_tilde (|A'|^2/(a A)) z phi'' ].

Nothing here differentiates numerically; the only discretisation error is the
one carried by the potential table.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import ContractError, ParameterError
from .grid import RadialGrid
from .potential import PotentialTable, StructuralConstants, structural_constants
from .specfun import PhiParams, phi_beta, phi_beta_derivs, phi_sandwich_constants

RESIDUAL_TOL = 1e-8


@dataclass(frozen=True)
class SupersolutionParams:
    """
    Parameter bundle for ``Phi_{beta,eps}``.

    Use :meth:`from_sigma` or :meth:`from_beta`; both fill ``lambda_`` and
    ``consts`` consistently (``beta = 2 sigma/(2-alpha)``,
    ``lambda = (1-2 delta) beta``).
    """

    beta: float
    sigma: float
    lambda_: float
    delta: float
    eps: float
    t0: float
    alpha: float
    dim: int
    consts: StructuralConstants

    def __post_init__(self):
        if not 0 < self.delta < 0.5:
            raise ParameterError(f"delta={self.delta} must lie in (0, 1/2)")
        if not self.t0 >= 1:
            raise ParameterError(f"t0={self.t0} must be >= 1")
        if self.beta < 0:
            raise ParameterError(f"beta={self.beta} must be >= 0")

    @classmethod
    def from_beta(cls, beta: float, alpha: float, dim: int, eps: float,
                  delta: float = 0.1, t0: float = 10.0) -> "SupersolutionParams":
        consts = structural_constants(alpha, dim, eps)
        return cls(beta=beta, sigma=0.5 * beta * (2.0 - alpha), lambda_=(1.0 - 2.0 * delta) * beta,
                   delta=delta, eps=eps, t0=t0, alpha=alpha, dim=dim, consts=consts)

    @classmethod
    def from_sigma(cls, sigma: float, alpha: float, dim: int, eps: float,
                   delta: float = 0.1, t0: float = 10.0) -> "SupersolutionParams":
        if not 0 < sigma < 0.5 * (dim - alpha):
            raise ParameterError(f"sigma={sigma} must lie in (0, (N-alpha)/2) = (0, {0.5 * (dim - alpha)})")
        return cls.from_beta(2.0 * sigma / (2.0 - alpha), alpha, dim, eps, delta, t0)

    @property
    def phi(self) -> PhiParams:
        return PhiParams(self.beta, self.consts.gamma)

    @property
    def sign_definite(self) -> bool:
        """``0 < beta < gamma_eps``: the range where the residual is provably >= 0."""
        return 0 < self.beta < self.consts.gamma

    def shifted(self, dbeta: float) -> "SupersolutionParams":
        return SupersolutionParams.from_beta(self.beta + dbeta, self.alpha, self.dim, self.eps,
                                             self.delta, self.t0)


@dataclass(frozen=True)
class WeightField:
    """Values of a weight at time ``t`` on the nodes of ``grid``.

    ``scale`` (when set) is the natural magnitude used for relative tolerances.
    """

    grid: RadialGrid
    t: float
    values: np.ndarray
    scale: Optional[np.ndarray] = field(default=None, repr=False)
    contract_ok: bool = True


def _z(p: SupersolutionParams, A, t: float):
    return p.consts.gamma_tilde * np.asarray(A, dtype=float) / (p.t0 + t)


def eval_phi_field(p: SupersolutionParams, pt: PotentialTable, t: float) -> WeightField:
    """``Phi_{beta,eps}(r, t; t0) = (t0+t)^-beta phi_beta(gamma_tilde A(r)/(t0+t))`` on the grid."""
    vals = (p.t0 + t) ** (-p.beta) * phi_beta(p.phi, _z(p, pt.A, t))
    return WeightField(pt.grid, t, vals)


def eval_psi(p: SupersolutionParams, pt: PotentialTable, r=None, t: float = 0.0):
    """``Psi = t0 + t + A(r)``; ``r=None`` evaluates on every grid node."""
    A = pt.A if r is None else pt.at(r)
    out = p.t0 + t + np.asarray(A, dtype=float)
    return float(out) if out.ndim == 0 else out


def residual_bracket(p: SupersolutionParams, ratio_a1, ratio_a3, z):
    """
    ``beta phi + z phi' + gt (Delta A/a) phi' + gt (|A'|^2/(aA)) z phi''``.

    The residual is ``-a (t0+t)^(-beta-1)`` times this bracket.
    """
    gt = p.consts.gamma_tilde
    phi, d1, d2 = phi_beta_derivs(p.phi, z)
    return p.beta * phi + z * d1 + gt * ratio_a1 * d1 + gt * ratio_a3 * z * d2


def supersolution_residual(p: SupersolutionParams, pt: PotentialTable, t: float) -> WeightField:
    """
    ``a Phi_t - Delta Phi`` at every grid node, from the closed-form bracket.

    ``scale = a (t0+t)^(-beta-1) (1+z)`` is attached for relative tolerances.
    ``contract_ok`` is False when ``beta`` lies outside ``(0, gamma_eps)``,
    where nonnegativity is not guaranteed; the residual is still returned.
    """
    z = _z(p, pt.A, t)
    a = pt.a
    fac = (p.t0 + t) ** (-p.beta - 1.0)
    bracket = residual_bracket(p, pt.ratio_a1, pt.ratio_a3, z)
    finite = np.isfinite(a)
    res = np.where(finite, -np.where(finite, a, 0.0) * fac * bracket, 0.0)
    if not finite.all():
        # pure-power origin: a = inf, bracket -> 0; report the limit by continuity
        res[~finite] = res[np.argmax(finite)]
    scale = np.where(finite, a, 0.0) * fac * (1.0 + z)
    if not finite.all():
        scale[~finite] = scale[np.argmax(finite)]
    return WeightField(pt.grid, t, res, scale, contract_ok=p.sign_definite)


def laplacian_phi(p: SupersolutionParams, pt: PotentialTable, t: float) -> np.ndarray:
    """``Delta Phi = (t0+t)^(-beta-1) gt (Delta A phi' + (|A'|^2/A) z phi'')`` in closed form."""
    gt = p.consts.gamma_tilde
    z = _z(p, pt.A, t)
    _, d1, d2 = phi_beta_derivs(p.phi, z)
    with np.errstate(divide="ignore", invalid="ignore"):
        grad_ratio = np.where(pt.A > 0, pt.Aprime ** 2 / np.where(pt.A > 0, pt.A, 1.0), 0.0)
    return (p.t0 + t) ** (-p.beta - 1.0) * gt * (pt.laplA * d1 + grad_ratio * z * d2)


def time_derivative(p: SupersolutionParams, pt: PotentialTable, t: float) -> np.ndarray:
    """``Phi_t = -beta Phi_{beta+1}``."""
    return -p.beta * eval_phi_field(p.shifted(1.0), pt, t).values


def exact_self_similar(beta: float, alpha: float, N: int, r, t: float):
    """
    Exact solution of ``|x|^-alpha v_t = Delta v``:

        t^-beta e^{-xi} M((N-alpha)/(2-alpha) - beta, (N-alpha)/(2-alpha); xi),
        xi = |x|^(2-alpha) / ((2-alpha)^2 t).

    Parameters
    ----------
    beta : float
        Decay exponent, ``>= 0``.
    alpha : float
        ``alpha < min(2, N)``.
    N : int
    r : float or array_like
    t : float
        Must be positive.
    """
    if not t > 0:
        raise ParameterError(f"t={t} must be positive")
    if not alpha < min(2, N):
        raise ParameterError(f"alpha={alpha} must be < min(2, N={N})")
    gamma0 = (N - alpha) / (2.0 - alpha)
    r = np.asarray(r, dtype=float)
    xi = r ** (2.0 - alpha) / ((2.0 - alpha) ** 2 * t)
    out = t ** (-beta) * phi_beta(PhiParams(beta, gamma0), xi)
    return float(out) if np.ndim(out) == 0 else out


def _modified_multiplier(p: SupersolutionParams, t: float):
    expo = 2.0 * (1.0 - p.alpha) / (2.0 - p.alpha)
    m = 2.0 - (p.t0 + t) ** (-expo)
    dm = expo * (p.t0 + t) ** (-expo - 1.0)
    return m, dm


def modified_phi_1d(p: SupersolutionParams, pt: PotentialTable, r=None, t: float = 0.0):
    """
    One-dimensional weight ``(2 - (t0+t)^(-2(1-alpha)/(2-alpha))) Phi_{beta,eps}``.

    ``r=None`` evaluates on every grid node, otherwise ``A`` is interpolated.
    """
    if p.dim != 1:
        raise ContractError(f"the modified weight is defined for N=1, got N={p.dim}")
    if not 0 <= p.alpha < 1:
        raise ContractError(f"the modified weight needs alpha in [0, 1), got {p.alpha}")
    m, _ = _modified_multiplier(p, t)
    A = pt.A if r is None else pt.at(r)
    out = m * (p.t0 + t) ** (-p.beta) * phi_beta(p.phi, _z(p, A, t))
    return float(out) if np.ndim(out) == 0 else out


def modified_residual_margin(p: SupersolutionParams, pt: PotentialTable, t: float) -> WeightField:
    """
    ``a W_t - Delta W - ((1-alpha)/(2-alpha)) a (t0+t)^((3 alpha-4)/(2-alpha)) W`` for the
    modified weight ``W = m(t) Phi``; nonnegative when the construction works.
    """
    if p.dim != 1:
        raise ContractError(f"the modified weight is defined for N=1, got N={p.dim}")
    m, dm = _modified_multiplier(p, t)
    base = supersolution_residual(p, pt, t)
    phi = eval_phi_field(p, pt, t).values
    a = pt.a
    rhs = (1.0 - p.alpha) / (2.0 - p.alpha) * a * (p.t0 + t) ** ((3 * p.alpha - 4) / (2 - p.alpha)) * m * phi
    vals = m * base.values + a * dm * phi - rhs
    return WeightField(pt.grid, t, vals, m * base.scale, contract_ok=base.contract_ok)


def default_time_samples(t0: float, decades: int = 4) -> list[float]:
    """``0`` followed by ``t0 10^(k/4)`` for ``k = 0..4*decades``."""
    return [0.0] + [t0 * 10 ** (k / 4) for k in range(4 * decades + 1)]


@dataclass(frozen=True)
class CheckRow:
    """One inequality of a certificate; ``margin >= -tol`` means it holds."""

    name: str
    margin: float
    witness_r: float
    witness_t: float
    constant: float
    tol: float = 0.0

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.margin)) and self.margin >= -self.tol


@dataclass(frozen=True)
class Certificate:
    """
    Numerical certificate for the supersolution ``U = K_tilde Phi_{beta,eps}``.

    ``c_fit``, ``C_fit``, ``Cprime_fit`` are the observed extremes of
    ``U W^beta`` and ``|U_t| W^(beta+1)`` with ``W = 1 + t + <r>^(2-alpha)``.
    The rows check the explicit constants obtained by chaining the profile
    sandwich with the growth bounds of ``A`` (see :func:`supersolution_certificate`).
    """

    K_tilde: float
    k_phi: float
    c_fit: float
    C_fit: float
    Cprime_fit: float
    rows: tuple

    @property
    def passed(self) -> bool:
        return all(row.passed for row in self.rows)

    def failures(self) -> list:
        return [row for row in self.rows if not row.passed]


def _worst(values, grid: RadialGrid, times, idx=None):
    flat = int(np.nanargmin(values)) if idx is None else idx
    ti, ri = np.unravel_index(flat, values.shape)
    return float(values[ti, ri]), float(grid.r[ri]), float(times[ti])


def supersolution_certificate(p: SupersolutionParams, pt: PotentialTable,
                              time_samples: Optional[Sequence[float]] = None,
                              modified: bool = False, tol: float = RESIDUAL_TOL) -> Certificate:
    """
    Certify the decaying supersolution on the grid.

    Normalisation: ``K_tilde = k^-1 (t0 + gt C_A)^beta`` where ``k`` is the
    lower sandwich constant of ``phi_beta`` and ``C_A = max A/<r>^(2-alpha)``;
    this makes ``U(x, 0) >= <x>^(-2 sigma)``.

    Rows
    ----
    residual : min of ``(a U_t - Delta U)/scale`` (the strengthened one-dimensional
        margin when ``modified``), must be ``>= -tol``.
    initial_domination : ``min U(r,0) <r>^(2 sigma) - 1``.
    lower_bound / upper_bound / time_derivative : relative slack of
        ``U >= c W^-beta``, ``U <= C W^-beta``, ``|U_t| <= C' W^(-beta-1)`` with
        the explicit constants ``c = K k max(t0, gt C_A)^-beta``,
        ``C = K K_phi m^-beta``, ``C' = K beta K_{phi,beta+1} m^(-beta-1)``,
        ``m = min(1/(1 + 2^((2-alpha)/2)), 1, gt c_A)`` and
        ``c_A = min_{r>=1} A/<r>^(2-alpha)``.
    """
    if not p.sign_definite:
        raise ContractError(f"beta={p.beta} outside (0, gamma_eps={p.consts.gamma}); "
                            "no supersolution certificate is available")
    grid = pt.grid
    r = grid.r
    times = list(default_time_samples(p.t0) if time_samples is None else time_samples)
    times_arr = np.asarray(times, dtype=float)
    gt = p.consts.gamma_tilde
    bracket_r = (1.0 + r * r) ** (0.5 * (2.0 - p.alpha))
    growth = pt.A / bracket_r
    C_A = float(growth.max())
    far = r >= 1.0
    c_A = float(growth[far].min()) if far.any() else float(growth[r > 0].min())

    s_max = max(1e6, 10 * gt * float(pt.A.max()) / p.t0)
    k_phi, K_phi = phi_sandwich_constants(p.phi, s_max=s_max)
    shifted = p.shifted(1.0)
    _, K_phi1 = _abs_sandwich(shifted.phi, s_max)
    K_tilde = (p.t0 + gt * C_A) ** p.beta / k_phi

    U = np.empty((len(times), grid.n))
    dU = np.empty_like(U)
    res = np.empty_like(U)
    for i, t in enumerate(times):
        U[i] = K_tilde * eval_phi_field(p, pt, t).values
        dU[i] = K_tilde * time_derivative(p, pt, t)
        field_ = modified_residual_margin(p, pt, t) if modified else supersolution_residual(p, pt, t)
        res[i] = field_.values / field_.scale
    W = 1.0 + times_arr[:, None] + bracket_r[None, :]
    lower_ratio = U * W ** p.beta
    deriv_ratio = np.abs(dU) * W ** (p.beta + 1.0)

    m = min(1.0 / (1.0 + 2.0 ** (0.5 * (2.0 - p.alpha))), 1.0, gt * c_A)
    c_proof = K_tilde * k_phi * max(p.t0, gt * C_A) ** (-p.beta)
    C_proof = K_tilde * K_phi * m ** (-p.beta)
    Cp_proof = K_tilde * p.beta * K_phi1 * m ** (-p.beta - 1.0)

    rows = []
    v, wr, wt = _worst(res, grid, times)
    rows.append(CheckRow("residual_nonnegative", v, wr, wt, float("nan"), tol))
    init = U[times.index(0.0)] * (1.0 + r * r) ** p.sigma - 1.0 if 0.0 in times else \
        K_tilde * eval_phi_field(p, pt, 0.0).values * (1.0 + r * r) ** p.sigma - 1.0
    i0 = int(np.argmin(init))
    rows.append(CheckRow("initial_domination", float(init[i0]), float(r[i0]), 0.0, K_tilde, tol))
    v, wr, wt = _worst(lower_ratio / c_proof - 1.0, grid, times)
    rows.append(CheckRow("lower_bound", v, wr, wt, c_proof, tol))
    v, wr, wt = _worst(1.0 - lower_ratio / C_proof, grid, times)
    rows.append(CheckRow("upper_bound", v, wr, wt, C_proof, tol))
    v, wr, wt = _worst(1.0 - deriv_ratio / Cp_proof, grid, times)
    rows.append(CheckRow("time_derivative", v, wr, wt, Cp_proof, tol))

    return Certificate(K_tilde=float(K_tilde), k_phi=k_phi,
                       c_fit=float(lower_ratio.min()), C_fit=float(lower_ratio.max()),
                       Cprime_fit=float(deriv_ratio.max()), rows=tuple(rows))


def _abs_sandwich(phi: PhiParams, s_max: float, n: int = 4000):
    """``(min, max)`` of ``|phi(s)| (1+s)^beta`` on a log grid (used where phi may change sign)."""
    s = np.concatenate([[0.0], np.geomspace(1e-6, s_max, n)])
    ratio = np.abs(phi_beta(phi, s)) * (1.0 + s) ** phi.beta
    return float(ratio.min()), float(ratio.max())


def phi_psi_ratio_bounds(p: SupersolutionParams, pt: PotentialTable, times: Sequence[float]):
    """Observed ``(min, max)`` of ``Phi Psi^beta`` over grid nodes and ``times``."""
    lo, hi = math.inf, -math.inf
    for t in times:
        ratio = eval_phi_field(p, pt, t).values * eval_psi(p, pt, None, t) ** p.beta
        lo, hi = min(lo, float(ratio.min())), max(hi, float(ratio.max()))
    return lo, hi
