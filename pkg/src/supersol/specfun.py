"""
Kummer's confluent hypergeometric function M(b, c; s) and the profile family
built from it.

Evaluation strategy
-------------------
* ``s <= s*``: Taylor series, summed until three consecutive terms are below
  ``1e-16`` times the partial sum (at most ``MAX_TERMS`` terms).
* ``s > s*``: large-argument expansion

      e^{-s} M(b, c; s) ~ Gamma(c)/Gamma(b) s^{b-c}
                          sum_k (c-b)_k (1-b)_k / (k! s^k),

  truncated at its smallest term.
* ``b`` a non-positive integer: the series terminates and is summed exactly.

The switch point is ``s* = 50 + 2|b - c| + 2|(c - b)(1 - b)|``.  Everything is vectorised over
``s``; scalar input gives a Python ``float`` back.

The exponentially scaled value ``e^{-s} M`` is what the profile functions
need and is available without overflow for any ``s``; ``kummer_m`` itself
raises :class:`~supersol.errors.RangeError` once ``e^s`` leaves double range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, RangeError

MAX_TERMS = 10_000
SERIES_TOL = 1e-16
ASYMPTOTIC_MAX_TERMS = 400
_LOG_DBL_MAX = math.log(np.finfo(float).max)


def _is_nonpositive_integer(x: float) -> bool:
    return x <= 0 and float(x).is_integer()


@dataclass(frozen=True)
class KummerParams:
    """Parameters ``(b, c)`` of ``M(b, c; s)``; ``c`` must not be 0, -1, -2, ..."""

    b: float
    c: float

    def __post_init__(self):
        if not (math.isfinite(self.b) and math.isfinite(self.c)):
            raise ParameterError(f"non-finite Kummer parameters b={self.b}, c={self.c}")
        if _is_nonpositive_integer(self.c):
            raise ParameterError(f"c={self.c} is a non-positive integer; (c)_n vanishes")

    def shifted(self, db: float = 0.0, dc: float = 0.0) -> "KummerParams":
        return KummerParams(self.b + db, self.c + dc)


@dataclass(frozen=True)
class PhiParams:
    """Decay exponent ``beta`` and structural constant ``gamma_eps`` of phi_beta."""

    beta: float
    gamma_eps: float

    def __post_init__(self):
        if self.beta < 0:
            raise ParameterError(f"beta={self.beta} must be >= 0")
        if self.gamma_eps <= 0:
            raise ParameterError(f"gamma_eps={self.gamma_eps} must be > 0")

    @property
    def sign_definite(self) -> bool:
        """True when positivity and the derivative signs are guaranteed."""
        return 0 < self.beta < self.gamma_eps

    @property
    def kummer(self) -> KummerParams:
        return KummerParams(self.gamma_eps - self.beta, self.gamma_eps)


def series_threshold(p: KummerParams) -> float:
    """Argument above which the large-s expansion replaces the series.

    The extra ``2|(c-b)(1-b)|`` keeps the expansion away from the range where
    its leading terms do not yet decrease (large ``|b|``).
    """
    return 50.0 + 2.0 * abs(p.b - p.c) + 2.0 * abs((p.c - p.b) * (1.0 - p.b))


def _prepare(s):
    arr = np.asarray(s, dtype=float)
    if np.any(np.isnan(arr)):
        raise ParameterError("argument contains NaN")
    if np.any(arr < 0):
        raise ParameterError("Kummer argument s must be >= 0")
    return arr, arr.ndim == 0


def _out(arr, scalar):
    return float(arr) if scalar else arr


def _series(b: float, c: float, s: np.ndarray) -> np.ndarray:
    """Plain Taylor sum of M(b, c; s) (no scaling)."""
    total = np.ones_like(s)
    term = np.ones_like(s)
    run = np.zeros(s.shape, dtype=int)
    for n in range(MAX_TERMS):
        term = term * ((b + n) / (c + n)) * s / (n + 1)
        total = total + term
        tiny = np.abs(term) <= SERIES_TOL * np.abs(total)
        run = np.where(tiny, run + 1, 0)
        if np.all(run >= 3):
            return total
    raise RangeError(f"Taylor series for M({b}, {c}; s) did not converge in {MAX_TERMS} terms "
                     f"(regime: series, max s={float(np.max(s))})")


def _log_abs_gamma_ratio(c: float, b: float):
    """(log|Gamma(c)/Gamma(b)|, sign)."""
    return math.lgamma(c) - math.lgamma(b), _gamma_sign(c) * _gamma_sign(b)


def _gamma_sign(x: float) -> float:
    if x > 0:
        return 1.0
    return -1.0 if math.floor(x) % 2 else 1.0


def _asymptotic_scaled(b: float, c: float, s: np.ndarray) -> np.ndarray:
    """e^{-s} M(b, c; s) from the large-argument expansion (s large, b not a pole)."""
    total = np.ones_like(s)
    term = np.ones_like(s)
    active = np.ones(s.shape, dtype=bool)
    for k in range(ASYMPTOTIC_MAX_TERMS):
        new = term * ((c - b + k) * (1.0 - b + k)) / ((k + 1) * s)
        growing = np.abs(new) > np.abs(term)
        active &= ~growing
        total = np.where(active, total + new, total)
        active &= np.abs(new) > 1e-17 * np.abs(total)
        term = new
        if not active.any():
            break
    log_ratio, sign = _log_abs_gamma_ratio(c, b)
    return sign * np.exp(log_ratio + (b - c) * np.log(s)) * total


def _scaled(p: KummerParams, s: np.ndarray) -> np.ndarray:
    b, c = p.b, p.c
    if b == c:
        return np.ones_like(s)
    out = np.empty_like(s)
    if _is_nonpositive_integer(b):
        # terminating series: a polynomial of degree -b
        out[...] = _series(b, c, s) * np.exp(-s)
        return out
    cut = series_threshold(p)
    low = s <= cut
    if low.any():
        out[low] = _series(b, c, s[low]) * np.exp(-s[low])
    if (~low).any():
        out[~low] = _asymptotic_scaled(b, c, s[~low])
    return out


def kummer_m_scaled(p: KummerParams, s):
    """Return ``e^{-s} M(b, c; s)``; finite for every ``s >= 0``."""
    arr, scalar = _prepare(s)
    return _out(_scaled(p, arr), scalar)


def kummer_m(p: KummerParams, s):
    """
    Kummer's function of the first kind, ``M(b, c; s) = sum (b)_n/(c)_n s^n/n!``.

    Parameters
    ----------
    p : KummerParams
    s : float or array_like
        Non-negative argument.

    Raises
    ------
    ParameterError
        ``s < 0``.
    RangeError
        ``M`` overflows double precision (large-argument regime).
    """
    arr, scalar = _prepare(s)
    if p.b == p.c:
        if np.any(arr > _LOG_DBL_MAX):
            raise RangeError(f"M({p.b}, {p.c}; s) = e^s overflows for s > {_LOG_DBL_MAX:.1f} "
                             "(regime: exponential)")
        return _out(np.exp(arr), scalar)
    if _is_nonpositive_integer(p.b):
        return _out(_series(p.b, p.c, arr), scalar)
    cut = series_threshold(p)
    out = np.empty_like(arr)
    low = arr <= cut
    if low.any():
        out[low] = _series(p.b, p.c, arr[low])
    if (~low).any():
        sh = arr[~low]
        scaled = _asymptotic_scaled(p.b, p.c, sh)
        with np.errstate(divide="ignore"):
            log_mag = np.log(np.abs(scaled)) + sh
        if np.any(log_mag > _LOG_DBL_MAX):
            raise RangeError(f"M({p.b}, {p.c}; s) overflows for s={float(sh.max()):g} "
                             "(regime: asymptotic)")
        out[~low] = scaled * np.exp(sh)
    return _out(out, scalar)


def pochhammer(x: float, n: int) -> float:
    out = 1.0
    for k in range(n):
        out *= x + k
    return out


def kummer_m_derivative(p: KummerParams, s, m: int = 1):
    """m-th derivative in ``s``: ``(b)_m/(c)_m M(b+m, c+m; s)`` (``0 <= m <= 4``)."""
    if not 0 <= m <= 4:
        raise ParameterError(f"derivative order m={m} outside 0..4")
    if m == 0:
        return kummer_m(p, s)
    factor = pochhammer(p.b, m) / pochhammer(p.c, m)
    if factor == 0.0:
        arr, scalar = _prepare(s)
        return _out(np.zeros_like(arr), scalar)
    return factor * kummer_m(p.shifted(m, m), s)


def kummer_ode_residual(p: KummerParams, s):
    """``s M'' + (c - s) M' - b M``; zero up to rounding."""
    arr, scalar = _prepare(s)
    m0 = kummer_m(p, arr)
    m1 = kummer_m_derivative(p, arr, 1)
    m2 = kummer_m_derivative(p, arr, 2)
    return _out(arr * m2 + (p.c - arr) * m1 - p.b * m0, scalar)


def contiguous_check(p: KummerParams, s):
    """
    Residuals of the two contiguous relations

        s M = s M' + (c-b) M - (c-b) M(b-1, c; s)
        c M' = c M - (c-b) M(b, c+1; s)
    """
    arr, scalar = _prepare(s)
    m = kummer_m(p, arr)
    dm = kummer_m_derivative(p, arr, 1)
    d = p.c - p.b
    r1 = arr * m - (arr * dm + d * m - d * kummer_m(p.shifted(db=-1.0), arr))
    r2 = p.c * dm - (p.c * m - d * kummer_m(p.shifted(dc=1.0), arr))
    return _out(r1, scalar), _out(r2, scalar)


def gamma_ratio(c: float, b: float) -> float:
    """``Gamma(c) / Gamma(b)`` through log-gamma; poles raise ParameterError."""
    for name, x in (("c", c), ("b", b)):
        if _is_nonpositive_integer(x):
            raise ParameterError(f"Gamma has a pole at {name}={x}")
    if c == b:
        return 1.0
    log_ratio, sign = _log_abs_gamma_ratio(c, b)
    return sign * math.exp(log_ratio)


def phi_beta(p: PhiParams, s):
    """``phi_{beta}(s) = e^{-s} M(gamma - beta, gamma; s)``."""
    return kummer_m_scaled(p.kummer, s)


def phi_beta_derivs(p: PhiParams, s):
    """
    ``(phi, phi', phi'')`` from the closed forms

        phi'  = -(beta/gamma) e^{-s} M(gamma-beta, gamma+1; s)
        phi'' = beta(beta+1)/(gamma(gamma+1)) e^{-s} M(gamma-beta, gamma+2; s)
    """
    arr, scalar = _prepare(s)
    beta, g = p.beta, p.gamma_eps
    phi = _scaled(p.kummer, arr)
    if beta == 0.0:
        zero = np.zeros_like(arr)
        return _out(phi, scalar), _out(zero, scalar), _out(zero.copy(), scalar)
    d1 = -(beta / g) * _scaled(KummerParams(g - beta, g + 1.0), arr)
    d2 = beta * (beta + 1.0) / (g * (g + 1.0)) * _scaled(KummerParams(g - beta, g + 2.0), arr)
    return _out(phi, scalar), _out(d1, scalar), _out(d2, scalar)


def phi_sandwich_constants(p: PhiParams, s_max: float = 1e6, n: int = 4000):
    """
    Empirical ``(k, K)`` with ``k (1+s)^-beta <= phi(s) <= K (1+s)^-beta``.

    Sampled on a log-spaced grid of ``[0, s_max]`` together with the limit
    ``Gamma(gamma)/Gamma(gamma-beta)`` of ``phi(s) (1+s)^beta`` as s -> inf.
    """
    s = np.concatenate([[0.0], np.geomspace(1e-6, s_max, n)])
    ratio = phi_beta(p, s) * (1.0 + s) ** p.beta
    b = p.gamma_eps - p.beta
    if not _is_nonpositive_integer(b):
        ratio = np.append(ratio, gamma_ratio(p.gamma_eps, b))
    return float(ratio.min()), float(ratio.max())
