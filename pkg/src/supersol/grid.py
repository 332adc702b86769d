"""Uniform radial grid on [r0, rmax] for radially symmetric problems in R^N."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ConstructionError, ParameterError


@dataclass(frozen=True)
class RadialGrid:
    """
    Nodes ``r_i = r0 + i*dr``, ``i = 0..n-1``, with ``r_{n-1} = rmax``.

    ``r0 = 0`` means the whole space (the origin is a grid node); ``r0 > 0``
    is the exterior domain ``{|x| > r0}``.  All integrals drop the area of
    the unit sphere, i.e. they integrate against ``r^{N-1} dr``.
    """

    r0: float
    rmax: float
    dr: float
    dim: int

    def __post_init__(self):
        if self.dim < 1 or int(self.dim) != self.dim:
            raise ParameterError(f"dimension must be a positive integer, got {self.dim}")
        if not self.dr > 0:
            raise ParameterError(f"dr={self.dr} must be positive")
        if self.r0 < 0:
            raise ParameterError(f"inner radius r0={self.r0} must be >= 0")
        if self.rmax - self.r0 < 10 * self.dr * (1 - 1e-12):
            raise ConstructionError(
                f"domain [{self.r0}, {self.rmax}] is shorter than 10 cells of width {self.dr}")
        cells = (self.rmax - self.r0) / self.dr
        if abs(cells - round(cells)) > 1e-6 * max(1.0, cells):
            raise ConstructionError(
                f"(rmax - r0)/dr = {cells} is not an integer; choose rmax on the lattice")

    @classmethod
    def covering(cls, r0: float, rmax: float, dr: float, dim: int) -> "RadialGrid":
        """Grid with spacing ``dr`` whose outer radius is ``rmax`` rounded up to the lattice."""
        cells = math.ceil((rmax - r0) / dr - 1e-9)
        return cls(r0, r0 + cells * dr, dr, dim)

    @property
    def n(self) -> int:
        return int(round((self.rmax - self.r0) / self.dr)) + 1

    @property
    def whole_space(self) -> bool:
        return self.r0 == 0.0

    @cached_property
    def r(self) -> np.ndarray:
        r = self.r0 + self.dr * np.arange(self.n)
        r[-1] = self.rmax
        r.flags.writeable = False
        return r

    @cached_property
    def weights(self) -> np.ndarray:
        """Trapezoid weights for ``int f r^{N-1} dr``."""
        w = self.r ** (self.dim - 1) * self.dr
        w[0] *= 0.5
        w[-1] *= 0.5
        w.flags.writeable = False
        return w

    def integrate(self, f) -> float:
        return float(np.dot(self.weights, f))

    def check_field(self, f, name: str = "field") -> np.ndarray:
        arr = np.asarray(f, dtype=float)
        if arr.shape != (self.n,):
            raise ConstructionError(f"{name} has shape {arr.shape}, grid has {self.n} nodes")
        return arr

    def gradient(self, f) -> np.ndarray:
        """Radial derivative: central differences, one-sided second order at the ends."""
        return np.gradient(self.check_field(f), self.dr, edge_order=2)
