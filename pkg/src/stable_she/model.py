"""Grid, field and parameter types shared by every simulator."""
from __future__ import annotations

import math
import dataclasses
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from numpy.typing import NDArray

__all__ = [
    "GridSpec",
    "Field",
    "ModelParams",
    "RngStream",
    "GaussianBump",
    "integrate",
    "lp_norm_pow",
    "pairing",
]


@dataclass(frozen=True)
class GridSpec:
    """Uniform cell-centred grid on ``[left, right]``."""

    left: float = -10.0
    right: float = 10.0
    cells: int = 400

    def __post_init__(self):
        if not (math.isfinite(self.left) and math.isfinite(self.right)):
            raise ValueError("grid bounds must be finite")
        if not self.right > self.left:
            raise ValueError(f"grid needs right > left, got [{self.left}, {self.right}]")
        if int(self.cells) != self.cells or self.cells < 8:
            raise ValueError(f"grid needs at least 8 cells, got {self.cells}")
        object.__setattr__(self, "cells", int(self.cells))

    @property
    def dx(self) -> float:
        return (self.right - self.left) / self.cells

    @cached_property
    def centers(self) -> NDArray[np.float64]:
        x = self.left + (np.arange(self.cells) + 0.5) * self.dx
        x.flags.writeable = False
        return x

    def cell_of(self, x: float) -> int:
        """Index of the cell containing ``x``; points outside raise."""
        if not self.left <= x <= self.right:
            raise ValueError(f"{x} lies outside [{self.left}, {self.right}]")
        return min(int((x - self.left) / self.dx), self.cells - 1)

    def refined(self, factor: int = 2) -> GridSpec:
        return GridSpec(self.left, self.right, self.cells * factor)


@dataclass(frozen=True, eq=False)
class Field:
    """Cell densities on a grid. The stored array is a read-only copy."""

    grid: GridSpec
    values: NDArray[np.float64]

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64, copy=True)
        if v.shape != (self.grid.cells,):
            raise ValueError(f"field has shape {v.shape}, grid expects ({self.grid.cells},)")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def zeros(cls, grid: GridSpec) -> Field:
        return cls(grid, np.zeros(grid.cells))

    @classmethod
    def from_function(cls, grid: GridSpec, func) -> Field:
        return cls(grid, func(grid.centers))

    def copy_values(self) -> NDArray[np.float64]:
        return np.array(self.values)

    def is_nonnegative(self) -> bool:
        return bool(np.all(self.values >= 0.0))

    def __eq__(self, other):
        if not isinstance(other, Field):
            return NotImplemented
        return self.grid == other.grid and np.array_equal(self.values, other.values)

    __hash__ = None


def _check_same_grid(f: Field, g: Field):
    if f.grid != g.grid:
        raise ValueError("fields live on different grids")


def integrate(f: Field) -> float:
    """Rectangle-rule integral ``sum_i f_i dx``."""
    return float(np.sum(f.values) * f.grid.dx)


def lp_norm_pow(f: Field, p: float) -> float:
    """Return ``||f||_p^p = sum_i |f_i|^p dx`` (the p-th power, no root)."""
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    return float(np.sum(np.abs(f.values) ** p) * f.grid.dx)


def pairing(f: Field, g: Field) -> float:
    """Rectangle-rule inner product ``sum_i f_i g_i dx``."""
    _check_same_grid(f, g)
    return float(np.dot(f.values, g.values) * f.grid.dx)


@dataclass(frozen=True)
class GaussianBump:
    """``mass`` times the normal density with mean ``center`` and std ``width``.

    The closed-form Laplacian feeds the martingale drift term.
    """

    center: float = 0.0
    width: float = 1.0
    mass: float = 1.0

    def __post_init__(self):
        if not self.width > 0:
            raise ValueError("bump width must be positive")
        if self.mass < 0:
            raise ValueError("bump mass must be nonnegative")

    def density(self, x):
        z = (np.asarray(x, dtype=float) - self.center) / self.width
        return self.mass * np.exp(-0.5 * z * z) / (self.width * math.sqrt(2 * math.pi))

    def laplacian(self, x):
        z = (np.asarray(x, dtype=float) - self.center) / self.width
        return self.density(x) * (z * z - 1.0) / self.width**2

    def field(self, grid: GridSpec) -> Field:
        return Field.from_function(grid, self.density)

    def laplacian_field(self, grid: GridSpec) -> Field:
        return Field.from_function(grid, self.laplacian)

    def tail_mass(self, grid: GridSpec) -> float:
        """Mass of the bump lying outside the grid domain."""
        s = self.width * math.sqrt(2.0)
        return 0.5 * self.mass * (
            math.erfc((self.center - grid.left) / s) + math.erfc((grid.right - self.center) / s)
        )


@dataclass(frozen=True)
class ModelParams:
    """Model and discretisation parameters.

    ``dual_scale`` multiplies both the internal-clock integrand of the dual
    process and its nonlinear sink, so that the jump compensator stays exact.
    """

    alpha: float = 1.5
    beta: float = 0.8
    n: int = 16
    eps_jump: float = 1e-3
    dt: float = 1e-3
    horizon: float = 0.25
    grid: GridSpec = field(default_factory=GridSpec)
    dual_scale: float = 1.0

    def __post_init__(self):
        a, b = self.alpha, self.beta
        if not 1.0 < a < 2.0:
            raise ValueError(f"alpha must lie in (1, 2), got {a}")
        if not 0.0 < b < 1.0:
            raise ValueError(f"beta must lie in (0, 1), got {b}")
        if not a * b > 1.0:
            raise ValueError(f"alpha*beta must exceed 1, got {a * b:.6g}")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n}")
        object.__setattr__(self, "n", int(self.n))
        if not self.eps_jump > 0:
            raise ValueError("eps_jump must be positive")
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")
        if not 0 < self.dt < self.grid.dx**2:
            raise ValueError(f"dt must lie in (0, dx^2 = {self.grid.dx**2:.6g}), got {self.dt}")
        if not self.dual_scale > 0:
            raise ValueError("dual_scale must be positive")

    @property
    def alphabeta(self) -> float:
        return self.alpha * self.beta

    @property
    def b_n(self) -> float:
        ab = self.alphabeta
        return ab / math.gamma(2.0 - ab) * self.n ** (ab - 1.0)

    @property
    def eta(self) -> float:
        ab = self.alphabeta
        return ab * (ab - 1.0) / math.gamma(2.0 - ab)

    @property
    def clock_rate(self) -> float:
        ab = self.alphabeta
        return self.n**ab * (ab - 1.0) / math.gamma(2.0 - ab)

    @property
    def sink(self) -> float:
        """Coefficient ``c`` of the dual flow ``v' = v''/2 - c v^alpha``."""
        return self.dual_scale * self.b_n

    @property
    def k_n(self) -> float:
        return math.log(self.n)

    def replace(self, **changes) -> ModelParams:
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class RngStream:
    """An independent random stream keyed by ``(seed, stream)``."""

    seed: int
    stream: int

    def __post_init__(self):
        for name in ("seed", "stream"):
            v = getattr(self, name)
            if int(v) != v or not 0 <= v < 2**64:
                raise ValueError(f"{name} must be an integer in [0, 2^64), got {v}")

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.seed), spawn_key=(int(self.stream),))
        return np.random.Generator(np.random.PCG64(ss))
