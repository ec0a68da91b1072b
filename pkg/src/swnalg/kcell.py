"""Step functions on a uniform grid, viewed as a commutative Hilbert algebra.

A :class:`Grid` splits ``[-L, L)`` into ``m`` equal cells; a
:class:`StepFunction` stores one complex value per cell.  Pointwise product,
conjugation and the ``L^2`` inner product are exact cellwise operations, so the
algebra is closed without any quadrature.

Linear maps on step functions (:class:`KLinearMap`) are matrices in the basis
of cell indicators: column ``k`` holds the coefficients of ``T(chi_k)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np

ENDO_TOL = 1e-12


class GridMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class Grid:
    half_width: float
    cells: int

    def __post_init__(self):
        if self.cells < 1:
            raise ValueError("a grid needs at least one cell")
        if not self.half_width > 0:
            raise ValueError("half_width must be positive")

    @property
    def h(self) -> float:
        return 2.0 * self.half_width / self.cells

    @property
    def edges(self) -> np.ndarray:
        return -self.half_width + self.h * np.arange(self.cells + 1)

    def cell_of(self, x: float) -> int:
        """Index of the boundary ``x``; raises unless ``x`` is a cell edge."""
        k = (x + self.half_width) / self.h
        kr = round(k)
        if abs(k - kr) > 1e-9 or not 0 <= kr <= self.cells:
            raise ValueError(f"{x} is not a cell boundary of {self}")
        return int(kr)

    def indicator(self, s: float, t: float) -> "StepFunction":
        """``chi_[s,t)`` for grid-aligned ``s < t``."""
        if not s < t:
            raise ValueError("indicator needs s < t")
        a, b = self.cell_of(s), self.cell_of(t)
        c = np.zeros(self.cells, dtype=complex)
        c[a:b] = 1.0
        return StepFunction(self, c)

    def cell_indicator(self, k: int) -> "StepFunction":
        c = np.zeros(self.cells, dtype=complex)
        c[k] = 1.0
        return StepFunction(self, c)

    def zero(self) -> "StepFunction":
        return StepFunction(self, np.zeros(self.cells, dtype=complex))

    def constant(self, value: complex) -> "StepFunction":
        return StepFunction(self, np.full(self.cells, value, dtype=complex))

    def to_json(self) -> dict:
        return {"half_width": self.half_width, "cells": self.cells}


@dataclass(frozen=True, eq=False)
class StepFunction:
    grid: Grid
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex).reshape(-1)
        if c.shape != (self.grid.cells,):
            raise ValueError(
                f"expected {self.grid.cells} coefficients, got {c.shape[0]}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    def _check(self, other: "StepFunction"):
        if self.grid != other.grid:
            raise GridMismatchError(f"{self.grid} != {other.grid}")

    def __add__(self, other: "StepFunction") -> "StepFunction":
        self._check(other)
        return StepFunction(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other: "StepFunction") -> "StepFunction":
        self._check(other)
        return StepFunction(self.grid, self.coeffs - other.coeffs)

    def __neg__(self) -> "StepFunction":
        return StepFunction(self.grid, -self.coeffs)

    def scale(self, z: complex) -> "StepFunction":
        return StepFunction(self.grid, z * self.coeffs)

    def __mul__(self, other):
        if isinstance(other, StepFunction):
            return multiply(self, other)
        return self.scale(other)

    __rmul__ = __mul__

    def conj(self) -> "StepFunction":
        return conjugate(self)

    def integral(self) -> complex:
        return complex(self.grid.h * self.coeffs.sum())

    def is_zero(self, tol: float = 0.0) -> bool:
        return bool(np.all(np.abs(self.coeffs) <= tol))

    def allclose(self, other: "StepFunction", atol: float = 1e-12) -> bool:
        return self.grid == other.grid and bool(
            np.allclose(self.coeffs, other.coeffs, rtol=0, atol=atol))

    def support(self, tol: float = 0.0) -> np.ndarray:
        return np.abs(self.coeffs) > tol

    def to_json(self) -> dict:
        return {**self.grid.to_json(),
                "re": self.coeffs.real.tolist(),
                "im": self.coeffs.imag.tolist()}

    @classmethod
    def from_json(cls, d: dict) -> "StepFunction":
        grid = Grid(float(d["half_width"]), int(d["cells"]))
        re = np.asarray(d["re"], dtype=float)
        im = np.asarray(d.get("im", np.zeros_like(re)), dtype=float)
        return cls(grid, re + 1j * im)


def multiply(f: StepFunction, g: StepFunction) -> StepFunction:
    f._check(g)
    return StepFunction(f.grid, f.coeffs * g.coeffs)


def conjugate(f: StepFunction) -> StepFunction:
    return StepFunction(f.grid, np.conj(f.coeffs))


def inner(f: StepFunction, g: StepFunction) -> complex:
    """``<f, g> = h * sum conj(f_k) g_k``, antilinear in ``f``."""
    f._check(g)
    return complex(f.grid.h * np.vdot(f.coeffs, g.coeffs))


@dataclass(frozen=True, eq=False)
class KLinearMap:
    """Linear map between step-function spaces, in the cell-indicator basis."""

    matrix: np.ndarray = field(repr=False)
    grid_in: Grid
    grid_out: Grid | None = None

    def __post_init__(self):
        if self.grid_out is None:
            object.__setattr__(self, "grid_out", self.grid_in)
        m = np.array(self.matrix, dtype=complex)
        if m.shape != (self.grid_out.cells, self.grid_in.cells):
            raise ValueError(f"matrix shape {m.shape} does not match grids")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def square(self) -> bool:
        return self.grid_in == self.grid_out

    def __call__(self, f: StepFunction) -> StepFunction:
        if f.grid != self.grid_in:
            raise GridMismatchError(f"map expects {self.grid_in}, got {f.grid}")
        return StepFunction(self.grid_out, self.matrix @ f.coeffs)

    def scale(self, z: complex) -> "KLinearMap":
        return KLinearMap(z * self.matrix, self.grid_in, self.grid_out)

    def compose(self, other: "KLinearMap") -> "KLinearMap":
        """``self o other``."""
        if other.grid_out != self.grid_in:
            raise GridMismatchError("cannot compose maps on different grids")
        return KLinearMap(self.matrix @ other.matrix, other.grid_in, self.grid_out)

    def range_support(self, tol: float = ENDO_TOL) -> np.ndarray:
        """Output cells touched by some column."""
        return np.any(np.abs(self.matrix) > tol, axis=1)

    def to_json(self) -> dict:
        return {**self.grid_in.to_json(),
                "out": self.grid_out.to_json(),
                "re": self.matrix.real.tolist(),
                "im": self.matrix.imag.tolist()}

    @classmethod
    def from_json(cls, d: dict) -> "KLinearMap":
        gin = Grid(float(d["half_width"]), int(d["cells"]))
        gout = Grid(float(d["out"]["half_width"]), int(d["out"]["cells"])) if "out" in d else gin
        re = np.asarray(d["re"], dtype=float)
        im = np.asarray(d["im"], dtype=float) if "im" in d else np.zeros_like(re)
        return cls(re + 1j * im, gin, gout)

    @classmethod
    def identity(cls, grid: Grid) -> "KLinearMap":
        return cls(np.eye(grid.cells), grid)

    @classmethod
    def permutation(cls, grid: Grid, perm) -> "KLinearMap":
        """Map sending ``chi_k`` to ``chi_{perm[k]}``."""
        perm = list(perm)
        if sorted(perm) != list(range(grid.cells)):
            raise ValueError("not a permutation of the cells")
        m = np.zeros((grid.cells, grid.cells))
        m[perm, np.arange(grid.cells)] = 1.0
        return cls(m, grid)

    def phase(self, alpha: StepFunction) -> "KLinearMap":
        """``e^{i alpha} T``: multiply the output by ``exp(i alpha)``."""
        if alpha.grid != self.grid_out:
            raise GridMismatchError("phase lives on the output grid")
        return KLinearMap(np.exp(1j * alpha.coeffs)[:, None] * self.matrix,
                          self.grid_in, self.grid_out)


def shift_isometry(grid: Grid) -> KLinearMap:
    """Push ``[0, oo)`` right by one and ``(-oo, 0]`` left by one.

    Cells whose image leaves ``[-L, L)`` are sent to zero, so the map is only
    isometric on functions supported in ``[-L+1, L-1]``
    (see :func:`shift_isometry_domain`).
    """
    steps = 1.0 / grid.h
    s = round(steps)
    if abs(steps - s) > 1e-9 or s < 1 or grid.half_width < 1.0 - 1e-12:
        raise ValueError(f"grid {grid} has no cell boundaries at +-1")
    m = grid.cells
    mat = np.zeros((m, m))
    mid = grid.cell_of(0.0)
    for k in range(m):
        j = k + s if k >= mid else k - s
        if 0 <= j < m:
            mat[j, k] = 1.0
    return KLinearMap(mat, grid)


def shift_isometry_domain(grid: Grid) -> np.ndarray:
    """Input cells inside ``[-L+1, L-1)``, where the truncated shift is isometric."""
    a = grid.cell_of(-grid.half_width + 1.0)
    b = grid.cell_of(grid.half_width - 1.0)
    mask = np.zeros(grid.cells, dtype=bool)
    mask[a:b] = True
    return mask


def pointwise_sup(fs) -> StepFunction:
    """Cellwise maximum of real step functions."""
    fs = list(fs)
    c = np.max(np.stack([f.coeffs.real for f in fs]), axis=0)
    return StepFunction(fs[0].grid, c)


@dataclass(frozen=True)
class EndomorphismReport:
    multiplicative: bool
    star: bool
    isometric: bool
    multiplicative_violation: float
    star_violation: float
    isometric_violation: float

    @property
    def ok(self) -> bool:
        return self.multiplicative and self.star and self.isometric


def is_hilbert_algebra_endomorphism(T: KLinearMap, domain=None,
                                    tol: float = ENDO_TOL) -> EndomorphismReport:
    """Check ``T(fg) = T(f)T(g)``, ``T(f*) = T(f)*`` and ``<Tf, Tg> = <f, g>``.

    All three are checked on the indicators of the cells in ``domain``
    (a boolean mask over input cells, default all cells); by bilinearity this
    covers every step function supported there.  Never raises on failure.
    """
    A = T.matrix
    n_in = A.shape[1]
    dom = np.ones(n_in, dtype=bool) if domain is None else np.asarray(domain, dtype=bool)
    cols = A[:, dom]
    k = cols.shape[1]

    # T(chi_j chi_k) = delta_jk T(chi_k)  versus  T(chi_j) T(chi_k)
    prod = cols[:, :, None] * cols[:, None, :]
    target = np.zeros_like(prod)
    idx = np.arange(k)
    target[:, idx, idx] = cols
    mult_v = float(np.max(np.abs(prod - target))) if k else 0.0

    star_v = float(np.max(np.abs(cols.imag))) if k else 0.0

    gram = T.grid_out.h * (cols.conj().T @ cols)
    iso_v = float(np.max(np.abs(gram - T.grid_in.h * np.eye(k)))) if k else 0.0

    return EndomorphismReport(mult_v <= tol, star_v <= tol, iso_v <= tol,
                              mult_v, star_v, iso_v)


def random_step_function(grid: Grid, rng: np.random.Generator,
                         real: bool = False) -> StepFunction:
    c = rng.normal(size=grid.cells)
    if not real:
        c = c + 1j * rng.normal(size=grid.cells)
    return StepFunction(grid, c)


def is_grid_aligned(grid: Grid, x: float) -> bool:
    k = (x + grid.half_width) / grid.h
    return math.isclose(k, round(k), abs_tol=1e-9) and 0 <= round(k) <= grid.cells
