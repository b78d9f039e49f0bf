"""Fuzzy-number-valued functions on a compact interval.

A fuzzy-valued function is represented through its endpoint surfaces
``lo(alpha, x)`` and ``hi(alpha, x)``.  The workhorse representation is
the triangular family, determined by three ordered scalar corner
functions; crisp functions are the degenerate case with all corners
equal.  Arbitrary endpoint surfaces are supported through
:class:`EndpointFuzzyFunction` for inputs that are not linear in alpha.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .fuzzy import (
    DEFAULT_ALPHA_GRID,
    AlphaGrid,
    FuzzyNumber,
    GridMismatchError,
    repair_nesting,
)


@dataclass(frozen=True)
class DomainGrid:
    """Discretization of a compact interval, endpoints included."""

    a: float
    b: float
    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        object.__setattr__(self, "points", pts)
        if pts.ndim != 1 or pts.size < 2:
            raise ValueError("domain grid needs at least 2 points")
        if not np.all(np.diff(pts) > 0):
            raise ValueError("domain points must be strictly increasing")
        if pts[0] != self.a or pts[-1] != self.b:
            raise ValueError("domain grid must cover both endpoints")
        pts.setflags(write=False)

    @classmethod
    def uniform(cls, a: float = 0.0, b: float = 1.0, n: int = 1001) -> "DomainGrid":
        if n < 3:
            raise ValueError("need at least 3 domain points")
        return cls(a, b, np.linspace(a, b, n))

    @property
    def radius(self) -> float:
        """max(|a|, |b|), the constant d used by the rate bound."""
        return max(abs(self.a), abs(self.b))

    def __eq__(self, other) -> bool:
        return isinstance(other, DomainGrid) and np.array_equal(self.points, other.points)

    def __hash__(self):
        return hash(self.points.tobytes())


class FuzzyFunction:
    """Base for fuzzy-number-valued functions on ``[a, b]``.

    Subclasses implement :meth:`table`, which evaluates the endpoint
    surfaces on an array of points and returns shape
    ``(len(xs), levels, 2)``.  Everything else derives from it.
    """

    def __init__(self, a: float, b: float, grid: AlphaGrid = DEFAULT_ALPHA_GRID, name: str = ""):
        if not (a < b):
            raise ValueError("domain must satisfy a < b")
        self.a = float(a)
        self.b = float(b)
        self.grid = grid
        self.name = name or type(self).__name__

    def table(self, xs: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def value(self, x: float) -> FuzzyNumber:
        cuts = self.table(np.array([float(x)]))[0]
        return FuzzyNumber(self.grid, cuts)

    def endpoint(self, level_index: int, sign: int, x) -> np.ndarray:
        """Endpoint slice value(s): sign -1 for lower, +1 for upper."""
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        col = 0 if sign < 0 else 1
        vals = self.table(xs)[:, level_index, col]
        return vals if np.ndim(x) else float(vals[0])

    def slice_fn(self, level_index: int, sign: int) -> Callable[[np.ndarray], np.ndarray]:
        """The endpoint slice as a plain scalar function of x."""
        return lambda xs: self.endpoint(level_index, sign, np.asarray(xs, dtype=float))


class TriangularFuzzyFunction(FuzzyFunction):
    """Fuzzy-valued function with triangular values at every point.

    ``left``, ``peak``, ``right`` are vectorized scalar functions with
    ``left <= peak <= right`` pointwise on the domain.  The alpha-cut at
    level t is ``[left + t*(peak-left), right - t*(right-peak)]``, so the
    endpoint surfaces are linear in alpha and the whole function is
    determined by its three corners.
    """

    def __init__(self, left, peak, right, a=0.0, b=1.0, grid=DEFAULT_ALPHA_GRID,
                 name="", corner_table_fn=None):
        super().__init__(a, b, grid, name)
        self._left = left
        self._peak = peak
        self._right = right
        self._corner_table_fn = corner_table_fn

    @property
    def corners(self):
        return (self._left, self._peak, self._right)

    def corner_table(self, xs: np.ndarray) -> np.ndarray:
        """Corner values at points, shape ``(len(xs), 3)``."""
        xs = np.asarray(xs, dtype=float)
        if self._corner_table_fn is not None:
            return np.asarray(self._corner_table_fn(xs), dtype=float)
        out = np.empty((xs.size, 3))
        out[:, 0] = self._left(xs)
        out[:, 1] = self._peak(xs)
        out[:, 2] = self._right(xs)
        return out

    def table(self, xs: np.ndarray) -> np.ndarray:
        c = self.corner_table(xs)
        return corner_cut_table(c, self.grid)


def corner_cut_table(corners: np.ndarray, grid: AlphaGrid) -> np.ndarray:
    """Cut tables for triangular values given per-point corners ``(m, 3)``."""
    al = grid.levels
    a, b, c = corners[:, 0], corners[:, 1], corners[:, 2]
    lo = a[:, None] + al[None, :] * (b - a)[:, None]
    hi = c[:, None] - al[None, :] * (c - b)[:, None]
    return np.stack([lo, hi], axis=2)


class CrispFuzzyFunction(TriangularFuzzyFunction):
    """Scalar function embedded as a fuzzy-valued one (degenerate cuts)."""

    def __init__(self, g, a=0.0, b=1.0, grid=DEFAULT_ALPHA_GRID, name=""):
        super().__init__(g, g, g, a, b, grid, name)
        self.scalar = g

    def corner_table(self, xs: np.ndarray) -> np.ndarray:
        v = np.asarray(self._peak(np.asarray(xs, dtype=float)), dtype=float)
        return np.repeat(v[:, None], 3, axis=1)


class EndpointFuzzyFunction(FuzzyFunction):
    """General fuzzy-valued function from endpoint surfaces.

    ``lo_fn(alphas, xs)`` and ``hi_fn(alphas, xs)`` must broadcast over a
    level column and a point row and return ``(len(xs), levels)``.
    """

    def __init__(self, lo_fn, hi_fn, a=0.0, b=1.0, grid=DEFAULT_ALPHA_GRID, name=""):
        super().__init__(a, b, grid, name)
        self._lo = lo_fn
        self._hi = hi_fn

    def table(self, xs: np.ndarray) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        al = self.grid.levels[None, :]
        col = xs[:, None]
        lo = np.broadcast_to(self._lo(al, col), (xs.size, self.grid.size))
        hi = np.broadcast_to(self._hi(al, col), (xs.size, self.grid.size))
        return np.stack([lo, hi], axis=2)


# ---------------------------------------------------------------------------
# Test-function catalog
# ---------------------------------------------------------------------------

def _e0(xs):
    return np.ones_like(xs)


def _e1(xs):
    return np.asarray(xs, dtype=float)


def _e2(xs):
    return np.asarray(xs, dtype=float) ** 2


def catalog(name: str, grid: AlphaGrid = DEFAULT_ALPHA_GRID) -> FuzzyFunction:
    """Named fuzzy test functions on [0, 1].

    ``e0``, ``e1``, ``e2`` are the crisp monomials.  ``f1`` is a
    constant-width triangular band around sin(pi x); ``f2`` has
    x-dependent width on both sides of its peak.
    """
    if name == "e0":
        return CrispFuzzyFunction(_e0, name="e0", grid=grid)
    if name == "e1":
        return CrispFuzzyFunction(_e1, name="e1", grid=grid)
    if name == "e2":
        return CrispFuzzyFunction(_e2, name="e2", grid=grid)
    if name == "f1":
        w = 0.25

        def f1_corners(xs):
            s = np.sin(np.pi * xs)
            out = np.empty((xs.size, 3))
            out[:, 0] = s - w
            out[:, 1] = s
            out[:, 2] = s + w
            return out

        return TriangularFuzzyFunction(
            lambda xs: np.sin(np.pi * xs) - w,
            lambda xs: np.sin(np.pi * xs),
            lambda xs: np.sin(np.pi * xs) + w,
            name="f1", grid=grid, corner_table_fn=f1_corners,
        )
    if name == "f2":
        return TriangularFuzzyFunction(
            _e2,
            lambda xs: xs ** 2 + xs * (1.0 - xs),
            lambda xs: xs ** 2 + 1.0,
            name="f2", grid=grid,
        )
    raise ValueError(f"unknown catalog function {name!r}; choose from {catalog_names()}")


def catalog_names() -> list:
    return ["e0", "e1", "e2", "f1", "f2"]


# ---------------------------------------------------------------------------
# Sup metric, norms, moduli of continuity
# ---------------------------------------------------------------------------

def _check_compatible(g: FuzzyFunction, h: FuzzyFunction, grid: DomainGrid) -> None:
    if g.grid != h.grid:
        raise GridMismatchError("fuzzy functions live on different alpha grids")
    if (g.a, g.b) != (h.a, h.b):
        raise GridMismatchError("fuzzy functions live on different domains")
    if grid.a < g.a or grid.b > g.b:
        raise ValueError("domain grid extends beyond the functions' domain")


def metric_Dstar(g: FuzzyFunction, h: FuzzyFunction, grid: DomainGrid) -> float:
    """Sup over the domain grid of the level-set metric between values."""
    _check_compatible(g, h, grid)
    return float(np.max(np.abs(g.table(grid.points) - h.table(grid.points))))


def sup_norm(g: Callable[[np.ndarray], np.ndarray], grid: DomainGrid) -> float:
    """Max of |g| over the domain grid."""
    return float(np.max(np.abs(np.asarray(g(grid.points), dtype=float))))


def _pair_offsets(points: np.ndarray, delta: float):
    # Offsets k with some pair (i, i+k) within distance delta; on a
    # uniform grid this is a contiguous band.
    n = points.size
    for k in range(1, n):
        within = points[k:] - points[:-k] <= delta
        if not np.any(within):
            break
        yield k, within


def modulus_classical(g, delta: float, grid: DomainGrid) -> float:
    """First modulus of continuity of a scalar function on the grid.

    Maximum of |g(z) - g(x)| over grid pairs with |z - x| <= delta,
    by a banded pairwise sweep.
    """
    if delta <= 0:
        raise ValueError("modulus requires delta > 0")
    v = np.asarray(g(grid.points), dtype=float)
    best = 0.0
    for k, mask in _pair_offsets(grid.points, delta):
        d = np.abs(v[k:] - v[:-k])[mask]
        if d.size:
            best = max(best, float(np.max(d)))
    return best


def modulus_fuzzy(f: FuzzyFunction, delta: float, grid: DomainGrid) -> float:
    """Fuzzy first modulus: sup of D(f(z), f(x)) over pairs within delta."""
    if delta <= 0:
        raise ValueError("modulus requires delta > 0")
    tab = f.table(grid.points)
    best = 0.0
    for k, mask in _pair_offsets(grid.points, delta):
        d = np.abs(tab[k:] - tab[:-k])[mask]
        if d.size:
            best = max(best, float(np.max(d)))
    return best


def modulus_via_lemma(f: FuzzyFunction, delta: float, grid: DomainGrid) -> float:
    """Fuzzy modulus as the sup over levels of the endpoint slice moduli.

    Independent route to the same quantity as :func:`modulus_fuzzy`: the
    two must agree because both are finite maxima over the same pair and
    level sets, rearranged.
    """
    if delta <= 0:
        raise ValueError("modulus requires delta > 0")
    tab = f.table(grid.points)
    best = 0.0
    for level in range(f.grid.size):
        for col in (0, 1):
            v = tab[:, level, col]
            for k, mask in _pair_offsets(grid.points, delta):
                d = np.abs(v[k:] - v[:-k])[mask]
                if d.size:
                    best = max(best, float(np.max(d)))
    return best


def endpoint_sup_norm(f: FuzzyFunction, level_index: int, sign: int, grid: DomainGrid) -> float:
    """Sup norm of one endpoint slice over the domain grid."""
    if not (0 <= level_index < f.grid.size):
        raise ValueError(f"level index {level_index} not on the alpha grid")
    col = 0 if sign < 0 else 1
    return float(np.max(np.abs(f.table(grid.points)[:, level_index, col])))


def slice_bound(f: FuzzyFunction, grid: DomainGrid) -> float:
    """Sup over levels and signs of the endpoint slice norms."""
    return float(np.max(np.abs(f.table(grid.points))))


def tabulate_csv(f: FuzzyFunction, grid: DomainGrid, stream) -> None:
    """Write the function's cut table as CSV rows ``x, alpha, lo, hi``."""
    tab = f.table(grid.points)
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["x", "alpha", "lo", "hi"])
    for i, x in enumerate(grid.points):
        for k, alpha in enumerate(f.grid.levels):
            writer.writerow([repr(float(x)), repr(float(alpha)),
                             repr(float(tab[i, k, 0])), repr(float(tab[i, k, 1]))])
