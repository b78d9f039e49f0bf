"""Fuzzy real numbers as families of nested alpha-level intervals.

A fuzzy number is stored by its level sets on a shared discrete alpha
grid: one closed interval ``[lo, hi]`` per level, nested as alpha grows.
All operations are level-wise interval arithmetic; values are immutable
and every function here is pure.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, List, Sequence

import numpy as np


class GridMismatchError(ValueError):
    """Raised when two values live on different alpha or domain grids."""


class NestingError(RuntimeError):
    """Raised when computed level sets violate nesting beyond repair."""


# Nesting violations at or below this size are treated as floating-point
# noise and clamped; anything larger is a real inconsistency.
NESTING_REPAIR_TOL = 1e-12


@dataclass(frozen=True)
class Interval:
    """Closed real interval with ``lo <= hi``."""

    lo: float
    hi: float

    def __post_init__(self):
        if not (self.lo <= self.hi):
            raise ValueError(f"invalid interval: lo={self.lo} > hi={self.hi}")

    def __contains__(self, other: "Interval") -> bool:
        return self.lo <= other.lo and other.hi <= self.hi


def hausdorff(a: Interval, b: Interval) -> float:
    """Hausdorff distance between two closed intervals.

    For intervals this reduces to the larger of the two endpoint
    differences.
    """
    return max(abs(a.lo - b.lo), abs(a.hi - b.hi))


@dataclass(frozen=True)
class AlphaGrid:
    """Strictly increasing membership levels from 0 to 1 inclusive."""

    levels: np.ndarray

    def __post_init__(self):
        lv = np.asarray(self.levels, dtype=float)
        object.__setattr__(self, "levels", lv)
        if lv.ndim != 1 or lv.size < 2:
            raise ValueError("alpha grid needs at least the levels 0 and 1")
        if lv[0] != 0.0 or lv[-1] != 1.0:
            raise ValueError("alpha grid must start at 0 and end at 1")
        if not np.all(np.diff(lv) > 0):
            raise ValueError("alpha levels must be strictly increasing")
        lv.setflags(write=False)

    @classmethod
    def uniform(cls, levels: int = 101) -> "AlphaGrid":
        """Uniform grid with the given number of levels (default 101)."""
        if levels < 2:
            raise ValueError("need at least 2 alpha levels")
        return cls(np.linspace(0.0, 1.0, levels))

    @property
    def size(self) -> int:
        return int(self.levels.size)

    def __eq__(self, other) -> bool:
        return isinstance(other, AlphaGrid) and np.array_equal(self.levels, other.levels)

    def __hash__(self):
        return hash(self.levels.tobytes())


DEFAULT_ALPHA_GRID = AlphaGrid.uniform(101)


@dataclass(frozen=True)
class FuzzyNumber:
    """Fuzzy number given by one interval per alpha level.

    ``cuts`` has shape ``(levels, 2)`` with columns ``lo, hi``.  Validity
    (interval ordering plus nesting in alpha) is checked explicitly via
    :func:`validate`; constructors in this module always produce valid
    values, but invalid ones can be built deliberately for testing.
    """

    grid: AlphaGrid
    cuts: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.cuts, dtype=float)
        if c.shape != (self.grid.size, 2):
            raise ValueError(
                f"cuts shape {c.shape} does not match grid with {self.grid.size} levels"
            )
        object.__setattr__(self, "cuts", c)
        c.setflags(write=False)

    @property
    def lo(self) -> np.ndarray:
        return self.cuts[:, 0]

    @property
    def hi(self) -> np.ndarray:
        return self.cuts[:, 1]

    def cut(self, level_index: int) -> Interval:
        return Interval(float(self.cuts[level_index, 0]), float(self.cuts[level_index, 1]))

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, FuzzyNumber)
            and self.grid == other.grid
            and np.array_equal(self.cuts, other.cuts)
        )

    def __hash__(self):
        return hash((self.grid, self.cuts.tobytes()))


def _require_same_grid(x: FuzzyNumber, y: FuzzyNumber) -> None:
    if x.grid != y.grid:
        raise GridMismatchError(
            "fuzzy numbers live on different alpha grids; resample one of them first"
        )


def make_triangular(a: float, b: float, c: float, grid: AlphaGrid = DEFAULT_ALPHA_GRID) -> FuzzyNumber:
    """Triangular fuzzy number with support ``[a, c]`` and peak ``b``.

    The cut at level alpha is ``[a + alpha*(b-a), c - alpha*(c-b)]``.
    """
    if not (a <= b <= c):
        raise ValueError(f"triangular parameters must satisfy a <= b <= c, got ({a}, {b}, {c})")
    al = grid.levels
    cuts = np.stack([a + al * (b - a), c - al * (c - b)], axis=1)
    return FuzzyNumber(grid, cuts)


def crisp(value: float, grid: AlphaGrid = DEFAULT_ALPHA_GRID) -> FuzzyNumber:
    """Embed a real number as a fuzzy number with degenerate cuts."""
    cuts = np.full((grid.size, 2), float(value))
    return FuzzyNumber(grid, cuts)


def add(x: FuzzyNumber, y: FuzzyNumber) -> FuzzyNumber:
    """Level-wise Minkowski sum of two fuzzy numbers on the same grid."""
    _require_same_grid(x, y)
    return FuzzyNumber(x.grid, x.cuts + y.cuts)


def scale(lam: float, x: FuzzyNumber) -> FuzzyNumber:
    """Multiply a fuzzy number by a real scalar.

    Negative scalars swap the interval endpoints, as interval arithmetic
    requires.
    """
    if lam >= 0:
        return FuzzyNumber(x.grid, lam * x.cuts)
    return FuzzyNumber(x.grid, lam * x.cuts[:, ::-1])


def metric_D(x: FuzzyNumber, y: FuzzyNumber) -> float:
    """Supremum over alpha levels of the Hausdorff distance between cuts."""
    _require_same_grid(x, y)
    return float(np.max(np.abs(x.cuts - y.cuts)))


def partial_leq(x: FuzzyNumber, y: FuzzyNumber) -> bool:
    """Level-wise partial order: both endpoints ordered at every level."""
    _require_same_grid(x, y)
    return bool(np.all(x.cuts <= y.cuts))


def validate(x: FuzzyNumber) -> List[str]:
    """Check interval ordering and nesting; return a list of violations.

    An empty list means the value is a valid fuzzy number on its grid.
    Each violation names the level index and the inequality that failed.
    """
    problems: List[str] = []
    lo, hi = x.lo, x.hi
    for k in np.nonzero(lo > hi)[0]:
        problems.append(f"level {k}: lo={lo[k]} > hi={hi[k]}")
    dlo = np.diff(lo)
    for k in np.nonzero(dlo < 0)[0]:
        problems.append(f"levels {k}->{k + 1}: lo decreases ({lo[k]} -> {lo[k + 1]})")
    dhi = np.diff(hi)
    for k in np.nonzero(dhi > 0)[0]:
        problems.append(f"levels {k}->{k + 1}: hi increases ({hi[k]} -> {hi[k + 1]})")
    return problems


def repair_nesting(cuts: np.ndarray, tol: float = NESTING_REPAIR_TOL) -> np.ndarray:
    """Clamp nesting violations up to ``tol``; raise beyond that.

    Positive linear constructions guarantee nesting mathematically, so
    only rounding noise should ever need repair here.  A violation larger
    than ``tol`` signals a non-positive operator or a broken input and
    raises :class:`NestingError`.
    """
    cuts = np.array(cuts, dtype=float)
    lo, hi = cuts[:, 0], cuts[:, 1]
    gap = lo - hi
    if np.any(gap > tol):
        k = int(np.argmax(gap))
        raise NestingError(f"level {k}: lo exceeds hi by {gap[k]:.3e} (tol {tol:.1e})")
    hi_fixed = np.maximum(hi, lo)
    worst_lo = float(np.max(np.maximum.accumulate(lo) - lo, initial=0.0))
    worst_hi = float(np.max(hi_fixed - np.minimum.accumulate(hi_fixed), initial=0.0))
    if max(worst_lo, worst_hi) > tol:
        raise NestingError(
            f"nesting violated by {max(worst_lo, worst_hi):.3e}, beyond repair tol {tol:.1e}"
        )
    cuts[:, 0] = np.maximum.accumulate(lo)
    cuts[:, 1] = np.minimum.accumulate(hi_fixed)
    return cuts


def resample(x: FuzzyNumber, grid: AlphaGrid) -> FuzzyNumber:
    """Move a fuzzy number to another alpha grid.

    Endpoints are interpolated linearly in alpha, which is exact for
    triangular and crisp values.
    """
    if x.grid == grid:
        return x
    lo = np.interp(grid.levels, x.grid.levels, x.lo)
    hi = np.interp(grid.levels, x.grid.levels, x.hi)
    return FuzzyNumber(grid, np.stack([lo, hi], axis=1))


# ---------------------------------------------------------------------------
# Serialization: flat record of the level count followed by one
# (alpha, lo, hi) triple per level.
# ---------------------------------------------------------------------------

def to_text(x: FuzzyNumber) -> str:
    lines = [str(x.grid.size - 1)]
    for a, (lo, hi) in zip(x.grid.levels, x.cuts):
        lines.append(f"{a!r} {lo!r} {hi!r}")
    return "\n".join(lines) + "\n"


def from_text(text: str) -> FuzzyNumber:
    rows = [ln for ln in text.strip().splitlines() if ln.strip()]
    if not rows:
        raise ValueError("empty fuzzy-number record")
    k = int(rows[0])
    if len(rows) != k + 2:
        raise ValueError(f"expected {k + 1} level lines after the header, got {len(rows) - 1}")
    data = np.array([[float(v) for v in ln.split()] for ln in rows[1:]])
    if data.shape[1] != 3:
        raise ValueError("each level line must hold alpha, lo, hi")
    grid = AlphaGrid(data[:, 0])
    return FuzzyNumber(grid, data[:, 1:])


def to_json_obj(x: FuzzyNumber) -> dict:
    return {
        "k": x.grid.size - 1,
        "cuts": [[float(a), float(lo), float(hi)] for a, (lo, hi) in zip(x.grid.levels, x.cuts)],
    }


def from_json_obj(obj: dict) -> FuzzyNumber:
    data = np.asarray(obj["cuts"], dtype=float)
    if data.shape != (int(obj["k"]) + 1, 3):
        raise ValueError("cut table does not match the declared level count")
    return FuzzyNumber(AlphaGrid(data[:, 0]), data[:, 1:])
