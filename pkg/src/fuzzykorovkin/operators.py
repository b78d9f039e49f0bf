"""Positive linear operator families and their fuzzy-valued lifts.

A classical family maps ``(n, g, x)`` to a real value; its fuzzy lift
applies the same operator to each endpoint slice of a fuzzy-valued
function and reassembles the level sets.  The Bernstein family ships in
plain form and with an index perturbation that doubles the operator at
every perfect-cube index, which breaks norm convergence along that
subsequence while leaving weighted means convergent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional

import numpy as np

from . import kernels
from .fuzzy import FuzzyNumber, NestingError, repair_nesting
from .functions import (
    DomainGrid,
    FuzzyFunction,
    TriangularFuzzyFunction,
    corner_cut_table,
)


def is_cube(i: int) -> bool:
    """True when ``i`` is a perfect cube (1, 8, 27, ...)."""
    if i < 1:
        return False
    m = round(i ** (1.0 / 3.0))
    return any((m + d) ** 3 == i for d in (-1, 0, 1))


def cube_indicator(i: int) -> float:
    """The 0/1 perturbation sequence: 1 exactly at perfect cubes."""
    return 1.0 if is_cube(i) else 0.0


@dataclass(frozen=True)
class OperatorFamily:
    """Indexed positive linear operators on continuous functions.

    ``apply(n, g, x)`` evaluates the n-th operator on a vectorized
    scalar function ``g`` at a point or array ``x``.  ``index_factor``
    is an optional scalar multiplier per index (used for the cube
    perturbation) and ``factor_bound`` its supremum, needed by the
    summability truncation certificates.  Families whose ``nodes`` hook
    is set sample ``g`` only at ``nodes(n)`` and can be batch-evaluated
    by the power-series kernels.
    """

    name: str
    apply_fn: Callable
    index_factor: Optional[Callable[[int], float]] = None
    factor_bound: float = 1.0
    nodes: Optional[Callable[[int], np.ndarray]] = None

    def factor(self, n: int) -> float:
        return 1.0 if self.index_factor is None else float(self.index_factor(n))

    def apply(self, n: int, g: Callable, x):
        if n < 1:
            raise ValueError("operator index must be >= 1")
        return self.apply_fn(n, g, x)


def _bernstein_nodes(n: int) -> np.ndarray:
    return np.arange(n + 1) / n


def bernstein_apply(n: int, g: Callable, x):
    """Bernstein polynomial of degree ``n`` for ``g`` at ``x`` in [0, 1].

    Weights are generated outward from the binomial mode and the sum is
    normalized by the weight total, so constants are reproduced exactly
    and no factorials are formed.
    """
    if n < 1:
        raise ValueError("operator index must be >= 1")
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(xs < 0.0) or np.any(xs > 1.0):
        raise ValueError("Bernstein operators are defined for x in [0, 1]")
    gv = np.asarray(g(_bernstein_nodes(n)), dtype=float)
    if gv.shape != (n + 1,):
        raise ValueError("g must map the node array to an equally shaped array")
    out = kernels.bernstein_values(gv, n, xs)
    return out if np.ndim(x) else float(out[0])


def perturbed_bernstein_apply(n: int, g: Callable, x):
    """Bernstein value scaled by ``1 + cube_indicator(n)``."""
    base = bernstein_apply(n, g, x)
    return (1.0 + cube_indicator(n)) * base


BERNSTEIN = OperatorFamily(
    name="bernstein",
    apply_fn=bernstein_apply,
    nodes=_bernstein_nodes,
)

PERTURBED_BERNSTEIN = OperatorFamily(
    name="perturbed-bernstein",
    apply_fn=perturbed_bernstein_apply,
    index_factor=lambda n: 1.0 + cube_indicator(n),
    factor_bound=2.0,
    nodes=_bernstein_nodes,
)


_REGISTRY: Dict[str, OperatorFamily] = {}


def register(family: OperatorFamily) -> OperatorFamily:
    if family.name in _REGISTRY:
        raise ValueError(f"operator family {family.name!r} already registered")
    _REGISTRY[family.name] = family
    return family


def get_family(name: str) -> OperatorFamily:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise ValueError(
            f"unknown operator family {name!r}; available: {', '.join(family_names())}"
        ) from None


def family_names() -> list:
    return sorted(_REGISTRY)


register(BERNSTEIN)
register(PERTURBED_BERNSTEIN)


# ---------------------------------------------------------------------------
# Korovkin test-function norms
# ---------------------------------------------------------------------------

_TEST_FUNCTIONS = (
    lambda xs: np.ones_like(xs),
    lambda xs: xs,
    lambda xs: xs * xs,
)


def korovkin_norm(base: OperatorFamily, n: int, i: int, grid: DomainGrid) -> float:
    """Sup-norm of ``T_n(e_i) - e_i`` over the domain grid, i in {0,1,2}."""
    if i not in (0, 1, 2):
        raise ValueError("test-function index must be 0, 1, or 2")
    e = _TEST_FUNCTIONS[i]
    vals = base.apply(n, e, grid.points)
    return float(np.max(np.abs(vals - e(grid.points))))


# ---------------------------------------------------------------------------
# Fuzzy lift
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FuzzyOperatorFamily:
    """Fuzzy positive linear operators acting level-wise through a base.

    The value's lower endpoint at level alpha is the base operator
    applied to the lower endpoint slice at that level, and likewise for
    the upper endpoint.
    """

    base: OperatorFamily

    @property
    def name(self) -> str:
        return self.base.name

    def apply(self, n: int, f: FuzzyFunction, x: float) -> FuzzyNumber:
        if isinstance(f, TriangularFuzzyFunction):
            corners = self._corner_values(n, f, x)
            cuts = corner_cut_table(corners[None, :], f.grid)[0]
        else:
            cuts = self._slice_values(n, f, x)
        try:
            cuts = repair_nesting(cuts)
        except NestingError as err:
            raise NestingError(
                f"{self.name} lift produced invalid level sets at n={n}, x={x}: {err}"
            ) from err
        return FuzzyNumber(f.grid, cuts)

    def _corner_values(self, n: int, f: TriangularFuzzyFunction, x: float) -> np.ndarray:
        # One base evaluation per corner function; linearity in alpha
        # makes this exactly the slice-wise action.
        if self.base.nodes is not None:
            nodes = self.base.nodes(n)
            ct = f.corner_table(nodes)
            factor = self.base.factor(n)
            xs = np.array([float(x)])
            vals = np.array(
                [factor * kernels.bernstein_values(np.ascontiguousarray(ct[:, k]), n, xs)[0]
                 for k in range(3)]
            )
            return vals
        left, peak, right = f.corners
        return np.array([
            float(self.base.apply(n, left, x)),
            float(self.base.apply(n, peak, x)),
            float(self.base.apply(n, right, x)),
        ])

    def _slice_values(self, n: int, f: FuzzyFunction, x: float) -> np.ndarray:
        levels = f.grid.size
        cuts = np.empty((levels, 2))
        if self.base.nodes is not None:
            # Shared nodes: evaluate the whole cut table once and apply
            # the weights to every slice column.
            nodes = self.base.nodes(n)
            tab = f.table(nodes)
            factor = self.base.factor(n)
            xs = np.array([float(x)])
            for k in range(levels):
                for col in (0, 1):
                    gv = np.ascontiguousarray(tab[:, k, col])
                    cuts[k, col] = factor * kernels.bernstein_values(gv, n, xs)[0]
        else:
            for k in range(levels):
                cuts[k, 0] = float(self.base.apply(n, f.slice_fn(k, -1), x))
                cuts[k, 1] = float(self.base.apply(n, f.slice_fn(k, +1), x))
        return cuts


def lift_fuzzy(base: OperatorFamily) -> FuzzyOperatorFamily:
    """Fuzzy counterpart of a classical positive linear family."""
    return FuzzyOperatorFamily(base)
