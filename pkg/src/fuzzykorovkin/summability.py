"""Power-series summability transforms with certified truncation.

A summability method is a nonnegative weight sequence ``p_n`` (first
weight positive) whose power series ``p(t)`` converges on (0, 1).  The
transform of a sequence ``a_n`` at a point ``t`` is the weighted mean
``sum(a_n p_n t^(n-1)) / p(t)``; the method's limit is the behaviour of
that mean as t -> 1.  Everything here is truncated with an explicit
certificate: summation stops at the first index where a uniform bound
on ``|a_n|`` times the remaining weight fraction drops below the
requested tolerance, and the achieved bound is reported with the value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import kernels
from .fuzzy import FuzzyNumber, NestingError, repair_nesting
from .functions import (
    DomainGrid,
    FuzzyFunction,
    TriangularFuzzyFunction,
    corner_cut_table,
    slice_bound,
    sup_norm,
)
from .operators import FuzzyOperatorFamily, OperatorFamily


class TruncationError(RuntimeError):
    """Raised when the tolerance is not certifiable within the term cap.

    ``achieved_bound`` carries the error bound reached at the cap.
    """

    def __init__(self, message: str, achieved_bound: float):
        super().__init__(message)
        self.achieved_bound = achieved_bound


@dataclass(frozen=True)
class TruncationPolicy:
    """Tolerance, term cap, and optional a-priori bound on ``|a_n|``."""

    tol: float = 1e-8
    n_cap: int = 2_000_000
    bound_hint: Optional[float] = None

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tolerance must be positive")
        if self.n_cap < 1:
            raise ValueError("term cap must be at least 1")


DEFAULT_POLICY = TruncationPolicy()

# Minimum terms before a discovered (running-max) bound is trusted.
_MIN_DISCOVERY_TERMS = 16

# Safety factor applied to bounds discovered from data rather than given.
_DISCOVERY_SAFETY = 2.0


@dataclass(frozen=True)
class PowerSeriesMethod:
    """Weight sequence with its series value and a certified tail bound.

    ``tail_fraction(N, t)`` must bound ``sum_{n>N} p_n t^(n-1) / p(t)``
    from above; it is the basis of every stopping rule here.  ``support``
    marks finitely supported weight sequences (tail exactly zero beyond),
    for which the partial sums do not diverge; such methods are accepted
    but flagged, since only their t -> 1 limits lose meaning.
    """

    name: str
    weight: Callable[[int], float]
    p_of_t: Callable[[float], float]
    tail_fraction: Callable[[int, float], float]
    diverges: bool = True
    support: Optional[int] = None

    def __post_init__(self):
        if not self.weight(1) > 0:
            raise ValueError("the first weight must be positive")

    def terms_needed(self, t: float, bound: float, tol: float, n_cap: int) -> int:
        """Smallest term count certifying ``bound * tail_fraction <= tol``."""
        _check_t(t)
        cap = n_cap if self.support is None else min(n_cap, self.support)
        if self.support is not None and self.support <= n_cap:
            hi_ok = True  # tail is exactly zero at the support end
        else:
            hi_ok = bound * self.tail_fraction(cap, t) <= tol
        if not hi_ok:
            achieved = bound * self.tail_fraction(cap, t)
            raise TruncationError(
                f"method {self.name!r} cannot certify tol={tol:g} at t={t} "
                f"within {n_cap} terms (achieved {achieved:.3e})",
                achieved,
            )
        lo, hi = 1, cap
        while lo < hi:
            mid = (lo + hi) // 2
            if self.support is not None and mid >= self.support:
                hi = mid
            elif bound * self.tail_fraction(mid, t) <= tol:
                hi = mid
            else:
                lo = mid + 1
        return lo

    def weight_array(self, n_terms: int) -> np.ndarray:
        """Weights ``p_1..p_N`` as an array indexed by ``n`` (slot 0 unused)."""
        w = np.zeros(n_terms + 1)
        for n in range(1, n_terms + 1):
            w[n] = self.weight(n)
        return w


def _check_t(t: float) -> None:
    if not (0.0 < t < 1.0):
        raise ValueError(f"evaluation point t must lie in (0, 1), got {t}")


def abel() -> PowerSeriesMethod:
    """Unit weights: ``p(t) = 1/(1-t)`` with the exact geometric tail."""
    return PowerSeriesMethod(
        name="abel",
        weight=lambda n: 1.0,
        p_of_t=lambda t: 1.0 / (1.0 - t),
        tail_fraction=lambda n, t: t ** n,
    )


def from_weights(values, name: str = "weights") -> PowerSeriesMethod:
    """Finitely supported method from explicit weights ``p_1, p_2, ...``."""
    vals = np.asarray(list(values), dtype=float)
    if vals.size == 0:
        raise ValueError("weight list is empty")
    if vals[0] <= 0:
        raise ValueError("the first weight must be positive")
    if np.any(vals < 0):
        raise ValueError("weights must be nonnegative")

    def p_of_t(t: float) -> float:
        _check_t(t)
        return float(np.polyval(vals[::-1], t))

    def tail_fraction(n: int, t: float) -> float:
        if n >= vals.size:
            return 0.0
        rest = vals[n:]
        powers = t ** np.arange(n, vals.size)
        return float(np.dot(rest, powers) / p_of_t(t))

    return PowerSeriesMethod(
        name=name,
        weight=lambda n: float(vals[n - 1]) if n <= vals.size else 0.0,
        p_of_t=p_of_t,
        tail_fraction=tail_fraction,
        diverges=False,
        support=int(vals.size),
    )


def from_weight_file(path: str) -> PowerSeriesMethod:
    """Read one nonnegative weight per line; first line must be positive."""
    weights = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                weights.append(float(line))
            except ValueError:
                raise ValueError(f"{path}:{lineno}: not a number: {line!r}") from None
    return from_weights(weights, name=f"weights:{path}")


def get_method(spec: str) -> PowerSeriesMethod:
    """Method by CLI name: ``abel`` or ``weights:<file>``."""
    if spec == "abel":
        return abel()
    if spec.startswith("weights:"):
        return from_weight_file(spec.split(":", 1)[1])
    raise ValueError(f"unknown summability method {spec!r}; use 'abel' or 'weights:<file>'")


# ---------------------------------------------------------------------------
# Scalar transform
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TransformResult:
    """A truncated weighted mean with its certificate."""

    value: float
    n_used: int
    tail_bound: float

    def __float__(self):
        return self.value


def transform_scalar(
    a: Callable[[int], float],
    t: float,
    method: PowerSeriesMethod,
    policy: TruncationPolicy = DEFAULT_POLICY,
) -> TransformResult:
    """Weighted mean of the sequence ``a(n)`` at ``t``.

    Terms are summed in ascending order with Neumaier compensation.
    With a ``bound_hint`` the stopping index is certified a priori; without
    one the bound is discovered as twice the running maximum of ``|a_n|``,
    after a minimum number of terms.
    """
    _check_t(t)
    p_t = method.p_of_t(t)
    total = 0.0
    comp = 0.0
    run_max = 0.0
    tn = 1.0  # t^(n-1)
    n = 0
    while True:
        n += 1
        if n > policy.n_cap:
            bound = _effective_bound(policy, run_max)
            achieved = bound * method.tail_fraction(policy.n_cap, t)
            raise TruncationError(
                f"tolerance {policy.tol:g} not reached within {policy.n_cap} terms at t={t} "
                f"(achieved {achieved:.3e})",
                achieved,
            )
        an = float(a(n))
        run_max = max(run_max, abs(an))
        term = an * method.weight(n) * tn
        fresh = total + term
        if abs(total) >= abs(term):
            comp += (total - fresh) + term
        else:
            comp += (term - fresh) + total
        total = fresh
        tn *= t
        if method.support is not None and n >= method.support:
            break
        bound = _effective_bound(policy, run_max)
        if policy.bound_hint is None and n < _MIN_DISCOVERY_TERMS:
            continue
        if bound * method.tail_fraction(n, t) <= policy.tol:
            break
    bound = _effective_bound(policy, run_max)
    return TransformResult(
        value=(total + comp) / p_t,
        n_used=n,
        tail_bound=bound * method.tail_fraction(n, t),
    )


def _effective_bound(policy: TruncationPolicy, run_max: float) -> float:
    if policy.bound_hint is not None:
        return policy.bound_hint
    return _DISCOVERY_SAFETY * run_max


def cube_series(t: float, tol: float = 1e-12) -> float:
    """Abel mean of the cube indicator: ``(1-t)/t * sum_m t^(m^3)``.

    The tail after M terms is at most ``t^((M+1)^3) / (1-t)``, which the
    stopping rule keeps below ``tol`` relative to the leading factor.
    """
    _check_t(t)
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    total = 0.0
    m = 0
    while True:
        m += 1
        total += t ** (m ** 3)
        if t ** ((m + 1) ** 3) <= tol * t:
            break
    return (1.0 - t) / t * total


# ---------------------------------------------------------------------------
# Grid transforms through an operator family
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FunctionTabulation:
    """Transform of a scalar function tabulated on a domain grid."""

    xs: np.ndarray
    values: np.ndarray
    n_used: int
    tail_bound: float
    error_bound: float


@dataclass(frozen=True)
class FuzzyTransformResult:
    """Fuzzy transform value at one point, with its certificate."""

    value: FuzzyNumber
    n_used: int
    tail_bound: float
    error_bound: float


@dataclass(frozen=True)
class PowerSumTables:
    """Summed operator tabulations shared by the experiment harness.

    ``coeff_total`` is the summed coefficient mass (the transform of the
    constant test function, exact by weight normalization); ``e1`` and
    ``e2`` are the summed monomial moments on the grid; ``corners`` are
    the summed corner tabulations of a triangular fuzzy function.
    """

    operator: str
    function: str
    method: str
    t: float
    xs: np.ndarray
    coeff_total: float
    e1: np.ndarray
    e2: np.ndarray
    corners: np.ndarray
    n_used: int
    tail_bound: float
    error_bound: float

    def fuzzy_cut_table(self, grid) -> np.ndarray:
        """Level-set table of the summed fuzzy transform on the grid."""
        return corner_cut_table(self.corners, grid)


def _mean_coefficients(method: PowerSeriesMethod, base: OperatorFamily, t: float, n_terms: int) -> np.ndarray:
    n = np.arange(1, n_terms + 1)
    pw = method.weight_array(n_terms)[1:] * t ** (n - 1) / method.p_of_t(t)
    fac = np.array([base.factor(int(k)) for k in n])
    coeffs = np.zeros(n_terms + 1)
    coeffs[1:] = pw * fac
    return coeffs


def _grid_bound(policy: TruncationPolicy, base: OperatorFamily, grid_sup: float) -> float:
    if policy.bound_hint is not None:
        return policy.bound_hint
    return _DISCOVERY_SAFETY * base.factor_bound * max(grid_sup, 1e-300)


def summed_tables(
    base: OperatorFamily,
    f: TriangularFuzzyFunction,
    t: float,
    method: PowerSeriesMethod,
    policy: TruncationPolicy,
    grid: DomainGrid,
) -> PowerSumTables:
    """One kernel pass producing moments and fuzzy corners on the grid."""
    _check_t(t)
    if base.nodes is None:
        raise ValueError(f"operator family {base.name!r} has no node rule; use the slow path")
    if not isinstance(f, TriangularFuzzyFunction):
        raise ValueError("summed tables need a corner-structured fuzzy function")
    bound = _grid_bound(policy, base, max(slice_bound(f, grid), 1.0))
    n_terms = method.terms_needed(t, bound, policy.tol / 2.0, policy.n_cap)
    coeffs = _mean_coefficients(method, base, t, n_terms)
    wtol = policy.tol / (8.0 * bound)
    out = kernels.psum_tabulate(grid.points, n_terms, coeffs, f.corner_table, wtol)
    tail = bound * method.tail_fraction(n_terms, t)
    return PowerSumTables(
        operator=base.name,
        function=f.name,
        method=method.name,
        t=t,
        xs=grid.points,
        coeff_total=float(out[0, 0]),
        e1=out[:, 1],
        e2=out[:, 2],
        corners=out[:, 3:],
        n_used=n_terms,
        tail_bound=tail,
        error_bound=tail + policy.tol / 2.0,
    )


def transform_function(
    base: OperatorFamily,
    g: Callable[[np.ndarray], np.ndarray],
    t: float,
    method: PowerSeriesMethod,
    policy: TruncationPolicy,
    grid: DomainGrid,
) -> FunctionTabulation:
    """Tabulate the summed mean of ``T_n(g)`` over the domain grid.

    Every grid point shares the same certified term count.
    """
    _check_t(t)
    bound = _grid_bound(policy, base, sup_norm(g, grid))
    n_terms = method.terms_needed(t, bound, policy.tol / 2.0, policy.n_cap)
    coeffs = _mean_coefficients(method, base, t, n_terms)
    tail = bound * method.tail_fraction(n_terms, t)
    if base.nodes is not None:
        wtol = policy.tol / (8.0 * bound)

        def crisp_corners(v):
            vals = np.asarray(g(v), dtype=float)
            return np.repeat(vals[:, None], 3, axis=1)

        out = kernels.psum_tabulate(grid.points, n_terms, coeffs, crisp_corners, wtol)
        values = out[:, 4]
        node_budget = policy.tol / 2.0
    else:
        values = np.zeros(grid.points.size)
        comp = np.zeros_like(values)
        for n in range(1, n_terms + 1):
            term = coeffs[n] * np.asarray(base.apply(n, g, grid.points), dtype=float)
            fresh = values + term
            comp += np.where(np.abs(values) >= np.abs(term),
                             (values - fresh) + term, (term - fresh) + values)
            values = fresh
        values = values + comp
        node_budget = 0.0
    return FunctionTabulation(
        xs=grid.points,
        values=values,
        n_used=n_terms,
        tail_bound=tail,
        error_bound=tail + node_budget,
    )


def transform_fuzzy(
    fam: FuzzyOperatorFamily,
    f: FuzzyFunction,
    t: float,
    method: PowerSeriesMethod,
    policy: TruncationPolicy,
    x: float,
) -> FuzzyTransformResult:
    """Summed fuzzy mean at a single point, assembled level-wise.

    Triangular inputs go through their corner functions; general inputs
    are transformed slice by slice, which is the independent route the
    endpoint-consistency tests compare against.
    """
    _check_t(t)
    base = fam.base
    probe = DomainGrid.uniform(f.a, f.b, 257)
    bound = _grid_bound(policy, base, max(slice_bound(f, probe), 1.0))
    n_terms = method.terms_needed(t, bound, policy.tol / 2.0, policy.n_cap)
    coeffs = _mean_coefficients(method, base, t, n_terms)
    tail = bound * method.tail_fraction(n_terms, t)
    node_budget = 0.0
    if isinstance(f, TriangularFuzzyFunction) and base.nodes is not None:
        wtol = policy.tol / (8.0 * bound)
        vals = np.zeros(3)
        comp = np.zeros(3)
        for n in range(1, n_terms + 1):
            jlo, w, wsum = kernels.bernstein_window(n, float(x), wtol)
            nodes = (jlo + np.arange(w.size)) / n
            ct = f.corner_table(nodes)
            term = coeffs[n] * (w @ ct) / wsum
            fresh = vals + term
            comp += np.where(np.abs(vals) >= np.abs(term),
                             (vals - fresh) + term, (term - fresh) + vals)
            vals = fresh
        corners = vals + comp
        cuts = corner_cut_table(corners[None, :], f.grid)[0]
        node_budget = policy.tol / 2.0
    elif base.nodes is not None:
        wtol = policy.tol / (8.0 * bound)
        vals = np.zeros((f.grid.size, 2))
        comp = np.zeros_like(vals)
        for n in range(1, n_terms + 1):
            jlo, w, wsum = kernels.bernstein_window(n, float(x), wtol)
            nodes = (jlo + np.arange(w.size)) / n
            tab = f.table(nodes)
            term = coeffs[n] * np.tensordot(w, tab, axes=1) / wsum
            fresh = vals + term
            comp += np.where(np.abs(vals) >= np.abs(term),
                             (vals - fresh) + term, (term - fresh) + vals)
            vals = fresh
        cuts = vals + comp
        node_budget = policy.tol / 2.0
    else:
        cuts = np.zeros((f.grid.size, 2))
        for k in range(f.grid.size):
            for col, sign in ((0, -1), (1, +1)):
                res = transform_scalar(
                    lambda n: float(base.apply(n, f.slice_fn(k, sign), x)),
                    t, method,
                    TruncationPolicy(policy.tol, policy.n_cap, bound),
                )
                cuts[k, col] = res.value
    try:
        cuts = repair_nesting(cuts)
    except NestingError as err:
        raise NestingError(f"summed fuzzy mean invalid at x={x}, t={t}: {err}") from err
    return FuzzyTransformResult(
        value=FuzzyNumber(f.grid, cuts),
        n_used=n_terms,
        tail_bound=tail,
        error_bound=tail + node_budget,
    )
