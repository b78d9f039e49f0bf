"""Hot numeric kernels with a numba backend and a pure-numpy fallback.

The backend is picked once at import time from the environment variable
``FUZZYKOROVKIN_BACKEND`` (``numba``, ``numpy``, or ``auto``; default
auto, which uses numba when it imports cleanly).  Both backends compute
the same quantities; the numba path is the fast one and the numpy path
keeps the package usable without a working JIT.

Bernstein weights are never built from ``j = 0`` upward (that underflows
for large degree); rows are anchored at the binomial mode and extended
by the multiplicative ratio recurrence.  Evaluations are normalized by
the weight sum computed with the same accumulation, which makes constant
functions reproduce exactly and cancels the anchor's rounding error.

The power-series accumulation kernel sums ``coeff[n] * B_n(g; x)`` over
an operator-index range for a batch of node-value columns (three corner
functions) plus the three monomial moments, restricting each ``(n, x)``
pair to an adaptively grown window around the mode.  The window stops
once the remaining geometric tail of the weights is certifiably below
``wtol`` per side, using the fact that the weight ratios decay
monotonically away from the mode.
"""

from __future__ import annotations

import math
import os

import numpy as np

_ENV_VAR = "FUZZYKOROVKIN_BACKEND"


def _select_backend() -> str:
    choice = os.environ.get(_ENV_VAR, "auto").strip().lower() or "auto"
    if choice == "auto":
        try:
            import numba  # noqa: F401
            return "numba"
        except Exception:
            return "numpy"
    if choice == "numba":
        import numba  # noqa: F401  # fail loudly if explicitly requested
        return "numba"
    if choice == "numpy":
        return "numpy"
    raise ValueError(f"{_ENV_VAR} must be 'numba', 'numpy', or 'auto', not {choice!r}")


BACKEND = _select_backend()


def active_backend() -> str:
    """Name of the kernel backend selected at import time."""
    return BACKEND


# ---------------------------------------------------------------------------
# numpy implementations
# ---------------------------------------------------------------------------

def _anchor_weight(n: int, j0: int, x: float) -> float:
    # C(n, j0) x^j0 (1-x)^(n-j0) via explicit products carried with
    # power-of-two rescaling: exact scaling steps keep the rounding error
    # near sqrt(n)*eps, where an lgamma round trip would lose ~n*eps and
    # a bare product would overflow transiently for large n.
    m = 1.0
    e = 0
    for k in range(1, j0 + 1):
        m *= (n - j0 + k) / k * x
        while m > 8.98846567431158e307:  # 2**1023
            m = math.ldexp(m, -512)
            e += 512
    y = 1.0 - x
    for _ in range(n - j0):
        m *= y
        while 0.0 < m < 2.2227587494850775e-162:  # 2**-537
            m = math.ldexp(m, 512)
            e -= 512
    return math.ldexp(m, e)


def bernstein_row_np(n: int, x: float) -> np.ndarray:
    """Raw Bernstein basis weights ``C(n,j) x^j (1-x)^(n-j)`` for j=0..n."""
    w = np.zeros(n + 1)
    if x <= 0.0:
        w[0] = 1.0
        return w
    if x >= 1.0:
        w[n] = 1.0
        return w
    j0 = min(int((n + 1) * x), n)
    w[j0] = _anchor_weight(n, j0, x)
    r = x / (1.0 - x)
    if j0 < n:
        j = np.arange(j0 + 1.0, n + 1.0)
        w[j0 + 1:] = w[j0] * np.cumprod(r * (n - j + 1.0) / j)
    if j0 > 0:
        j = np.arange(float(j0), 0.0, -1.0)
        w[j0 - 1::-1] = w[j0] * np.cumprod(j / (r * (n - j + 1.0)))
    return w


def bernstein_values_np(node_vals: np.ndarray, n: int, xs: np.ndarray) -> np.ndarray:
    out = np.empty(xs.size)
    for i, x in enumerate(xs):
        w = bernstein_row_np(n, float(x))
        out[i] = np.dot(w, node_vals) / np.dot(w, np.ones_like(w))
    return out


def bernstein_window_np(n: int, x: float, wtol: float):
    """Windowed normalized weights around the mode for a single point.

    Returns ``(jlo, weights, wsum)`` where the dropped weights on each
    side sum to at most ``wtol`` (geometric tail bound from the ratio at
    the cut).  ``weights / wsum`` is the normalized window row.
    """
    if x <= 0.0:
        return 0, np.ones(1), 1.0
    if x >= 1.0:
        return n, np.ones(1), 1.0
    w = bernstein_row_np(n, x)
    j0 = min(int((n + 1) * x), n)
    r = x / (1.0 - x)
    jhi = n
    for j in range(j0, n):
        rho = r * (n - j) / (j + 1.0)
        if rho < 1.0 and w[j] * rho < wtol * (1.0 - rho):
            jhi = j
            break
    jlo = 0
    for j in range(j0, 0, -1):
        rho = j / (r * (n - j + 1.0))
        if rho < 1.0 and w[j] * rho < wtol * (1.0 - rho):
            jlo = j
            break
    win = w[jlo:jhi + 1]
    return jlo, win, float(np.sum(win))


def _neumaier_add_np(sums, comps, terms):
    t = sums + terms
    comps += np.where(np.abs(sums) >= np.abs(terms), (sums - t) + terms, (terms - t) + sums)
    sums[...] = t


def psum_block_np(xs, n_lo, n_hi, lgn, invj, cvals, offs, base, coeffs, wtol, out, comp):
    """Accumulate power-series-weighted Bernstein sums for one n block.

    ``cvals`` holds the corner node values for rows ``n_lo..n_hi``
    flattened with offsets ``offs[n] - base``, shape ``(nodes, 3)``.
    ``out``/``comp`` are ``(len(xs), 6)`` running Neumaier sums over the
    columns ``coeff total, e1, e2, corner a, corner b, corner c``.

    Windows come from a two-sided sub-Gaussian bound on the binomial
    tail, solved so the dropped weight per side is below ``wtol``.
    """
    interior = (xs > 0.0) & (xs < 1.0)
    xi = xs[interior]
    lx = np.log(xi)
    l1x = np.log1p(-xi)
    r = xi / (1.0 - xi)
    L = math.log(1.0 / wtol) if wtol < 1.0 else 1.0
    edge_lo = xs <= 0.0
    edge_hi = xs >= 1.0
    for n in range(n_lo, n_hi + 1):
        cn = coeffs[n]
        off = offs[n] - base
        terms = np.empty((xs.size, 6))
        if xi.size:
            sigma2 = n * xi * (1.0 - xi)
            s = np.ceil(L / 3.0 + np.sqrt(L * L / 9.0 + 2.0 * L * sigma2)).astype(np.int64)
            j0 = np.minimum(((n + 1) * xi).astype(np.int64), n)
            jlo = np.maximum(j0 - s, 0)
            jhi = np.minimum(j0 + s, n)
            wmax = int(np.max(jhi - jlo)) + 1
            k = np.arange(wmax)
            J = jlo[:, None] + k[None, :]
            valid = J <= jhi[:, None]
            Jc = np.where(valid, J, jhi[:, None])
            anchor = np.exp(lgn[n] - lgn[jlo] - lgn[n - jlo] + jlo * lx + (n - jlo) * l1x)
            rho = r[:, None] * (n - Jc + 1.0) * invj[Jc]
            rho[:, 0] = 1.0
            W = anchor[:, None] * np.cumprod(rho, axis=1)
            W[~valid] = 0.0
            nodes = Jc * (1.0 / n)
            cv = cvals[off + Jc]
            S = W.sum(axis=1)
            tin = np.empty((xi.size, 6))
            tin[:, 0] = cn
            tin[:, 1] = cn * ((W * nodes).sum(axis=1) / S)
            tin[:, 2] = cn * ((W * nodes * nodes).sum(axis=1) / S)
            tin[:, 3:] = cn * (np.einsum("xw,xwc->xc", W, cv) / S[:, None])
            terms[interior] = tin
        terms[edge_lo] = [cn, 0.0, 0.0, cn * cvals[off, 0], cn * cvals[off, 1], cn * cvals[off, 2]]
        terms[edge_hi] = [cn, cn, cn, cn * cvals[off + n, 0],
                          cn * cvals[off + n, 1], cn * cvals[off + n, 2]]
        _neumaier_add_np(out, comp, terms)


# ---------------------------------------------------------------------------
# numba implementations (compiled only when the backend is active)
# ---------------------------------------------------------------------------

def _build_numba_kernels():
    from numba import njit, prange

    @njit(cache=True)
    def anchor_weight_nb(n, j0, x):
        m = 1.0
        e = 0
        for k in range(1, j0 + 1):
            m *= (n - j0 + k) / k * x
            while m > 8.98846567431158e307:
                m = math.ldexp(m, -512)
                e += 512
        y = 1.0 - x
        for _ in range(n - j0):
            m *= y
            while 0.0 < m < 2.2227587494850775e-162:
                m = math.ldexp(m, 512)
                e -= 512
        return math.ldexp(m, e)

    @njit(cache=True)
    def bernstein_row_nb(n, x):
        w = np.zeros(n + 1)
        if x <= 0.0:
            w[0] = 1.0
            return w
        if x >= 1.0:
            w[n] = 1.0
            return w
        j0 = int((n + 1) * x)
        if j0 > n:
            j0 = n
        a = anchor_weight_nb(n, j0, x)
        w[j0] = a
        r = x / (1.0 - x)
        v = a
        for j in range(j0 + 1, n + 1):
            v *= r * (n - j + 1) / j
            w[j] = v
        v = a
        for j in range(j0, 0, -1):
            v *= j / (r * (n - j + 1))
            w[j - 1] = v
        return w

    @njit(cache=True)
    def bernstein_values_nb(node_vals, n, xs):
        out = np.empty(xs.size)
        for i in range(xs.size):
            x = xs[i]
            w = bernstein_row_nb(n, x)
            num = 0.0
            cnum = 0.0
            den = 0.0
            cden = 0.0
            for j in range(n + 1):
                term = w[j] * node_vals[j]
                t = num + term
                if abs(num) >= abs(term):
                    cnum += (num - t) + term
                else:
                    cnum += (term - t) + num
                num = t
                term = w[j] * 1.0
                t = den + term
                if abs(den) >= abs(term):
                    cden += (den - t) + term
                else:
                    cden += (term - t) + den
                den = t
            out[i] = (num + cnum) / (den + cden)
        return out

    @njit(cache=True)
    def bernstein_window_nb(n, x, wtol):
        if x <= 0.0:
            return 0, np.ones(1), 1.0
        if x >= 1.0:
            return n, np.ones(1), 1.0
        j0 = int((n + 1) * x)
        if j0 > n:
            j0 = n
        a = anchor_weight_nb(n, j0, x)
        r = x / (1.0 - x)
        jhi = n
        v = a
        for j in range(j0, n):
            rho = r * (n - j) / (j + 1.0)
            if rho < 1.0 and v * rho < wtol * (1.0 - rho):
                jhi = j
                break
            v *= rho
        jlo = 0
        v = a
        for j in range(j0, 0, -1):
            rho = j / (r * (n - j + 1.0))
            if rho < 1.0 and v * rho < wtol * (1.0 - rho):
                jlo = j
                break
            v *= rho
        w = np.empty(jhi - jlo + 1)
        w[j0 - jlo] = a
        v = a
        for j in range(j0 + 1, jhi + 1):
            v *= r * (n - j + 1) / j
            w[j - jlo] = v
        v = a
        for j in range(j0, jlo, -1):
            v *= j / (r * (n - j + 1))
            w[j - 1 - jlo] = v
        s = 0.0
        for k in range(w.size):
            s += w[k]
        return jlo, w, s

    @njit(cache=True, parallel=True)
    def psum_block_nb(xs, n_lo, n_hi, lgn, invj, cvals, offs, base, coeffs, wtol, out, comp):
        nx = xs.size
        for ix in prange(nx):
            x = xs[ix]
            if x <= 0.0 or x >= 1.0:
                right = x >= 1.0
                for n in range(n_lo, n_hi + 1):
                    cn = coeffs[n]
                    off = offs[n] - base
                    pos = off + n if right else off
                    e1 = cn if right else 0.0
                    for col in range(6):
                        if col == 0:
                            term = cn
                        elif col <= 2:
                            term = e1
                        else:
                            term = cn * cvals[pos, col - 3]
                        s = out[ix, col]
                        t = s + term
                        if abs(s) >= abs(term):
                            comp[ix, col] += (s - t) + term
                        else:
                            comp[ix, col] += (term - t) + s
                        out[ix, col] = t
                continue
            lx = math.log(x)
            l1x = math.log1p(-x)
            r = x / (1.0 - x)
            invr = (1.0 - x) / x
            for n in range(n_lo, n_hi + 1):
                cn = coeffs[n]
                off = offs[n] - base
                j0 = int((n + 1) * x)
                if j0 > n:
                    j0 = n
                w0 = math.exp(lgn[n] - lgn[j0] - lgn[n - j0] + j0 * lx + (n - j0) * l1x)
                fj = float(j0)
                S = w0
                d1 = w0 * fj
                d2 = w0 * fj * fj
                da = w0 * cvals[off + j0, 0]
                db = w0 * cvals[off + j0, 1]
                dc = w0 * cvals[off + j0, 2]
                w = w0
                j = j0
                while j < n:
                    rho = r * (n - j) * invj[j + 1]
                    if rho < 1.0 and w * rho < wtol - wtol * rho:
                        break
                    j += 1
                    w *= rho
                    fj = float(j)
                    S += w
                    d1 += w * fj
                    d2 += w * fj * fj
                    da += w * cvals[off + j, 0]
                    db += w * cvals[off + j, 1]
                    dc += w * cvals[off + j, 2]
                w = w0
                j = j0
                while j > 0:
                    rho = j * invj[n - j + 1] * invr
                    if rho < 1.0 and w * rho < wtol - wtol * rho:
                        break
                    j -= 1
                    w *= rho
                    fj = float(j)
                    S += w
                    d1 += w * fj
                    d2 += w * fj * fj
                    da += w * cvals[off + j, 0]
                    db += w * cvals[off + j, 1]
                    dc += w * cvals[off + j, 2]
                inv_n = 1.0 / n
                for col in range(6):
                    if col == 0:
                        term = cn
                    elif col == 1:
                        term = cn * (d1 / S) * inv_n
                    elif col == 2:
                        term = cn * (d2 / S) * inv_n * inv_n
                    elif col == 3:
                        term = cn * (da / S)
                    elif col == 4:
                        term = cn * (db / S)
                    else:
                        term = cn * (dc / S)
                    s = out[ix, col]
                    t = s + term
                    if abs(s) >= abs(term):
                        comp[ix, col] += (s - t) + term
                    else:
                        comp[ix, col] += (term - t) + s
                    out[ix, col] = t

    return bernstein_row_nb, bernstein_values_nb, bernstein_window_nb, psum_block_nb


if BACKEND == "numba":
    bernstein_row, bernstein_values, bernstein_window, psum_block = _build_numba_kernels()
else:
    bernstein_row = bernstein_row_np
    bernstein_values = bernstein_values_np
    bernstein_window = bernstein_window_np
    psum_block = psum_block_np


# ---------------------------------------------------------------------------
# Block driver shared by both backends
# ---------------------------------------------------------------------------

# Upper bound on flattened node storage per block; keeps the working set
# cache-friendly for the numba path and bounds numpy temporaries.
BLOCK_NODES = 600_000


def psum_tabulate(xs, n_terms, coeffs, corner_table, wtol, *, impl=None) -> np.ndarray:
    """Sum ``coeffs[n] * B_n(.; x)`` over ``n = 1..n_terms`` on a grid.

    ``corner_table(v)`` must return an ``(len(v), 3)`` array of the three
    corner-function values at the nodes ``v``.  Returns ``(len(xs), 6)``
    with columns ``sum(coeffs), e1, e2, corner a, corner b, corner c``,
    each accumulated in ascending ``n`` with Neumaier compensation.
    """
    xs = np.asarray(xs, dtype=float)
    if coeffs.shape[0] < n_terms + 1:
        raise ValueError("coefficient array shorter than the term count")
    block = psum_block if impl is None else impl
    lgn = _lgamma_table(n_terms + 1)
    invj = np.zeros(n_terms + 2)
    invj[1:] = 1.0 / np.arange(1.0, n_terms + 2)
    out = np.zeros((xs.size, 6))
    comp = np.zeros((xs.size, 6))
    n_lo = 1
    while n_lo <= n_terms:
        n_hi = n_lo
        nodes = n_lo + 1
        while n_hi + 1 <= n_terms and nodes + n_hi + 2 <= BLOCK_NODES:
            n_hi += 1
            nodes += n_hi + 1
        offs = np.zeros(n_hi + 1, dtype=np.int64)
        total = 0
        for n in range(n_lo, n_hi + 1):
            offs[n] = total
            total += n + 1
        flat_nodes = np.empty(total)
        for n in range(n_lo, n_hi + 1):
            o = offs[n]
            flat_nodes[o:o + n + 1] = np.arange(n + 1) / n
        cvals = np.ascontiguousarray(corner_table(flat_nodes), dtype=float)
        if cvals.shape != (total, 3):
            raise ValueError("corner_table must return an (nodes, 3) array")
        block(xs, n_lo, n_hi, lgn, invj, cvals, offs, 0, coeffs, wtol, out, comp)
        n_lo = n_hi + 1
    return out + comp


_LGAMMA_CACHE: dict = {"table": np.zeros(1)}


def _lgamma_table(n_max: int) -> np.ndarray:
    # lgamma(k + 1) for k = 0..n_max, grown monotonically and cached.
    table = _LGAMMA_CACHE["table"]
    if table.size <= n_max:
        old = table.size
        new = np.empty(n_max + 1)
        new[:old] = table
        for k in range(old, n_max + 1):
            new[k] = math.lgamma(k + 1.0)
        _LGAMMA_CACHE["table"] = new
        table = new
    return table[: n_max + 1]
