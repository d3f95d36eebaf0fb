"""Best uniform polynomial approximation on an interval.

Two independent routes are provided.  :func:`remez` runs a multi-point
exchange on the continuum; :func:`grid_lp_approx` solves the discretised
minimax problem as a linear program and serves as an oracle for it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.polynomial import chebyshev as C
from numpy.polynomial import Chebyshev, Polynomial
from scipy.optimize import brentq, linprog, minimize_scalar

from addfunc.errors import NumericalError, PreconditionError

ZERO_DELTA_RTOL = 1e-13


@dataclass(frozen=True)
class PolyApprox:
    """Degree-K best approximation P on [a, b] with error ``delta``.

    ``coeffs`` are monomial coefficients a_0..a_K in the variable t itself.
    ``cheb_coeffs`` hold the same polynomial in the Chebyshev basis of
    [a, b]; evaluation goes through them because they are well conditioned.
    """

    degree: int
    interval: tuple
    coeffs: tuple
    delta: float
    alternation_points: tuple
    iterations: int
    converged: bool
    cheb_coeffs: tuple = field(default=(), repr=False)

    def __call__(self, t):
        a, b = self.interval
        return Chebyshev(np.asarray(self.cheb_coeffs), domain=[a, b])(np.asarray(t, dtype=float))

    def error(self, F, t):
        return F(t) - self(t)

    def to_dict(self):
        return {
            "degree": self.degree,
            "interval": list(self.interval),
            "coeffs": list(self.coeffs),
            "delta": self.delta,
            "alternation_points": list(self.alternation_points),
            "iterations": self.iterations,
            "converged": self.converged,
        }


def _evaluate(F, x):
    values = np.asarray(F(np.asarray(x, dtype=float)), dtype=float)
    if not np.all(np.isfinite(values)):
        raise NumericalError("functional returned a non-finite value on the interval")
    return values


def _to_unit(x, a, b):
    return (2.0 * np.asarray(x) - (a + b)) / (b - a)


def _monomial(cheb, a, b):
    poly = Chebyshev(cheb, domain=[a, b]).convert(kind=Polynomial)
    coef = np.zeros(len(cheb))
    coef[: len(poly.coef)] = poly.coef
    return tuple(float(c) for c in coef)


def _finish(cheb, a, b, K, delta, refs, iterations, converged):
    cheb = np.asarray(cheb, dtype=float)
    return PolyApprox(
        degree=K,
        interval=(float(a), float(b)),
        coeffs=_monomial(cheb, a, b),
        delta=float(delta),
        alternation_points=tuple(float(r) for r in refs),
        iterations=iterations,
        converged=converged,
        cheb_coeffs=tuple(float(c) for c in cheb),
    )


def _insert_extremum(refs, signs, x, sign):
    """Classical single-point exchange that preserves sign alternation."""
    refs, signs = list(refs), list(signs)
    j = int(np.searchsorted(refs, x))
    if j == 0:
        if signs[0] == sign:
            refs[0] = x
        else:
            refs, signs = [x] + refs[:-1], [sign] + signs[:-1]
    elif j == len(refs):
        if signs[-1] == sign:
            refs[-1] = x
        else:
            refs, signs = refs[1:] + [x], signs[1:] + [sign]
    elif signs[j - 1] == sign:
        refs[j - 1] = x
    else:
        refs[j] = x
    return refs, signs


def remez(F, K, a, b, tol=None, max_iter=100, n_scan=65):
    """Best uniform approximation of F by a polynomial of degree <= K on [a, b].

    The reference starts near the Chebyshev extrema.  Each iteration solves the
    levelled interpolation system in the Chebyshev basis, brackets the K+1
    roots of the error between consecutive reference points, and takes the
    signed extremum of each resulting segment (``n_scan`` points per
    segment merged with a fixed global grid, then bounded Brent refinement).  A global-maximum check inserts
    any stray extremum with the classical single exchange.

    ``tol`` bounds (max error - min reference error) / max error and
    defaults to 1e-9, or 1e-6 for K > 20.  On non-convergence the best
    iterate is returned with ``converged=False``.
    """
    K = int(K)
    if K < 0:
        raise PreconditionError(f"requires K >= 0, got {K}")
    if not a < b:
        raise PreconditionError(f"requires a < b, got [{a}, {b}]")
    if tol is None:
        tol = 1e-9 if K <= 20 else 1e-6
    if not tol > 0:
        raise PreconditionError("requires tol > 0")
    a, b = float(a), float(b)
    n = K + 2
    # Chebyshev extrema of T_{K+2} minus the one next to b: an asymmetric
    # start, since a symmetric reference zeroes the levelled error for
    # even or odd F.
    ext = a + (b - a) * (1 - np.cos(np.pi * np.arange(n + 1) / n)) / 2
    refs = [float(x) for x in np.delete(ext, n - 1)]
    refs[0], refs[-1] = a, b
    alt = (-1.0) ** np.arange(n)

    scan = np.linspace(a, b, max(2001, 16 * n))
    f_scan = _evaluate(F, scan)
    scale = 1.0 + float(np.max(np.abs(f_scan)))

    best = None
    for it in range(1, max_iter + 1):
        refs_arr = np.asarray(refs)
        f_ref = _evaluate(F, refs_arr)
        A = np.empty((n, n))
        A[:, :-1] = C.chebvander(_to_unit(refs_arr, a, b), K)
        A[:, -1] = alt
        try:
            sol = np.linalg.solve(A, f_ref)
        except np.linalg.LinAlgError:
            sol = np.linalg.lstsq(A, f_ref, rcond=None)[0]
        cheb, h = sol[:-1], sol[-1]

        def err(x, cheb=cheb):
            return _evaluate(F, x) - C.chebval(_to_unit(x, a, b), cheb)

        e_scan = f_scan - C.chebval(_to_unit(scan, a, b), cheb)
        global_max = float(np.max(np.abs(e_scan)))
        if global_max < ZERO_DELTA_RTOL * scale:
            return _finish(cheb, a, b, K, 0.0, refs, it, True)

        # roots of the error between consecutive reference points
        e_ref = f_ref - C.chebval(_to_unit(refs_arr, a, b), cheb)
        bounds = [a]
        for i in range(n - 1):
            lo, hi = refs[i], refs[i + 1]
            if e_ref[i] * e_ref[i + 1] < 0:
                bounds.append(brentq(lambda x: float(err(x)), lo, hi, xtol=1e-15 * (b - a), rtol=1e-15))
            else:
                bounds.append(0.5 * (lo + hi))
        bounds.append(b)

        sign0 = 1.0 if h >= 0 else -1.0
        new_refs, new_vals = [], []
        for i in range(n):
            lo, hi = bounds[i], bounds[i + 1]
            sgn = sign0 * alt[i]
            inner = scan[(scan > lo) & (scan < hi)]
            xs = np.union1d(np.linspace(lo, hi, n_scan), inner)
            vals = sgn * err(xs)
            j = int(np.argmax(vals))
            x_best, v_best = xs[j], vals[j]
            if 0 < j < len(xs) - 1:
                res = minimize_scalar(
                    lambda x: -sgn * float(err(x)),
                    bounds=(xs[j - 1], xs[j + 1]),
                    method="bounded",
                    options={"xatol": 1e-14 * (b - a)},
                )
                if -res.fun > v_best:
                    x_best, v_best = float(res.x), -float(res.fun)
            new_refs.append(float(x_best))
            new_vals.append(float(v_best))
            global_max = max(global_max, abs(v_best))

        signs = [sign0 * s for s in alt]
        # a stray extremum (extra sign change inside a segment) enters by single exchange
        k = int(np.argmax(np.abs(e_scan)))
        if abs(e_scan[k]) > max(abs(v) for v in new_vals) * (1 + 1e-12):
            x = scan[k]
            lo = scan[max(k - 1, 0)]
            hi = scan[min(k + 1, len(scan) - 1)]
            sgn = 1.0 if e_scan[k] > 0 else -1.0
            res = minimize_scalar(lambda t: -sgn * float(err(t)), bounds=(lo, hi), method="bounded")
            if -res.fun > abs(e_scan[k]):
                x = float(res.x)
            global_max = max(global_max, float(abs(err(x))))
            new_refs, signs = _insert_extremum(new_refs, signs, x, sgn)
        if any(np.diff(new_refs) <= 0):
            new_refs = sorted(set(new_refs))
            if len(new_refs) != n:
                break

        ref_err = np.abs(err(np.asarray(new_refs)))
        spread = (global_max - float(np.min(ref_err))) / global_max
        if best is None or global_max < best[0]:
            best = (global_max, cheb.copy(), list(new_refs), it)
        if spread <= tol:
            return _finish(cheb, a, b, K, global_max, new_refs, it, True)
        refs = new_refs
    if best is None:
        raise NumericalError("remez made no progress")
    delta, cheb, r, it = best
    return _finish(cheb, a, b, K, delta, r, it, False)


def grid_lp_approx(F, K, a, b, n_grid=None):
    """Discrete minimax fit on ``n_grid`` uniform points, solved as an LP.

    Minimises h subject to |F(x_i) - P(x_i)| <= h.  The resulting delta is a
    lower bound for the continuum value and converges to it as the grid is
    refined.
    """
    K = int(K)
    if n_grid is None:
        n_grid = max(2001, 10 * (K + 2))
    if n_grid < 10 * (K + 2):
        raise PreconditionError(f"requires n_grid >= 10*(K+2) = {10 * (K + 2)}, got {n_grid}")
    if not a < b:
        raise PreconditionError(f"requires a < b, got [{a}, {b}]")
    x = np.linspace(a, b, n_grid)
    f = _evaluate(F, x)
    V = C.chebvander(_to_unit(x, a, b), K)
    ones = np.ones((n_grid, 1))
    A_ub = np.block([[V, -ones], [-V, -ones]])
    b_ub = np.concatenate([f, -f])
    cost = np.zeros(K + 2)
    cost[-1] = 1.0
    bounds = [(None, None)] * (K + 1) + [(0, None)]
    res = linprog(
        cost,
        A_ub=A_ub,
        b_ub=b_ub,
        bounds=bounds,
        method="highs",
        options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
    )
    if res.status != 0:
        raise NumericalError(f"grid LP failed: {res.message}")
    cheb = res.x[:-1]
    resid = f - V @ cheb
    delta = float(np.max(np.abs(resid)))
    if delta < ZERO_DELTA_RTOL * (1 + float(np.max(np.abs(f)))):
        delta = 0.0
        active = x[[0, -1]]
    else:
        active = x[np.abs(resid) >= delta * (1 - 1e-6)]
    return _finish(cheb, a, b, K, delta, active, int(res.nit), True)


@lru_cache(maxsize=4096)
def _cached_delta(F, K, a, b):
    return remez(F, K, a, b).delta


def cached_remez_delta(F, K, a, b):
    """Memoised remez delta; the functional object is the cache key."""
    return _cached_delta(F, int(K), float(a), float(b))


def delta_curve(F, K_list, M):
    """[(K, delta_{K,M})] for increasing degrees on [-M, M]."""
    K_list = [int(k) for k in K_list]
    if not K_list:
        raise PreconditionError("K_list must be nonempty")
    if any(k2 <= k1 for k1, k2 in zip(K_list, K_list[1:])):
        raise PreconditionError("K_list must be increasing")
    return [(K, remez(F, K, -M, M).delta) for K in K_list]


def loglog_slope(curve):
    K = np.log([k for k, _ in curve])
    dl = np.log([v for _, v in curve])
    return float(np.polyfit(K, dl, 1)[0])
