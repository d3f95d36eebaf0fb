"""Probabilists' Hermite polynomials and Gauss-Hermite quadrature.

H_0 = 1, H_1 = x, H_{k+1} = x H_k - k H_{k-1}.  Under X ~ N(theta, 1) the
polynomial H_k(X) has mean theta^k, which is what turns a monomial-basis
approximation into an unbiased estimator of the approximating polynomial.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import eigh_tridiagonal

from addfunc.errors import HermiteOverflowError, PreconditionError

MAX_DEGREE = 200
_FLOAT_MAX = np.finfo(np.float64).max


@dataclass(frozen=True)
class HermiteEval:
    max_degree: int
    values: tuple


def hermite_all(x: float, K: int) -> HermiteEval:
    """H_0(x), ..., H_K(x) by the three-term recurrence in extended precision."""
    if K < 0:
        raise PreconditionError(f"requires K >= 0, got {K}")
    if K > MAX_DEGREE:
        raise PreconditionError(f"degree {K} exceeds the cap of {MAX_DEGREE}")
    xl = np.longdouble(x)
    vals = [np.longdouble(1.0), xl]
    for k in range(1, K):
        vals.append(xl * vals[k] - k * vals[k - 1])
    vals = vals[: K + 1]
    out = []
    for k, v in enumerate(vals):
        if not abs(v) <= _FLOAT_MAX:
            raise HermiteOverflowError(k, x)
        out.append(float(v))
    return HermiteEval(K, tuple(out))


def hermite_matrix(x, K: int, sigma: float = 1.0) -> np.ndarray:
    """Array of shape (K+1, len(x)) with rows sigma^k H_k(x / sigma).

    The scaled family obeys G_{k+1} = x G_k - k sigma^2 G_{k-1}, so no
    division by sigma is needed.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if K > MAX_DEGREE:
        raise PreconditionError(f"degree {K} exceeds the cap of {MAX_DEGREE}")
    s2 = float(sigma) ** 2
    out = np.empty((K + 1, x.size))
    out[0] = 1.0
    if K >= 1:
        out[1] = x
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(1, K):
            out[k + 1] = x * out[k] - k * s2 * out[k - 1]
    bad = ~np.isfinite(out).all(axis=1)
    if bad.any():
        raise HermiteOverflowError(int(np.argmax(bad)), float(x[np.argmax(np.abs(x))]))
    return out


def variance_scaled_hermite(x, k: int, sigma: float):
    """sigma^k H_k(x / sigma), which has mean theta^k under N(theta, sigma^2)."""
    if not sigma > 0:
        raise PreconditionError(f"requires sigma > 0, got {sigma}")
    vals = hermite_matrix(x, k, sigma)[k]
    return float(vals[0]) if np.ndim(x) == 0 else vals


@lru_cache(maxsize=None)
def gauss_hermite(n: int):
    """Nodes and weights integrating against the standard normal density.

    Golub-Welsch: the nodes are the eigenvalues of the Jacobi matrix with
    off-diagonal sqrt(k), the weights the squared first eigenvector
    components.  Exact for polynomials of degree <= 2n - 1.
    """
    if n < 1:
        raise PreconditionError("requires n >= 1")
    if n == 1:
        return np.zeros(1), np.ones(1)
    nodes, vecs = eigh_tridiagonal(np.zeros(n), np.sqrt(np.arange(1.0, n)))
    weights = vecs[0] ** 2
    weights /= weights.sum()
    # symmetrise away rounding noise
    nodes = 0.5 * (nodes - nodes[::-1])
    weights = 0.5 * (weights + weights[::-1])
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def gaussian_expectation(fn, theta: float = 0.0, sigma: float = 1.0, n: int = 64) -> float:
    """E fn(X) for X ~ N(theta, sigma^2) by n-point Gauss-Hermite quadrature."""
    nodes, weights = gauss_hermite(n)
    return float(np.dot(weights, fn(theta + sigma * nodes)))


def hermite_moment_check(theta: float, k: int, n_quad: int = 40) -> float:
    """E H_k(X), X ~ N(theta, 1), computed by quadrature (should be theta^k)."""
    if n_quad < 2 * k + 2:
        raise PreconditionError(f"requires n_quad >= 2k+2 = {2 * k + 2}")
    return gaussian_expectation(lambda x: hermite_matrix(x, k)[k], theta, 1.0, n_quad)


def hermite_second_moment(theta: float, k: int, n_quad: int = 40) -> float:
    if n_quad < 2 * k + 2:
        raise PreconditionError(f"requires n_quad >= 2k+2 = {2 * k + 2}")
    return gaussian_expectation(lambda x: hermite_matrix(x, k)[k] ** 2, theta, 1.0, n_quad)


@dataclass(frozen=True)
class HermiteSeries:
    """u -> sum_{k >= start} coeffs[k] * sigma^k H_k(u / sigma)."""

    coeffs: tuple
    start: int

    @property
    def degree(self):
        return len(self.coeffs) - 1

    def __call__(self, u, sigma: float = 1.0):
        u = np.asarray(u, dtype=float)
        scalar = u.ndim == 0
        a = np.asarray(self.coeffs, dtype=float)
        a[: self.start] = 0.0
        if not np.any(a):
            out = np.zeros(np.atleast_1d(u).shape)
        else:
            out = a @ hermite_matrix(np.atleast_1d(u), self.degree, sigma)
        return float(out[0]) if scalar else out.reshape(u.shape)

    def mean(self, theta):
        """Exact expectation under N(theta, sigma^2) for any sigma."""
        a = np.asarray(self.coeffs, dtype=float)
        a[: self.start] = 0.0
        return np.polynomial.polynomial.polyval(theta, a)


def hermitize(coeffs, include_constant: bool) -> HermiteSeries:
    """Replace each monomial t^k by H_k, dropping a_0 unless asked to keep it."""
    coeffs = tuple(float(c) for c in coeffs)
    if not coeffs:
        raise PreconditionError("coeffs must be nonempty")
    return HermiteSeries(coeffs, 0 if include_constant else 1)
