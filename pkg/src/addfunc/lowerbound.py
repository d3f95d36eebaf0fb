"""Two-prior lower-bound machinery.

The moment-matched pair (nu0, nu1) is the Jordan decomposition of an
extremal signed measure; on a finite grid it is the solution of a linear
program whose optimum is twice the discrete best-approximation error.
Orientation convention: int F dnu0 >= int F dnu1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import chebyshev as C
from scipy.optimize import linprog

from addfunc.errors import NumericalError, PreconditionError
from addfunc.polyapprox import cached_remez_delta, remez

WEIGHT_FLOOR = 1e-13


@dataclass(frozen=True)
class PriorPair:
    grid: tuple
    w0: tuple
    w1: tuple
    K: int
    gap: float
    delta_ref: float
    M: float = 0.0

    def side(self, which: int):
        w = self.w0 if which == 0 else self.w1
        return np.asarray(self.grid), np.asarray(w)

    def moment_gaps(self, K=None):
        """sum_i x_i^k (w0_i - w1_i) for k = 0..K."""
        K = self.K if K is None else K
        x = np.asarray(self.grid)
        dw = np.asarray(self.w0) - np.asarray(self.w1)
        return np.array([np.dot(x**k, dw) for k in range(K + 1)])

    def to_dict(self):
        return {
            "K": self.K,
            "M": self.M,
            "grid": list(self.grid),
            "w0": list(self.w0),
            "w1": list(self.w1),
            "gap": self.gap,
            "delta_ref": self.delta_ref,
        }


def chebyshev_grid(M: float, n: int) -> np.ndarray:
    """n Chebyshev extrema on [-M, M]; odd n puts a node at 0."""
    x = -M * np.cos(np.pi * np.arange(n) / (n - 1))
    x = 0.5 * (x - x[::-1])
    return x


def build_prior_pair(F, K: int, M: float, n_grid=None, delta_ref=None) -> PriorPair:
    """Probability vectors w0, w1 on a grid matching moments 0..K and
    maximising int F d(w0 - w1)."""
    K = int(K)
    if K < 1:
        raise PreconditionError(f"requires K >= 1, got {K}")
    if n_grid is None:
        n_grid = max(10 * (K + 2), 4001)
    if n_grid < 10 * (K + 2):
        raise PreconditionError(f"requires n_grid >= 10*(K+2) = {10 * (K + 2)}, got {n_grid}")
    if delta_ref is None:
        delta_ref = remez(F, K, -M, M).delta
    if delta_ref <= 0:
        raise PreconditionError("requires delta_{K,M} > 0; F is a polynomial of degree <= K on [-M, M]")

    x = chebyshev_grid(M, n_grid | 1)
    n = x.size
    f = np.asarray(F(x), dtype=float)
    if not np.all(np.isfinite(f)):
        raise NumericalError("functional returned a non-finite value on the grid")
    T = C.chebvander(x / M, K)[:, 1:].T  # moments 1..K in the Chebyshev basis
    A_eq = np.zeros((K + 2, 2 * n))
    A_eq[0, :n] = 1.0
    A_eq[1, n:] = 1.0
    A_eq[2:, :n] = T
    A_eq[2:, n:] = -T
    b_eq = np.zeros(K + 2)
    b_eq[:2] = 1.0
    cost = np.concatenate([-f, f])
    res = linprog(
        cost,
        A_eq=A_eq,
        b_eq=b_eq,
        bounds=(0, None),
        method="highs-ds",
        options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
    )
    if res.status != 0:
        raise NumericalError(f"prior-pair LP failed: {res.message}")
    w0, w1 = res.x[:n].copy(), res.x[n:].copy()
    w0[w0 < WEIGHT_FLOOR] = 0.0
    w1[w1 < WEIGHT_FLOOR] = 0.0
    w0 /= w0.sum()
    w1 /= w1.sum()
    keep = (w0 > 0) | (w1 > 0)
    gap = float(np.dot(f, w0 - w1))
    return PriorPair(
        grid=tuple(x[keep].tolist()),
        w0=tuple(w0[keep].tolist()),
        w1=tuple(w1[keep].tolist()),
        K=K,
        gap=gap,
        delta_ref=float(delta_ref),
        M=float(M),
    )


def tail_bound(M: float, K_trunc: int) -> float:
    """4 * sum_{k > K_trunc} (e M^2 / k)^k, which bounds the series remainder."""
    r = math.e * M * M
    if r / K_trunc >= 1:
        raise PreconditionError(f"divergent tail: e*M^2/K_trunc = {r / K_trunc:.4g} >= 1")
    total, k = 0.0, K_trunc + 1
    while True:
        term = math.exp(k * math.log(r / k)) if r > 0 else 0.0
        total += term
        if term < 1e-300 or term < 1e-17 * total:
            break
        k += 1
    return 4.0 * total


def chi2_series(nu0, nu1, K_trunc: int, M=None, K=None) -> float:
    """sum_{k=0}^{K_trunc} (m_k(nu1) - m_k(nu0))^2 / k! plus the tail bound.

    ``nu0`` and ``nu1`` are (points, weights) pairs.  This is the chi-square
    divergence between the two Gaussian location mixtures.
    """
    x0, w0 = (np.asarray(a, dtype=float) for a in nu0)
    x1, w1 = (np.asarray(a, dtype=float) for a in nu1)
    if K is not None and K_trunc < K + 1:
        raise PreconditionError(f"requires K_trunc >= K+1 = {K + 1}")
    if M is None:
        M = float(max(np.max(np.abs(x0)), np.max(np.abs(x1))))
    if max(np.max(np.abs(x0)), np.max(np.abs(x1))) > M * (1 + 1e-12):
        raise PreconditionError("support points exceed M")
    tail = tail_bound(M, K_trunc) if M > 0 else 0.0
    total = 0.0
    for k in range(K_trunc + 1):
        dm = float(np.dot(w1, x1**k) - np.dot(w0, x0**k))
        if dm != 0.0:
            total += math.exp(2.0 * math.log(abs(dm)) - math.lgamma(k + 1))
    return total + tail


def g_ratio(x):
    """log(x / log x) / log x, the exponent factor in the chi-square bound."""
    x = np.asarray(x, dtype=float)
    lx = np.log(x)
    return np.log(x / lx) / lx


def certificate_degree(d: int, s: int, M: float) -> int:
    r = math.log(s * s / d)
    return max(1, int(math.floor(math.e**2 * r / math.log(math.e * r / (M * M)))))


@dataclass(frozen=True)
class LowerBoundCertificate:
    K: int
    M: float
    delta_ref: float
    separation: float
    chi2_bound: float
    chi2_pair: float
    tv_bound: float
    tail_terms: float
    cantelli0: float
    cantelli1: float
    V: float
    rate: float
    risk_lower: float
    g_value: float
    valid: bool
    pair: PriorPair = field(repr=False, default=None)

    def to_dict(self):
        out = {k: getattr(self, k) for k in self.__dataclass_fields__ if k != "pair"}
        pair = self.pair.to_dict()
        out.update(grid=pair["grid"], w0=pair["w0"], w1=pair["w1"], gap=pair["gap"])
        return out


def certificate(F, d: int, s: int, M=None, n_grid=None) -> LowerBoundCertificate:
    """Assemble the two-prior bound for sparse priors eps * eta, eps ~ B(s/2d).

    All probability terms use the explicit bounds of the two-point argument:
    Chebyshev-Cantelli with v_i <= sqrt(d) ||F - F(0)||, prior mass outside
    Theta at most exp(-s/16) each, and TV <= sqrt(chi2/2) + masses.
    """
    if not s * s > d:
        raise PreconditionError(f"requires s^2 > d, got s={s}, d={d}")
    if s > d:
        raise PreconditionError(f"requires s <= d, got s={s}, d={d}")
    r = math.log(s * s / d)
    M_max = math.sqrt(r)
    if M is None:
        M = M_max
    if not 0 < M <= M_max * (1 + 1e-12):
        raise PreconditionError(f"requires 0 < M <= sqrt(log(s^2/d)) = {M_max:.6g}, got M={M}")
    K = certificate_degree(d, s, M)
    x = math.e * r / (M * M)
    g_value = float(g_ratio(x))

    Fc = F.centered()
    delta = remez(Fc, K, -M, M).delta
    if delta <= 0:
        raise PreconditionError("requires delta_{K,M} > 0")
    pair = build_prior_pair(Fc, K, M, n_grid=n_grid, delta_ref=delta)

    separation = s * delta
    power = math.exp(K * math.log(math.e * M * M / K))
    chi2_bound = math.expm1(2.0 * s * s / d * power)
    series = chi2_series(pair.side(0), pair.side(1), max(K + 1, math.ceil(math.e * M * M) + 1, 4 * K), M=M)
    chi2_pair = math.expm1(s * s / (2.0 * d) * series)
    tail_terms = 2.0 * math.exp(-s / 16.0)
    tv_bound = math.sqrt(chi2_bound / 2.0) + tail_terms

    v = math.sqrt(d) * Fc.sup_norm(M)
    mass = math.exp(-s / 16.0)
    cantelli0 = 0.1 + mass
    if 3.0 * v <= separation / 6.0:
        cantelli1 = 9 * v * v / (9 * v * v + separation**2) + mass
    else:
        cantelli1 = 1.0
    V = tv_bound + cantelli0 + cantelli1
    valid = V < 1.0
    rate = separation**2 / 4.0
    risk_lower = separation**2 / 16.0 * (1.0 - V) / 2.0 if valid else 0.0
    return LowerBoundCertificate(
        K, float(M), float(delta), separation, chi2_bound, chi2_pair, tv_bound, tail_terms,
        cantelli0, cantelli1, V, rate, risk_lower, g_value, valid, pair,
    )


def sample_sparse_prior(pair: PriorPair, which: int, d: int, s: int, rng) -> np.ndarray:
    """theta_i = eps_i * eta_i with eps_i ~ Bernoulli(s/2d), eta_i ~ nu_which."""
    x, w = pair.side(which)
    eps = rng.random(d) < s / (2.0 * d)
    eta = rng.choice(x, size=d, p=w)
    return np.where(eps, eta, 0.0)


def _rate_points(d, s, max_points=64):
    ks = set(int(round(k)) for k in np.geomspace(s, d, 48))
    ks.update((s, d))
    lo, hi = math.log(s * s / d), math.log(s)
    # right ends of the blocks where floor(log(s^2/k)) is constant
    for j in range(math.floor(lo), math.ceil(hi) + 1):
        k = math.floor(s * s / math.exp(j + 1)) + 1
        if s <= k <= d:
            ks.add(k)
    ks = sorted(ks)
    if len(ks) > max_points:
        idx = np.unique(np.linspace(0, len(ks) - 1, max_points).round().astype(int))
        ks = [ks[i] for i in idx]
    return ks


def rate_expression(F, d: int, s: int, ks=None):
    """s^2 * max_{s<=k<=d} delta^2 at degree floor(log(s^2/k)) v 1 on
    [-sqrt(log(s^2/k)), sqrt(log(s^2/k))].

    Returns (value, argmax_k).  ``ks`` overrides the default subsample of
    at most 64 points.
    """
    if s > d:
        raise PreconditionError(f"requires s <= d, got s={s}, d={d}")
    if s * s < 2 * d:
        raise PreconditionError(f"requires s^2 >= 2d, got s={s}, d={d}")
    Fc = F.centered()
    best, arg = -1.0, None
    for k in ks if ks is not None else _rate_points(d, s):
        x = math.log(s * s / k)
        K = max(1, int(math.floor(x)))
        M = math.sqrt(x)
        delta = cached_remez_delta(Fc, K, -M, M)
        if delta > best:
            best, arg = delta, int(k)
    return s * s * best * best, arg
