"""Multi-scale Hermite estimator and its single-level simplification.

Each coordinate is split into two independent copies (u, v).  The magnitude
of v picks a level l, and u is fed to the Hermite form of the best degree-K_l
approximation of F on [-M_l, M_l] (constant term dropped).  Levels grow
geometrically up to sqrt(2 log d).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np

from addfunc.errors import NumericalError, PreconditionError
from addfunc.hermite import hermitize
from addfunc.polyapprox import remez
from addfunc.rng import stream

NOISE_MODES = ("oracle_pairs", "duplicate")
DUPLICATE_SIGMA = math.sqrt(2.0)


@dataclass(frozen=True)
class LevelSchedule:
    """Parameters (M_l, K_l, t_l) for l = 0..L plus the top level L+1."""

    c: float
    levels: tuple  # (l, M_l, K_l, t_l)
    L: int
    top: tuple  # (M_{L+1}, K_{L+1})
    s: int
    d: int

    @property
    def thresholds(self):
        return tuple(t for _, _, _, t in self.levels)

    @property
    def intervals(self):
        """(M, K) for every level, top included, in selector order."""
        return [(M, K) for _, M, K, _ in self.levels] + [self.top]

    def to_dict(self):
        return {
            "c": self.c,
            "L": self.L,
            "levels": [{"l": l, "M": M, "K": K, "t": t} for l, M, K, t in self.levels],
            "top": {"l": self.L + 1, "M": self.top[0], "K": self.top[1]},
            "s": self.s,
            "d": self.d,
        }


def _degree(c, M):
    return max(1, int(math.floor(c * M * M / 8.0)))


def build_schedule(d: int, s: int, c: float = 1.0) -> LevelSchedule:
    if s > d:
        raise PreconditionError(f"requires s <= d, got s={s}, d={d}")
    if s < 2 * math.sqrt(d):
        raise PreconditionError(
            f"requires 2*sqrt(d) <= s (got s={s}, 2*sqrt(d)={2 * math.sqrt(d):.4g}); "
            "use the simplified estimator for this regime"
        )
    if not c > 0:
        raise PreconditionError(f"requires c > 0, got c={c}")
    log_ratio = math.log(s * s / d)
    bound = math.sqrt(math.log(d) / log_ratio)
    L = -1
    while 2.0 ** (L + 1) < bound:
        L += 1
    base = math.sqrt(2.0 * log_ratio)
    levels = []
    for l in range(L + 1):
        M = 2.0**l * base
        levels.append((l, M, _degree(c, M), M / 2.0))
    M_top = math.sqrt(2.0 * math.log(d))
    if L < 0:
        warnings.warn("no intermediate level fits (s^2/d >= d); using the top level only", stacklevel=2)
    return LevelSchedule(float(c), tuple(levels), L, (M_top, _degree(c, M_top)), int(s), int(d))


def duplicate_samples(y, seed: int):
    """(y + z, y - z) with z iid N(0, 1): two independent N(theta, 2) copies."""
    y = np.asarray(y, dtype=float)
    z = stream(seed, 0x5A).standard_normal(y.shape)
    return y + z, y - z


@dataclass(frozen=True)
class FittedEstimator:
    """Per-level approximations of F - F(0) ready for evaluation.

    ``kind`` is "multiscale" or "simplified".  The simplified form has no
    schedule, a single level, keeps the constant term and reads raw y.
    """

    schedule: Optional[LevelSchedule]
    per_level_poly: tuple
    value_at_zero: float
    noise_mode: str
    kind: str = "multiscale"
    d: int = 0
    c: float = 1.0
    functional: object = field(default=None, compare=False, repr=False)

    @property
    def s(self) -> int:
        return self.schedule.s if self.schedule is not None else self.d

    @property
    def M(self) -> float:
        """Sup-norm bound of the parameter set the estimator targets."""
        if self.schedule is not None:
            return self.schedule.top[0]
        return self.per_level_poly[0].interval[1]

    @property
    def rate_upper(self) -> float:
        """s^2 max_l delta_l^2 (multi-scale) or d^2 delta^2 (simplified)."""
        return self.s**2 * self.rate

    @cached_property
    def series(self) -> tuple:
        keep = self.kind == "simplified"
        return tuple(hermitize(p.coeffs, include_constant=keep) for p in self.per_level_poly)

    @property
    def per_level_delta(self):
        return [p.delta for p in self.per_level_poly]

    @property
    def rate(self) -> float:
        """Phi = max_l delta_{K_l, M_l}^2."""
        return max(p.delta for p in self.per_level_poly) ** 2

    @property
    def sigma(self) -> float:
        return DUPLICATE_SIGMA if self.noise_mode == "duplicate" else 1.0

    def select_level(self, v) -> np.ndarray:
        """Level index per coordinate: first l with |v| <= t_l, else L+1."""
        return np.searchsorted(np.asarray(self.schedule.thresholds), np.abs(v), side="left")

    def contributions(self, y, seed: int = 0) -> np.ndarray:
        """Per-coordinate terms of the estimate, excluding d*F(0)."""
        if self.kind == "simplified":
            y = np.asarray(y, dtype=float)
            if y.shape != (self.d,):
                raise PreconditionError(f"expected y of length d={self.d}, got shape {y.shape}")
            return self.series[0](y)
        if self.noise_mode == "oracle_pairs":
            y = np.asarray(y, dtype=float)
            if y.shape != (2, self.d):
                raise PreconditionError(f"oracle_pairs mode expects shape (2, {self.d}), got {y.shape}")
            u, v = y
        else:
            y = np.asarray(y, dtype=float)
            if y.shape != (self.d,):
                raise PreconditionError(f"expected y of length d={self.d}, got shape {y.shape}")
            u, v = duplicate_samples(y, seed)
        level = self.select_level(v)
        out = np.zeros(self.d)
        for l, series in enumerate(self.series):
            mask = level == l
            if mask.any():
                out[mask] = series(u[mask], self.sigma)
        return out

    def estimate(self, y, seed: int = 0) -> float:
        return estimate(self, y, seed)


def fit(F, schedule: LevelSchedule, noise_mode: str = "oracle_pairs") -> FittedEstimator:
    if noise_mode not in NOISE_MODES:
        raise PreconditionError(f"noise_mode must be one of {NOISE_MODES}")
    Fc = F.centered()
    polys = []
    for l, (M, K) in enumerate(schedule.intervals):
        p = remez(Fc, K, -M, M)
        if not p.converged:
            raise NumericalError(f"remez did not converge at level {l} (K={K}, M={M:.6g})")
        polys.append(p)
    return FittedEstimator(
        schedule, tuple(polys), float(F.value_at_zero), noise_mode, "multiscale", schedule.d, schedule.c, F
    )


def simplified_degree(d: int, M: float, c: float) -> int:
    return max(1, int(math.floor(c * math.log(d) / math.log(math.e * math.log(d) / (M * M)))))


def fit_simplified(F, d: int, M: float, c: float = 1.0) -> FittedEstimator:
    if not 0 < M <= math.sqrt(math.log(d)):
        raise PreconditionError(f"requires 0 < M <= sqrt(log d) = {math.sqrt(math.log(d)):.6g}, got M={M}")
    if not c > 0:
        raise PreconditionError(f"requires c > 0, got c={c}")
    K = simplified_degree(d, M, c)
    p = remez(F.centered(), K, -M, M)
    if not p.converged:
        raise NumericalError(f"remez did not converge (K={K}, M={M:.6g})")
    return FittedEstimator(None, (p,), float(F.value_at_zero), "raw", "simplified", int(d), float(c), F)


def estimate(fitted: FittedEstimator, y, seed: int = 0) -> float:
    """d*F(0) plus the exactly rounded sum of per-coordinate terms."""
    terms = fitted.contributions(y, seed)
    return fitted.d * fitted.value_at_zero + math.fsum(terms[terms != 0.0])
