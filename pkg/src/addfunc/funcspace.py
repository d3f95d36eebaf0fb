"""Marginal functionals, the sparse parameter space, and assumption probes."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from addfunc.errors import PreconditionError
from addfunc.expression import compile_expression

_PROBE = np.linspace(-5.0, 5.0, 201)


@dataclass(frozen=True)
class MarginalFunctional:
    """A scalar map F applied coordinatewise.

    ``eval`` must accept numpy arrays.  ``value_at_zero`` is always supplied
    by the caller; it is never inferred numerically.
    """

    eval: Callable[[np.ndarray], np.ndarray]
    label: str
    value_at_zero: float
    is_even: bool = False
    params: tuple = ()

    def __post_init__(self):
        values = np.asarray(self.eval(_PROBE), dtype=float)
        if values.shape != _PROBE.shape:
            raise PreconditionError(f"functional {self.label!r} is not vectorised")
        if self.is_even:
            mirrored = np.asarray(self.eval(-_PROBE), dtype=float)
            ok = np.isclose(values, mirrored, rtol=1e-12, atol=1e-300) | (
                ~np.isfinite(values) & ~np.isfinite(mirrored)
            )
            if not ok.all():
                raise PreconditionError(f"functional {self.label!r} is flagged even but F(t) != F(-t)")

    def __call__(self, t):
        return np.asarray(self.eval(np.asarray(t, dtype=float)), dtype=float)

    def centered(self) -> "MarginalFunctional":
        """F - F(0), so the centred map vanishes at the origin."""
        base, shift = self.eval, self.value_at_zero
        return MarginalFunctional(
            eval=lambda t: np.asarray(base(t), dtype=float) - shift,
            label=f"{self.label}-F(0)" if shift else self.label,
            value_at_zero=0.0,
            is_even=self.is_even,
            params=self.params,
        )

    def shifted(self, kappa: float) -> "MarginalFunctional":
        base = self.eval
        return MarginalFunctional(
            eval=lambda t: np.asarray(base(t), dtype=float) + kappa,
            label=f"{self.label}+{kappa:g}",
            value_at_zero=self.value_at_zero + kappa,
            is_even=self.is_even,
            params=self.params,
        )

    def sup_norm(self, M: float, centered: bool = True, n: int = 4001) -> float:
        """Grid estimate of ||F - F(0)||_{inf,[-M,M]} (or of ||F|| if not centred)."""
        t = np.linspace(-M, M, n)
        values = self(t)
        if centered:
            values = values - self.value_at_zero
        return float(np.max(np.abs(values)))


def _abs_pow(gamma):
    return lambda t: np.abs(t) ** gamma


def _neg_t_log(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    nz = t != 0
    out[nz] = -t[nz] * np.log(np.abs(t[nz]))
    return out


def builtin_functional(name: str, params: Sequence[float] = ()) -> MarginalFunctional:
    """Look up one of the named functionals.

    ``abs_pow`` takes the exponent gamma > 0; the others take no parameters.
    """
    params = tuple(float(p) for p in params)
    if name == "abs_pow":
        if len(params) != 1:
            raise PreconditionError("abs_pow needs exactly one parameter gamma")
        gamma = params[0]
        if not gamma > 0:
            raise PreconditionError(f"abs_pow requires gamma > 0, got {gamma}")
        return MarginalFunctional(_abs_pow(gamma), f"abs_pow:{gamma:g}", 0.0, True, params)
    if params:
        raise PreconditionError(f"{name} takes no parameters")
    if name == "square":
        return MarginalFunctional(lambda t: np.square(t), "square", 0.0, True)
    if name == "identity":
        return MarginalFunctional(lambda t: np.asarray(t, dtype=float) * 1.0, "identity", 0.0, False)
    if name == "neg_t_log":
        return MarginalFunctional(_neg_t_log, "neg_t_log", 0.0, False)
    raise PreconditionError(f"unknown functional {name!r}")


def from_expression(text: str, value_at_zero: Optional[float], is_even: bool = False) -> MarginalFunctional:
    """Wrap a user expression in ``t`` (see :mod:`addfunc.expression`)."""
    if value_at_zero is None:
        raise PreconditionError("expression functionals must come with value_at_zero")
    fn = compile_expression(text)
    return MarginalFunctional(fn, f"expr:{text}", float(value_at_zero), is_even)


def parse_functional(spec: str, value_at_zero: Optional[float] = None) -> MarginalFunctional:
    """Parse the CLI form ``name[:p1,p2]`` or ``expr:<expression>``."""
    spec = spec.strip()
    if spec.startswith("expr:"):
        return from_expression(spec[5:], value_at_zero)
    name, _, rest = spec.partition(":")
    params = [float(p) for p in rest.split(",") if p.strip()] if rest else []
    return builtin_functional(name, params)


@dataclass(frozen=True)
class ParameterSpace:
    """Theta_{s,M}: vectors with at most s nonzeros and sup-norm at most M."""

    d: int
    s: int
    M: float

    def __post_init__(self):
        if self.d < 1:
            raise PreconditionError(f"requires d >= 1, got d={self.d}")
        if not 0 <= self.s <= self.d:
            raise PreconditionError(f"requires 0 <= s <= d, got s={self.s}, d={self.d}")
        if not self.M > 0:
            raise PreconditionError(f"requires M > 0, got M={self.M}")

    def contains(self, theta) -> bool:
        theta = np.asarray(theta, dtype=float)
        return (
            theta.shape == (self.d,)
            and int(np.count_nonzero(theta)) <= self.s
            and float(np.max(np.abs(theta), initial=0.0)) <= self.M
        )


def make_theta(
    d: int,
    s: int,
    placement: str = "first_coords",
    value: Optional[float] = None,
    spread: Optional[Sequence[float]] = None,
    seed: int = 0,
    M: float = math.inf,
) -> np.ndarray:
    """Build a vector of Theta_{s,M} with ``s`` spikes.

    Exactly one of ``value`` (all spikes equal) or ``spread`` (one value per
    spike, at most ``s`` of them) is used.
    """
    if s > d:
        raise PreconditionError(f"requires s <= d, got s={s}, d={d}")
    if s < 0:
        raise PreconditionError("requires s >= 0")
    if spread is not None:
        values = np.asarray(spread, dtype=float)
        if values.size > s:
            raise PreconditionError(f"{values.size} spread values exceed the sparsity s={s}")
    else:
        values = np.full(s, 0.0 if value is None else float(value))
    if values.size and np.max(np.abs(values)) > M:
        raise PreconditionError(f"spike value {np.max(np.abs(values))} exceeds M={M}")

    theta = np.zeros(d)
    if values.size == 0:
        return theta
    if placement == "first_coords":
        idx = np.arange(values.size)
    elif placement == "random":
        idx = np.sort(np.random.default_rng(seed).choice(d, size=values.size, replace=False))
    else:
        raise PreconditionError(f"unknown placement {placement!r}")
    theta[idx] = values
    return theta


@dataclass(frozen=True)
class AssumptionReport:
    eps1_hat: float
    eps2_hat: float
    a3_ratio_max: float
    grid: list = field(default_factory=list)
    a2_violated: bool = False


def _nested_grid(lo, hi, n):
    # van der Corput fill: the first n points of a size-(n+1) grid are the
    # size-n grid, which keeps a3_ratio_max monotone in n.
    pts = [lo, hi]
    i = 1
    while len(pts) < n:
        x, denom, k = 0.0, 1.0, i
        while k:
            denom *= 2
            x += (k % 2) / denom
            k //= 2
        pts.append(lo + (hi - lo) * x)
        i += 1
    return pts[:n]


def _slope(x, y):
    x, y = np.asarray(x), np.asarray(y)
    if np.ptp(x) == 0:
        return 0.0
    return float(np.polyfit(x, y, 1)[0])


def probe_assumptions(
    F: MarginalFunctional, s: int, d: int, grid_size: int = 8, perturbation: float = 0.1
) -> AssumptionReport:
    """Fit growth exponents for the sup-norm and approximation-error assumptions,
    plus a delta-ratio stability check.

    Diagnostic only: exponents are least-squares slopes of log-quantities
    against M^2 over the probe range.
    """
    from addfunc.polyapprox import remez

    if s * s <= d:
        raise PreconditionError(f"requires s^2 > d, got s={s}, d={d}")
    if grid_size < 4:
        raise PreconditionError("requires grid_size >= 4")
    lo = math.sqrt(2 * math.log(s * s / d))
    hi = math.sqrt(2 * math.log(d))
    if hi - lo < 1e-9 * hi:
        # degenerate when s = d; widen down to sqrt(log(s^2/d))
        lo = math.sqrt(math.log(s * s / d))
    Ms = sorted(_nested_grid(lo, hi, grid_size))
    Fc = F.centered()

    def delta(K, M):
        return remez(Fc, K, -M, M).delta

    sq = [M * M for M in Ms]
    norms = [Fc.sup_norm(M) for M in Ms]
    if all(v == 0 for v in norms):
        eps1 = 0.0
    else:
        floor = min(v for v in norms if v > 0)
        eps1 = _slope(sq, [math.log(max(v, floor)) for v in norms])

    deltas = [delta(max(1, int(M * M)), M) for M in Ms]
    a2_violated = any(v == 0 for v in deltas)
    eps2 = math.inf if a2_violated else _slope(sq, [-math.log(v) for v in deltas])

    ratio = 1.0
    for M, base in zip(Ms, deltas):
        K = max(1, int(M * M))
        for fk in (1 - perturbation, 1 + perturbation):
            for fm in (1 - perturbation, 1 + perturbation):
                other = delta(max(1, round(K * fk)), M * fm)
                if base == 0 and other == 0:
                    continue
                if base == 0 or other == 0:
                    ratio = math.inf
                    continue
                ratio = max(ratio, base / other, other / base)
    grid = [(M, v) for M, v in zip(Ms, deltas)]
    return AssumptionReport(eps1, eps2, ratio, grid, a2_violated)
