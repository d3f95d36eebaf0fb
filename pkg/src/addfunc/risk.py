"""Monte Carlo risk of additive-functional estimators.

Replication r draws its noise from the stream keyed by (seed, r), and the
results land in slot r of a preallocated array, so the report is the same
for any thread count or scheduling order.  All reductions use exactly
rounded sums.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from functools import lru_cache

import numpy as np

from addfunc.errors import NumericalError, PreconditionError
from addfunc.estimator import build_schedule, fit
from addfunc.funcspace import ParameterSpace, make_theta
from addfunc.lowerbound import rate_expression
from addfunc.rng import derived_seed, stream

MIN_REPS = 100

CSV_FIELDS = (
    "d", "s", "M", "c", "F", "noise_mode", "theta_label", "n_reps", "seed",
    "mse", "se_mse", "bias_sq", "variance", "rate_upper", "rate_lower", "ratio",
)


@dataclass(frozen=True)
class RiskReport:
    config: dict
    mse: float
    bias_sq: float
    variance: float
    se_mse: float
    theta_label: str
    rate_upper: float
    rate_lower: float
    ratio: float
    bias: float = 0.0
    se_bias: float = 0.0
    truth: float = 0.0

    def row(self) -> dict:
        out = {k: self.config[k] for k in ("d", "s", "M", "c", "F", "noise_mode")}
        out.update(theta_label=self.theta_label, n_reps=self.config["n_reps"], seed=self.config["seed"])
        out.update(
            mse=self.mse, se_mse=self.se_mse, bias_sq=self.bias_sq, variance=self.variance,
            rate_upper=self.rate_upper, rate_lower=self.rate_lower, ratio=self.ratio,
        )
        return out

    def to_dict(self):
        return asdict(self)


def simulate(theta, seed: int, rep: int = 0, copies: int = 1) -> np.ndarray:
    """y = theta + xi with xi iid N(0, 1); ``copies=2`` gives two independent draws."""
    theta = np.asarray(theta, dtype=float)
    g = stream(seed, rep)
    shape = theta.shape if copies == 1 else (copies,) + theta.shape
    return theta + g.standard_normal(shape)


def _mean(x):
    return math.fsum(x) / len(x)


def _jackknife_se(x):
    """Jackknife standard error of the sample mean of ``x``."""
    n = len(x)
    total = math.fsum(x)
    loo = (total - x) / (n - 1)
    centre = _mean(loo)
    return math.sqrt((n - 1) / n * math.fsum((loo - centre) ** 2))


@lru_cache(maxsize=256)
def _lower_rate(F, d, s):
    if s * s < 2 * d or s > d:
        return math.nan
    return rate_expression(F, d, s)[0]


def _replicate(estimator, theta, seed, rep):
    if estimator.kind == "multiscale" and estimator.noise_mode == "oracle_pairs":
        y = simulate(theta, seed, rep, copies=2)
    else:
        y = simulate(theta, seed, rep)
    return estimator.estimate(y, derived_seed(seed, rep, 1))


def measure_risk(estimator, theta, n_reps: int, seed: int, theta_label: str = "custom",
                 threads: int = 1, with_lower: bool = True) -> RiskReport:
    """MSE, squared bias and variance of ``estimator`` at ``theta``."""
    if n_reps < MIN_REPS:
        raise PreconditionError(f"requires n_reps >= {MIN_REPS}, got {n_reps}")
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (estimator.d,):
        raise PreconditionError(f"theta must have length d={estimator.d}")
    F = estimator.functional
    truth = math.fsum(F(theta))
    ests = np.empty(n_reps)

    def run(chunk):
        for r in chunk:
            try:
                ests[r] = _replicate(estimator, theta, seed, r)
            except PreconditionError:
                raise
            except Exception as exc:
                raise NumericalError(f"replication {r}: {exc}") from exc

    chunks = np.array_split(np.arange(n_reps), max(1, int(threads)))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for fut in [pool.submit(run, c) for c in chunks]:
                fut.result()
    else:
        run(chunks[0])

    err = ests - truth
    mse = _mean(err**2)
    mean_est = _mean(ests)
    bias = mean_est - truth
    variance = _mean((ests - mean_est) ** 2)
    rate_upper = estimator.rate_upper
    rate_lower = _lower_rate(F, estimator.d, estimator.s) if with_lower else math.nan
    config = {
        "d": estimator.d,
        "s": estimator.s,
        "M": estimator.M,
        "c": estimator.c,
        "F": F.label,
        "noise_mode": estimator.noise_mode,
        "n_reps": int(n_reps),
        "seed": int(seed),
    }
    return RiskReport(
        config=config,
        mse=mse,
        bias_sq=bias * bias,
        variance=variance,
        se_mse=_jackknife_se(err**2),
        theta_label=theta_label,
        rate_upper=rate_upper,
        rate_lower=rate_lower,
        ratio=mse / rate_upper if rate_upper > 0 else math.nan,
        bias=bias,
        se_bias=_jackknife_se(ests),
        truth=truth,
    )


def default_candidates(estimator, space: ParameterSpace):
    """theta = 0 plus all s spikes at each magnitude tied to the levels."""
    mags = []
    if estimator.schedule is not None:
        for _, M, _, t in estimator.schedule.levels:
            mags += [M / 4, t, 2 * t, M]
        M_top = estimator.schedule.top[0]
        mags += [M_top / 4, M_top / 2, M_top]
    else:
        M0 = estimator.M
        mags += [M0 / 4, M0 / 2, M0]
    mags.append(space.M)
    out = [("zero", np.zeros(space.d))]
    if space.s == 0:
        return out
    seen = set()
    for m in mags:
        key = round(m, 12)
        if m > space.M * (1 + 1e-12) or key in seen:
            continue
        seen.add(key)
        out.append((f"all_at:{m:.6g}", make_theta(space.d, space.s, value=min(m, space.M), M=space.M)))
    return out


def adversarial_sweep(estimator, space: ParameterSpace, candidates=None, n_reps: int = 1000,
                      seed: int = 0, threads: int = 1):
    """Risk at each candidate theta; returns (reports, worst report)."""
    if candidates is None:
        candidates = default_candidates(estimator, space)
    if not candidates:
        raise PreconditionError("candidates must be nonempty")
    for label, theta in candidates:
        if not space.contains(theta):
            raise PreconditionError(f"candidate {label!r} lies outside Theta_(s={space.s}, M={space.M:.6g})")
    reports = [measure_risk(estimator, theta, n_reps, seed, label, threads) for label, theta in candidates]
    worst = max(reports, key=lambda r: r.mse)
    return reports, worst


def s_from_rule(rule, d: int) -> int:
    """``rule`` is a callable d -> s or a string like '4sqrt' (s = round(4 sqrt d))."""
    if callable(rule):
        return int(rule(d))
    if isinstance(rule, str) and rule.endswith("sqrt"):
        factor = float(rule[:-4] or 1)
        return int(round(factor * math.sqrt(d)))
    raise PreconditionError(f"unknown s rule {rule!r}")


def rate_scaling_study(F, d_list, s_rule="4sqrt", c: float = 1.0, n_reps: int = 2000, seed: int = 0,
                       noise_mode: str = "oracle_pairs", threads: int = 1):
    """Worst-candidate MSE against s^2 max_l delta_l^2 over a sequence of d."""
    rows = []
    for d in d_list:
        s = s_from_rule(s_rule, d)
        estimator = fit(F, build_schedule(d, s, c), noise_mode)
        space = ParameterSpace(d, s, math.sqrt(2 * math.log(d)))
        _, worst = adversarial_sweep(estimator, space, n_reps=n_reps, seed=seed, threads=threads)
        rows.append({
            "d": d,
            "s": s,
            "mse_worst": worst.mse,
            "theta_label": worst.theta_label,
            "rate_upper": worst.rate_upper,
            "ratio": worst.ratio,
        })
    return rows
