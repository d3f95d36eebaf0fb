"""Acceptance gate: criteria 1-11 at their stated tolerances and time limits.

Each test records a PASS/FAIL line (shown in the terminal summary) before
asserting, so a failing criterion is still reported with its numbers.
"""

import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from acceptance_log import record
from addfunc.cli import run
from addfunc.estimator import build_schedule, fit, fit_simplified
from addfunc.funcspace import builtin_functional
from addfunc.hermite import gauss_hermite, hermite_matrix, hermite_moment_check, hermite_second_moment
from addfunc.lowerbound import build_prior_pair, chi2_series, g_ratio
from addfunc.polyapprox import delta_curve, grid_lp_approx, loglog_slope, remez
from addfunc.risk import measure_risk, rate_scaling_study
from hermite_ratios import hermite_ratios

BASELINE = Path(__file__).parent / "baselines" / "rate_ratio.json"
ABS = builtin_functional("abs_pow", [1])


class Clock:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.seconds = time.perf_counter() - self.start


def test_criterion_01_anchors():
    with Clock() as clk:
        d1 = remez(ABS, 1, -1, 1).delta
        d2 = remez(ABS, 2, -1, 1).delta
        l1 = grid_lp_approx(ABS, 1, -1, 1, 2001).delta
        l2 = grid_lp_approx(ABS, 2, -1, 1, 2001).delta
    ok = (
        abs(d1 - 0.5) <= 1e-6 and abs(d2 - 0.125) <= 1e-6
        and abs(l1 - 0.5) <= 1e-6 and abs(l2 - 0.125) <= 1e-6
        and clk.seconds < 1.0
    )
    assert record(1, "best-approximation anchors", ok, clk.seconds, f"remez=({d1:.9g}, {d2:.9g}) lp=({l1:.9g}, {l2:.9g})")


def test_criterion_02_rate_scaling():
    slopes = {}
    with Clock() as clk:
        for gamma in (0.5, 1.0):
            curve = delta_curve(builtin_functional("abs_pow", [gamma]), range(5, 41), 1.0)
            slopes[gamma] = loglog_slope(curve)
    ok = all(abs(slopes[g] + g) <= 0.1 for g in slopes) and clk.seconds < 30
    detail = " ".join(f"gamma={g}: slope={v:.4f}" for g, v in slopes.items())
    assert record(2, "approximation-rate scaling", ok, clk.seconds, detail)


def test_criterion_03_duality():
    worst, cases = 0.0, 0
    with Clock() as clk:
        for name in ("abs_pow:1", "abs_pow:0.5", "neg_t_log"):
            base, _, par = name.partition(":")
            F = builtin_functional(base, [float(par)] if par else [])
            for K in (2, 5, 10, 20):
                for M in (1.0, 2.0):
                    delta = remez(F, K, -M, M).delta
                    gap = build_prior_pair(F, K, M, delta_ref=delta).gap
                    worst = max(worst, abs(gap - 2 * delta) / (2 * delta))
                    cases += 1
    ok = cases >= 12 and worst <= 1e-3 and clk.seconds < 60
    assert record(3, "prior-pair gap = 2 delta", ok, clk.seconds, f"{cases} cases, worst rel err {worst:.2e}")


def test_criterion_04_hermite():
    with Clock() as clk:
        mean_err, second_viol = 0.0, 0
        for theta in (0.0, 0.5, -0.5, 1.0, -1.0, 2.0, -2.0):
            for k in range(11):
                mean_err = max(mean_err, abs(hermite_moment_check(theta, k) - theta**k))
                if hermite_second_moment(theta, k) > (k + theta**2) ** k * (1 + 1e-12):
                    second_viol += 1
        orth = 0.0
        for j in range(13):
            for k in range(13):
                x, w = gauss_hermite(j + k + 2)
                H = hermite_matrix(x, max(j, k))
                want = math.factorial(k) if j == k else 0.0
                scale = math.sqrt(math.factorial(j) * math.factorial(k))
                orth = max(orth, abs(float(np.dot(w, H[j] * H[k])) - want) / scale)
    ok = mean_err <= 1e-8 and second_viol == 0 and orth <= 1e-10 and clk.seconds < 5
    detail = f"mean err {mean_err:.1e}, bound violations {second_viol}, orthogonality rel err {orth:.1e}"
    assert record(4, "Hermite identities", ok, clk.seconds, detail)


def test_criterion_05_chi2():
    with Clock() as clk:
        closed = max(
            abs(chi2_series((np.zeros(1), np.ones(1)), (np.array([mu]), np.ones(1)), 60) - math.expm1(mu * mu))
            for mu in (0.4, 0.8)
        )
        ratios = []
        for K, M in ((6, 1.0), (10, 1.0), (16, 1.5)):
            pair = build_prior_pair(ABS, K, M)
            val = chi2_series(pair.side(0), pair.side(1), K + 1, M=M)
            ratios.append(val / (4 * (math.e * M * M / K) ** K))
    ok = closed <= 1e-10 and max(ratios) <= 1.0 and clk.seconds < 5
    detail = f"closed-form err {closed:.1e}, matched series / bound max {max(ratios):.3g}"
    assert record(5, "chi-square series", ok, clk.seconds, detail)


def test_criterion_06_g():
    with Clock() as clk:
        g = float(g_ratio(np.geomspace(math.e, 1e6, 200)).min())
    ok = g > 0.5 and clk.seconds < 1
    assert record(6, "g lower bound", ok, clk.seconds, f"min g = {g:.6f}")


def test_criterion_07_simplified():
    F = builtin_functional("square")
    with Clock() as clk:
        est = fit_simplified(F, 100, math.sqrt(math.log(100)))
        rep = measure_risk(est, np.zeros(100), 10**4, 0, with_lower=False)
    ok = 190 <= rep.mse <= 210 and clk.seconds < 10
    assert record(7, "simplified estimator closed form", ok, clk.seconds, f"mse {rep.mse:.3f} (se {rep.se_mse:.3f})")


def test_criterion_08_unbiased():
    with Clock() as clk:
        est = fit(ABS, build_schedule(10**4, 400, 1.0), "oracle_pairs")
        rep = measure_risk(est, np.zeros(10**4), 2000, 0, with_lower=False)
    ok = abs(rep.bias) <= 3 * rep.se_bias and clk.seconds < 60
    assert record(8, "off-support unbiasedness", ok, clk.seconds, f"bias {rep.bias:.4f}, se {rep.se_bias:.4f}")


def test_criterion_09_rate_ratio():
    d_list = [2500, 10**4, 4 * 10**4]
    with Clock() as clk:
        rows = rate_scaling_study(ABS, d_list, "4sqrt", 1.0, 2000, 0, "oracle_pairs")
    ratios = [r["ratio"] for r in rows]
    spread = max(ratios) / min(ratios)
    if BASELINE.exists():
        base = json.loads(BASELINE.read_text())
        drift = max(abs(r / base["ratios"][str(d)] - 1) for d, r in zip(d_list, ratios))
        note = f"max drift vs baseline {drift:.3f}"
    else:
        BASELINE.parent.mkdir(exist_ok=True)
        BASELINE.write_text(json.dumps({"ratios": {str(d): r for d, r in zip(d_list, ratios)}, "rows": rows}, indent=2) + "\n")
        drift = 0.0
        note = "baseline recorded"
    ok = spread <= 10 and drift <= 0.2 and clk.seconds < 600
    detail = "ratios " + ", ".join(f"{r:.4g}" for r in ratios) + f"; max/min {spread:.3f}; {note}"
    assert record(9, "rate-ratio stability", ok, clk.seconds, detail)


def test_criterion_10_hermite_ratios():
    with Clock() as clk:
        worst = hermite_ratios()
    ok = max(worst.values()) <= 100 and clk.seconds < 30
    assert record(10, "Hermite-form variance/expectation ratios", ok, clk.seconds,
                  ", ".join(f"{k} {v:.3g}" for k, v in worst.items()))


def test_criterion_11_determinism(tmp_path, capsys):
    runs = {
        "risk": ["risk", "--functional", "abs_pow:1", "--d", "400", "--s", "40", "--reps", "300", "--theta", "sweep"],
        "lowerbound": ["lowerbound", "--functional", "abs_pow:0.5", "--d", "10000", "--s", "400"],
        "approx": ["approx", "--functional", "neg_t_log", "--degree", "12", "--M", "2"],
    }
    same = True
    with Clock() as clk:
        for name, argv in runs.items():
            payloads = set()
            for i, threads in enumerate(("1", "2", "4", "1")):
                out = tmp_path / f"{name}{i}"
                assert run(argv + ["--threads", threads, "--seed", "9", "--out", str(out)]) == 0
                (path,) = out.iterdir()
                payloads.add(path.read_bytes())
            same &= len(payloads) == 1
        capsys.readouterr()
    ok = same and clk.seconds < 30
    assert record(11, "byte-identical payloads", ok, clk.seconds, "risk CSV, lowerbound JSON, approx JSON")
