"""Quadrature ratios for the Hermite-form approximations, shared by the unit
and acceptance tests.

For P_hat = sum_{k>=1} a_k H_k with a_k from the best degree-K approximation
of F - F(0) on [-M, M], and xi ~ N(theta, 1):
  var_zero     = E P_hat^2 (theta = 0)           / (||F||^2 6^K)
  var_inside   = E P_hat^2 (|theta| <= M)        / (||F||^2 12^K)
  mean_outside = |E P_hat| (|theta| > M)         / (||F|| 3^K exp(c theta^2 / 16))
"""

import math

import numpy as np

from addfunc.funcspace import builtin_functional
from addfunc.hermite import gaussian_expectation, hermitize
from addfunc.polyapprox import remez

M_GRID = tuple(np.linspace(1.0, 4.0, 7))
C_GRID = (1.0, 2.0, 4.0, 8.0)
FUNCTIONALS = ("abs_pow:1", "abs_pow:0.5", "neg_t_log")


def hermite_ratios(names=FUNCTIONALS, M_grid=M_GRID, c_grid=C_GRID):
    worst = {"var_zero": 0.0, "var_inside": 0.0, "mean_outside": 0.0}
    for name in names:
        base, _, par = name.partition(":")
        F = builtin_functional(base, [float(par)] if par else []).centered()
        for M in M_grid:
            norm = F.sup_norm(M)
            for c in c_grid:
                K = max(1, int(math.floor(c * M * M / 8)))
                series = hermitize(remez(F, K, -M, M).coeffs, include_constant=False)
                n = K + 8

                def second(theta):
                    return gaussian_expectation(lambda x: series(x) ** 2, theta, 1.0, n)

                worst["var_zero"] = max(worst["var_zero"], second(0.0) / (norm**2 * 6.0**K))
                for theta in np.linspace(-M, M, 9):
                    worst["var_inside"] = max(worst["var_inside"], second(theta) / (norm**2 * 12.0**K))
                for theta in M * np.array([1.1, 1.5, 2.0, 3.0]):
                    for sgn in (-1.0, 1.0):
                        mean = abs(series.mean(sgn * theta))
                        worst["mean_outside"] = max(worst["mean_outside"], float(mean) / (norm * 3.0**K * math.exp(c * theta**2 / 16)))
    return worst
