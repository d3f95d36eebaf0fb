"""Minimax estimation of sparse additive functionals sum_i F(theta_i)."""

from addfunc.errors import HermiteOverflowError, NumericalError, PreconditionError
from addfunc.funcspace import (
    AssumptionReport,
    MarginalFunctional,
    ParameterSpace,
    builtin_functional,
    from_expression,
    make_theta,
    probe_assumptions,
)
from addfunc.polyapprox import PolyApprox, delta_curve, grid_lp_approx, remez
from addfunc.hermite import (
    gauss_hermite,
    hermite_all,
    hermite_moment_check,
    hermitize,
    variance_scaled_hermite,
)
from addfunc.estimator import (
    FittedEstimator,
    LevelSchedule,
    build_schedule,
    duplicate_samples,
    estimate,
    fit,
    fit_simplified,
)
from addfunc.lowerbound import (
    LowerBoundCertificate,
    PriorPair,
    build_prior_pair,
    certificate,
    chi2_series,
    g_ratio,
    rate_expression,
)
from addfunc.risk import (
    RiskReport,
    adversarial_sweep,
    measure_risk,
    rate_scaling_study,
    simulate,
)

__version__ = "0.1.0"
