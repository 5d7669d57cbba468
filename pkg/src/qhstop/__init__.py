"""Quasi-hyperbolic task completion: equilibrium solver, rationalization, identification and estimation."""

__version__ = "0.1.0"

from .distributions import (  # noqa: E402
    Affine,
    Discrete,
    Gumbel,
    Logistic,
    NegLogNormal,
    Normal,
    PiecewiseUniform,
    Uniform,
    from_mean_sd,
    fosd_geq,
    moment_stats,
    partial_expectation,
)
from .model import (  # noqa: E402
    MANDATORY,
    EquilibriumProfile,
    Preferences,
    StoppingProblem,
    WelfareReport,
    evaluate_welfare,
    g_eval,
    simulate_stopping,
    solve_equilibrium,
)
from .rationalize import (  # noqa: E402
    RationalizationResult,
    StoppingData,
    moment_renormalize,
    rationalize_naive,
    rationalize_sophisticated,
)
from .identification import (  # noqa: E402
    IdentifiedSet,
    RichData,
    aggregate_mixture,
    check_consistent,
    check_plausible,
    identified_set,
    reduce_to_mass_points,
)
from .estimation import EstimateResult, EstimationSpec, estimate_beta  # noqa: E402
