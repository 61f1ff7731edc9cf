"""Lasso support recovery under the eigenvalue condition: solver, design
diagnostics, closed-form bounds and a seeded Monte Carlo harness."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    GramPartition,
    RegressionInstance,
    gram,
    noise_score,
    objective,
    partition_gram,
    vn_decomposition,
    vn_value,
)
from .diagnostics import (  # noqa: E402
    ConditionReport,
    check_c1,
    condition_report,
    eigenvalue_condition,
    event_an,
    irrepresentable_condition,
    min_eigenvalue_symmetric,
    mn_radius,
)
from .solver import LassoFit, PathResult, kkt_check, lambda_max, lasso_path, soft_threshold, solve_lasso  # noqa: E402
