"""Numerical verification of uniformly balancing sublevel inequalities.

Mean-value averages over balls, heatballs and modified heatballs, the explicit
constants they produce for Laplacian >= 1 and heat operator >= 1, grid level-set
estimates, and a CLI harness that checks the inequality end to end.
"""

from .averages import (
    AverageFamily,
    DegradedAccuracyWarning,
    average,
    average_derivative,
    ball_average,
    ball_average_derivative,
    heatball_average,
    heatball_average_derivative,
    lifted_heatball_average,
    modified_heatball_average,
    reconstruct_center_value,
)
from .constants import (
    ConstantReport,
    EmptyDomainError,
    chebyshev_constant,
    heat_cmn,
    heat_constant,
    laplace_cn,
    laplace_constant,
)
from .fields import ScalarField, make_field
from .geometry import (
    BallSpec,
    Domain,
    HeatballSpec,
    ModifiedHeatballSpec,
    heatball_volume,
    modified_heatball_volume,
    shrink_domain,
    unit_ball_volume,
)
from .levelsets import chebyshev_check, lp_norm, measure_sublevel, measure_superlevel
from .quadrature import (
    DEFAULT_QUAD,
    QuadratureConfig,
    QuadratureError,
    integrate_ball,
    integrate_heatball,
    integrate_modified_heatball,
)

__version__ = "0.1.0"
