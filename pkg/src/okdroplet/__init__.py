"""Numerical toolkit for the sharp-interface ternary droplet model."""
from .errors import *  # noqa: F401,F403
from .model import (  # noqa: F401
    ClusterAnsatz,
    ClusterMasses,
    Configuration,
    ProblemParams,
    SeparatedBalls,
    SingleBall,
    StandardDoubleBubble,
    apply_mass_transfer,
    ball,
    double_bubble,
    separated_balls,
    total_masses,
    validate_params,
)
from .geometry import (  # noqa: F401
    DoubleBubbleGeometry,
    check_monotonicity,
    double_bubble_area,
    hutchings_lower_bound,
    solve_double_bubble,
    sphere_area,
)

__version__ = "0.1.0"
