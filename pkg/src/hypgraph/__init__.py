"""Graphs of constant hyperbolic curvature f(kappa) = sigma in the half-space model.

Pointwise geometry (``shape``, ``curvfunc``, ``linop``), exact barriers
(``barrier``), a radial oracle (``radial``), a 2D continuation solver
(``grid``, ``solver``) and the scalar inequalities (``scalars``).
"""

__version__ = "0.1.0"

from .barrier import (  # noqa: E402
    EquidistantSphere,
    Orientation,
    angle_bounds,
    barrier_audit,
    cap_height,
    cap_through,
    reciprocal_radii,
    sphere_radii,
)
from .curvfunc import (  # noqa: E402
    Composite,
    CurvatureFamily,
    HkRoot,
    Mean,
    Quotient,
    eval_f,
    grad_f,
    in_cone,
    concavity_gap,
    limit_condition,
    parse_family,
)
from .errors import *  # noqa: E402,F401,F403
from .grid import Disk, Ellipse, GridDomain, Stadium, build_grid  # noqa: E402
from .linop import LinearizationAtPoint, dF, eigen_sandwich_check, eval_G, linearize  # noqa: E402
from .radial import RadialProfile, radial_residual, solve_radial  # noqa: E402
from .rng import SplitMix64  # noqa: E402
from .scalars import gamma_y, phi, phi_theta, sigma0  # noqa: E402
from .shape import (  # noqa: E402
    GraphPointState,
    euclidean_shape,
    gamma_lower,
    gamma_upper,
    hyperbolic_shape,
    principal_curvatures,
    split_pm,
)
from .solver import (  # noqa: E402
    ContinuationReport,
    ScalarField,
    assemble_jacobian,
    assemble_residual,
    continue_in_eps,
    continue_in_t,
    newton_step,
)
