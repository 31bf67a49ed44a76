"""Convex graphs of prescribed Gauss curvature over exterior domains.

The library builds explicit sub- and supersolution barriers, solves the
compact Dirichlet problems on expanding annuli by damped Newton iteration on
the logarithmic residual, extracts the monotone exterior limit on a fixed
observation window, and audits the decay estimates the construction relies
on (first and second derivative rates at the outer boundary, interior
maximum principle, boundary barrier functions).
"""

__version__ = "0.1.0"

from .errors import (ConfigError, ConvexityError, FieldError, GlueError,
                     GridError, RadialSolveError, SolveError, SubsolutionError)
from .grid import (AnnulusGrid, RadialGrid, build_annulus_grid,
                   build_radial_grid, refine, trig_interp)
from .fields import (FSpec, GradHess, ScalarField, convexity_min_eig,
                     differentiate, gauss_curvature, hessian_min_eig,
                     linearized_apply)
from .barriers import (ConeSupersolution, ExplicitSubsolution,
                       GluedSubsolution, TabulatedSubsolution, glue_max,
                       subsolution_curvature, subsolution_eval,
                       supersolution_eval, verify_subsolution)
from .radial import (RadialProfile,G, G_inv, profile_interp, profile_to_field,
                     radial_curvature, solve_radial_bvp)
from .compact import (CompactProblem, ConvergenceReport,
                      evaluate_jacobian_action, evaluate_residual,
                      homotopy_solve, solve_dirichlet)
from .problem import ProblemSpec
from .exterior import (ExteriorRun, WindowField, close_to_cone_gap,
                       restrict_to_radii, solve_exterior, window_cauchy_error)
from .diagnostics import (BoundaryFrame, DecayAudit, LogLogFit,
                          c1_decay_audit, c2_boundary_audit,
                          calibrate_theta_A, fit_loglog_slope,
                          interior_w_audit, theta_barrier_audit)
