"""Two-scale monotone discretization of integrodifferential operators of order 2s.

Kernels, graded meshes, operator assembly, brute-force oracles, linear,
obstacle and HJB solvers, and free-boundary extraction.
"""

from .assembly import DiscreteOperator, apply, assemble_operator, assemble_row, operator_report
from .errors import (CertificationError, ConvergenceError, DeskScaleError, DivergentIntegralError,
                     GradingAuditError, InvalidParameterError, NonMonotoneError, QuadratureError)
from .freeboundary import (FreeBoundary, extract_free_boundary, hausdorff_distance, level_height,
                           ndp_probe)
from .kernel import (KernelSpec, RegularizedKernel, angular_matrix, constant_kernel, cosine_series,
                     fractional_laplacian, kernel_invariants, make_regularized_kernel,
                     radial_moment, regularization_parameters)
from .mesh import (BepsPolicy, GradedMesh, audit_grading, beps, build_graded_interval_mesh,
                   build_graded_polygon_mesh)
from .oracle import (eval_regularized_op, eval_true_op, exact_ball_solution, near_field_integral,
                     obstacle_active_set, regularization_rate_probe)
from .rates import fit_rate
from .solvers import (HJBReport, ObstacleData, SolveReport, complementarity_residual,
                      hjb_residual, quadratic_supersolution, solve_hjb, solve_linear,
                      solve_obstacle)

__version__ = "0.1.0"
