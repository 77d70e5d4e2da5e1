"""Solver and verification suite for prescribed dual curvature measures.

Solves h det(grad^2 h + h I) |Dh|^(q-n-1) = f on S^1 and S^2 for even,
strictly convex support functions by homotopy continuation with a damped
Newton corrector, and numerically certifies the stability and spectral
inequalities that govern the problem.
"""

from dualmink.sphere import SphereGrid, build_grid, differentiate, integrate, project_even
from dualmink.body import (
    AnalyticBody,
    BodyGeometry,
    SupportFunction,
    analytic_support,
    diameter_union,
    evaluate_geometry,
    hausdorff_distance,
    l2_distance,
    normalize_body,
    radial_support_roundtrip,
)
from dualmink.verify import (
    DualDensity,
    StabilityReport,
    c0_c1_report,
    check_dirichlet_comparison,
    check_distance_comparison,
    check_spectral_inequality,
    check_stability,
    check_radial_moment_inequality,
    compute_beta,
    dual_density,
    poincare_check,
)
from dualmink.solve import (
    SolveResult,
    SolverConfig,
    linearize,
    newton_solve,
    residual,
    solve_homotopy,
    uniqueness_probe,
)

__all__ = [
    "SphereGrid", "build_grid", "differentiate", "integrate", "project_even",
    "AnalyticBody", "BodyGeometry", "SupportFunction", "analytic_support",
    "diameter_union", "evaluate_geometry", "hausdorff_distance", "l2_distance",
    "normalize_body", "radial_support_roundtrip",
    "DualDensity", "StabilityReport", "c0_c1_report", "check_dirichlet_comparison",
    "check_distance_comparison", "check_spectral_inequality", "check_stability",
    "check_radial_moment_inequality", "compute_beta", "dual_density", "poincare_check",
    "SolveResult", "SolverConfig", "linearize", "newton_solve", "residual",
    "solve_homotopy", "uniqueness_probe",
]

__version__ = "0.1.0"
