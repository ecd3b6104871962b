"""Ideal spherical circle patterns with prescribed total geodesic curvatures."""

from .curvature import (
    CurvatureVector,
    GeometryReport,
    face_cone_angle,
    gauss_bonnet_report,
    jacobian,
    total_curvatures,
)
from .feasibility import FeasibilityResult, check_bruteforce, check_mincut
from .graph import (
    PatternGraph,
    generate_torus_grid,
    parse_pattern,
    read_pattern,
    serialize_pattern,
    validate,
    vertex_cone_coefficient,
)
from .solver import (
    SolverConfig,
    SolveTrace,
    adjust_face,
    estimate_contraction,
    initial_subpattern,
    iterate_once,
    merge_max,
    solve,
)

__version__ = "0.1.0"
