"""Period-n trajectoids for periodic planar paths.

Typical use::

    from trajectoid import load_path, solve, assemble_closed_curve, build_mesh

    path = load_path("path.json")
    res = solve(path, n=3)
    curve = assemble_closed_curve(res.trace, 3, res.apex_choice)
    mesh = build_mesh(curve)
"""

from .errors import (
    AntipodalEndpoints,
    BracketFailure,
    DegenerateHull,
    DegeneratePath,
    FanPointDegenerate,
    JunctionGap,
    NonMonotoneSamples,
    NonSmoothPath,
    NotConstructible,
    RoughCurvatureWarning,
    StepTooCoarse,
    TangentKink,
    TangentMismatch,
    TrajectoidError,
    XOutOfRange,
    ZeroDisplacement,
)
from .path_model import (
    PlanarPath,
    aligned_hausdorff,
    load_path,
    path_from_curvature,
    path_from_polyline,
    path_from_spec,
    path_to_spec,
    resample,
)
from .solver import (
    SolveResult,
    SolverBounds,
    compute_bounds,
    find_Kx,
    find_Qx,
    min_period,
    scan_dtk,
    solve,
)
from .sphere_trace import (
    NetRotation,
    SphericalTrace,
    develop,
    endpoint_distance,
    net_rotation,
    trace,
)
from .spherical_geometry import (
    ApexPair,
    RegionAreas,
    delta_area_formula,
    isosceles_apexes,
    region_area_D,
    region_area_R,
    signed_region_area,
)
from .trajectoid_mesh import (
    ClosedSphericalCurve,
    TrajectoidMesh,
    assemble_closed_curve,
    build_mesh,
    export_mesh,
    verify_period,
)

__version__ = "0.1.0"

__all__ = [
    "aligned_hausdorff", "AntipodalEndpoints", "ApexPair", "assemble_closed_curve",
    "BracketFailure", "build_mesh", "ClosedSphericalCurve", "compute_bounds", "DegenerateHull",
    "DegeneratePath", "delta_area_formula", "develop", "endpoint_distance", "export_mesh",
    "FanPointDegenerate", "find_Kx", "find_Qx", "isosceles_apexes", "JunctionGap", "load_path",
    "min_period", "net_rotation", "NetRotation", "NonMonotoneSamples", "NonSmoothPath",
    "NotConstructible", "path_from_curvature", "path_from_polyline", "path_from_spec",
    "path_to_spec", "PlanarPath", "region_area_D", "region_area_R", "RegionAreas", "resample",
    "RoughCurvatureWarning", "scan_dtk", "signed_region_area", "solve", "SolverBounds",
    "SolveResult", "SphericalTrace", "StepTooCoarse", "TangentKink", "TangentMismatch",
    "trace", "TrajectoidError", "TrajectoidMesh", "verify_period", "XOutOfRange",
    "ZeroDisplacement",
]
