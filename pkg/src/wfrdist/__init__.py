"""Exact Wasserstein-Fisher-Rao distances between discrete measures on S^2
and the SRNF shape distance between triangle meshes."""

__version__ = "0.1.0"

from .coupling import (
    RestrictedCoupling,
    SemiCoupling,
    project_to_restricted,
    uniform_interior_start,
    value_function,
)
from .errors import InvalidInputError, MeshFormatError, NumericFailureError
from .measure import (
    WFR,
    DiscreteMeasure,
    Kernel,
    build_cost_matrix,
    consolidate,
    load_measure,
    random_measure,
    save_measure,
)
from .mesh import (
    TriangleMesh,
    face_geometry,
    fuzzy_correspondence,
    load_mesh,
    srnf_distance,
    srnf_measure,
)
from .solver import SolveReport, SolverConfig, closed_form_single_atom, solve, t1_update, t2_update

__all__ = [
    "DiscreteMeasure", "Kernel", "WFR", "build_cost_matrix", "consolidate", "load_measure",
    "random_measure", "save_measure", "SemiCoupling", "RestrictedCoupling", "value_function",
    "project_to_restricted", "uniform_interior_start", "SolverConfig", "SolveReport", "solve",
    "t1_update", "t2_update", "closed_form_single_atom", "TriangleMesh", "face_geometry",
    "load_mesh", "srnf_measure", "srnf_distance", "fuzzy_correspondence",
    "InvalidInputError", "MeshFormatError", "NumericFailureError",
]
