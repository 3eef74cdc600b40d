"""Shooting, winding numbers and branch continuation."""

from perbif.continuation.branch import (
    Branch,
    BranchOrigin,
    ContinuationOptions,
    SymmetryClass,
    Termination,
    branch_k0,
    branches_from_eigenvalue,
    continue_branch,
    find_bifurcation_points,
    seed_from_root,
    sign_definite,
)
from perbif.continuation.shooting import annotate, shoot_newton, shooting_map
from perbif.continuation.trajectory import (
    DegeneracyError,
    IntegrationError,
    Trajectory,
    WindingInfo,
    detect_parity,
    integrate,
    norms,
    winding_number,
)

__all__ = [
    "Branch", "BranchOrigin", "ContinuationOptions", "SymmetryClass", "Termination",
    "branch_k0", "branches_from_eigenvalue", "continue_branch", "find_bifurcation_points",
    "seed_from_root", "sign_definite", "annotate", "shoot_newton", "shooting_map",
    "DegeneracyError", "IntegrationError", "Trajectory", "WindingInfo", "detect_parity",
    "integrate", "norms", "winding_number",
]
