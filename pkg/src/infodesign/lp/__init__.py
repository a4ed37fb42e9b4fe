"""Dense linear programming: program container, simplex solver, MPS export."""

from .program import (
    BACKEND,
    DualCertificate,
    LinearProgram,
    LPSolution,
    LPStatus,
    NumericalBreakdown,
    ToleranceConfig,
    available_backends,
    check_feasible,
    constraint_residual,
    read_mps,
    solve_lp,
    write_mps,
)

__all__ = [
    "BACKEND",
    "DualCertificate",
    "LinearProgram",
    "LPSolution",
    "LPStatus",
    "NumericalBreakdown",
    "ToleranceConfig",
    "available_backends",
    "check_feasible",
    "constraint_residual",
    "read_mps",
    "solve_lp",
    "write_mps",
]
