"""Surface deformation by alternating local fits and sparse global solves.

The package splits into a mesh layer (`TriMesh`, OBJ I/O, generators), a
discrete-operator layer (cotangent Laplacian, vertex masses, curvature),
energy models (membrane stretch, two as-rigid-as-possible variants, a
curvature bending term), and the warm-startable `IterativeSolver` that
minimizes the blended stretch/bend objective under vertex constraints.
`deformlab.service` wraps a solver session behind HTTP and a WebSocket
stream; `deformlab.cli` exposes the same pieces as a command line tool.
"""

from .mesh import (
    ConnectivityError,
    DegenerateFaceError,
    MeshError,
    ObjParseError,
    TriMesh,
    generate_bar,
    generate_cylinder_map,
    generate_fold,
    generate_grid,
    generate_icosphere,
    load_obj,
    save_obj,
)
from .operators import DiscreteOperators, OperatorError, build_operators
from .energies import (
    EnergyBreakdown,
    arap_spoke_energy,
    arap_spoke_rim_energy,
    bending_energy,
    hybrid_energy,
    singular_value_stretch,
    stretch_energy,
)
from .solver import (
    Constraints,
    IterationReport,
    IterativeSolver,
    NumericalError,
    SingularSystemError,
    SolverConfig,
    evaluate_energy,
    solve,
    solve_arap,
)

__version__ = "0.1.0"

__all__ = [
    "ConnectivityError",
    "Constraints",
    "DegenerateFaceError",
    "DiscreteOperators",
    "EnergyBreakdown",
    "IterationReport",
    "IterativeSolver",
    "MeshError",
    "NumericalError",
    "ObjParseError",
    "OperatorError",
    "SingularSystemError",
    "SolverConfig",
    "TriMesh",
    "arap_spoke_energy",
    "arap_spoke_rim_energy",
    "bending_energy",
    "build_operators",
    "evaluate_energy",
    "generate_bar",
    "generate_cylinder_map",
    "generate_fold",
    "generate_grid",
    "generate_icosphere",
    "hybrid_energy",
    "load_obj",
    "save_obj",
    "singular_value_stretch",
    "solve",
    "solve_arap",
    "stretch_energy",
    "__version__",
]
