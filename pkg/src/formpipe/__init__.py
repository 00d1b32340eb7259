"""formpipe: headless structural pipeline for line-geometry exchange models.

Parse/write the VTK-dialect exchange format, validate and repair model
topology, solve linear statics on 3D beam/truss structures and report the
cross-section resistance ratio.
"""

from .model import (
    BEAM_LINE,
    TRUSS_LINE,
    BoundaryConditionEntry,
    Cell,
    Circle,
    CrossSection,
    GenericSection,
    Material,
    Point,
    Rectangle,
    RigidLink,
    SectionProperties,
    StructuralModel,
    ValidationReport,
    section_properties,
    validate,
)
from .exchange import ExchangeFormatError, parse_model, write_model, write_results_vtk
from .topology import (
    RepairReport,
    Topology,
    TopologyError,
    build_topology,
    check_support_reachability,
    make_rigid_link,
    merge_duplicate_nodes,
    prune_dead_arms,
    remove_degenerate_cells,
    remove_detached_components,
)
from .solver import (
    ConvergenceError,
    DofMap,
    LinearSystem,
    MechanismError,
    SolveStats,
    SolverError,
    assemble,
    beam_stiffness,
    expand_displacements,
    reaction_forces,
    recover_end_forces,
    solve_direct,
    solve_pcg_ichol,
    solve_system,
    truss_stiffness,
)
from .resistance import (
    ResultSet,
    StressState,
    Summary,
    build_result_set,
    classify,
    deformed_geometry,
    resistance_ratio,
    stress_state,
    summarize,
)
from .casegen import (
    CantileverSpec,
    LatticeSpec,
    LeonardoSpec,
    arch_occupancy,
    full_block_occupancy,
    gen_cantilever,
    gen_leonardo,
    gen_sphere_lattice,
)

__version__ = "0.1.0"
