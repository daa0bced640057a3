"""foldstring: design, optimize, fabricate and simulate string-driven origami strips."""

from .transition import (
    EntryFlag,
    FoldParameter,
    PlanarState,
    TransitionGraphDesign,
    TransitionVector,
    fold_state,
    initial_alpha,
    sample_trajectory,
    shape_angle,
    transition_delta,
)
from .pattern import (
    Crease,
    CreaseKind,
    CreasePattern,
    FoldGroup,
    synthesize_strip,
    tessellate,
    validate_pattern,
)
from .kinematics import AnchoredPoint, FoldedGeometry, embed_fold, locate_points
from .optimize import DesignTask, FitnessBreakdown, design_arm, evaluate_fitness
from .cma import cma_es_minimize
from .fabrication import (
    FabricationParams,
    generate_meshes,
    max_fold_angle,
    place_holes,
)
from .mesh import TriangleMesh, mesh_diagnostics, read_stl, write_stl
from .stringsim import (
    RoutingPlan,
    TsaConfig,
    measure_initial_lengths,
    solve_quasi_static,
    tsa_segment_length,
    validate_routing,
)
from .interchange import (
    Project,
    export_dxf,
    export_svg,
    parse_dxf,
    project_load,
    project_save,
)

__version__ = "0.1.0"
