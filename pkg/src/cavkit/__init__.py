"""Grid-based convex analysis: conjugates, inf-convolution duality,
representative functions and monotone operator graphs."""
from .numcore import (
    ExtReal,
    GridFn,
    INF,
    ImproperError,
    IncompatibleError,
    LatticeGrid,
    Polytope,
    RatLinMap,
    grid_compatible,
)
from .conjugate import (
    DualGridError,
    closure,
    conjugate,
    conjugate_fast,
    fy_gap,
    is_closed,
)
from .quadab import (
    ConstrainedSetup,
    DualityReport,
    QuadSetup,
    constrained_dual_min,
    constrained_infconv,
    coupled_dual_min,
    coupled_infconv,
    cross_path_check,
    lift_to_constrained,
    shear_preimage_sets,
    verify_constrained_duality,
    verify_coupled_duality,
)
from .qualif import (
    QCResult,
    check_qualification,
    check_qualification_constrained,
    cone_is_subspace,
)
from .monops import (
    CcInstance,
    OperatorGraph,
    cc_check,
    cc_maximality_harness,
    graph_sum,
    is_grid_maximal,
    is_monotone,
    linear_transform,
    op_algebra,
    parallel_sum,
    strong_maximality_harness,
    verify_composite_representability,
)
from .reprfn import (
    ReprFn,
    SampledRepr,
    at_transform,
    br_check,
    br_sweep,
    conjugate_formula_check,
    graph_invariance_check,
    graph_of,
    inverse_normal_repr,
    is_representative,
    is_strongly_representative,
    normal_cone_repr,
    separable_repr,
)

__version__ = "0.1.0"
