"""Numerical verification toolkit for harmonic-curvature 4-metrics."""

from .errors import (
    Curv4Error,
    DegenerateFrameError,
    DomainError,
    InconsistencyError,
    InputError,
    IntegrationError,
    PreconditionError,
)
from .numerics import (
    DEFAULT_STENCIL,
    EigenResult,
    RankResult,
    StencilConfig,
    central_diff,
    gradient,
    numerical_rank,
    rk4_integrate,
    rk4_step,
    sym_eigen,
)
from .tensor4 import (
    Curv4,
    Metric4,
    SymBilinear4,
    WeylSplit,
    bivector_matrix,
    check_weyl_frame_identities,
    curvature_symmetrize,
    frame_components,
    hodge_star,
    invariants_from_sectional,
    kulkarni_nomizu,
    ricci_contract,
    sd_split,
    sectional_from_invariants,
    weyl_from_curv,
)
from .chart import (
    DEFAULT_TOLS,
    CurvatureField,
    HarmonicityReport,
    MetricChart,
    christoffel,
    codazzi_residual,
    contracted_bianchi_residual,
    curvature_at,
    div_riemann_norm,
    div_weyl_norm,
    harmonicity_report,
    metric_norm,
    sample_points,
    scalar_gradient_norm,
)
from .frames import (
    InvariantCounts,
    RicciFrame,
    StructureData,
    cluster_count,
    cluster_indices,
    curvature_from_structure,
    extract_frame,
    invariant_counts,
    skw_residuals,
    structure_data,
    sy_from_components,
    sy_invariants,
)
from .variety import (
    EVEN_PERMS,
    MembershipReport,
    NAMED_POINTS,
    VarietyPoint,
    export_csv,
    from_frame,
    fsp_matrix,
    h_components,
    permute_point,
    sample_variety,
    system_residuals,
    z_components,
)
from .examples import (
    REGISTRY,
    ExampleSpec,
    SurfaceProfile,
    build_example,
    example_names,
    make_bump_nonharmonic,
    make_constant_curvature,
    make_kpc_warped,
    make_line_cross_space,
    make_product_surfaces,
    make_random_perturbed_flat,
    profile_residual,
    solve_kpc_profile,
)

__version__ = "0.1.0"
