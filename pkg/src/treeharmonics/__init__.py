"""Harmonic analysis on finite rooted trees.

Trees here are finite truncations: every leaf sits at level 0, there is
a unique top vertex, and levels increase by one along parent edges.  A
boundary measure on the leaves induces a flow on the vertices, the flow
drives a probabilistic Laplacian, and boundary data extends harmonically
through sector averages (the Poisson integral).  On top of that the
package computes maximal operators, Hardy and BMO norms, verifies the
Carleson-measure characterizations of Poisson boundedness, and audits a
class of cancelling kernels whose densities it bounds by mean
oscillation.

See the subcommand help of the ``treeharmonics`` CLI for the file-based
workflow.
"""
from .errors import (
    CycleDetected,
    DimensionMismatch,
    EmptyInput,
    InvalidExponent,
    LevelOverflow,
    LevelUnderflow,
    MixedLeafLevels,
    MultipleRoots,
    NoInternalVertices,
    ParseError,
    RadiusOutOfRange,
    RequiresLocallyDoubling,
    TreeHarmonicsError,
    ValidationError,
)
from .tree import Tree, build_from_parents
from .measures import (
    BoundaryMeasure,
    FlowCheck,
    FlowMeasure,
    VertexMeasure,
    ancestor_cumsum,
    boundary_ball,
    boundary_doubling_ratio,
    check_flow,
    doubling_constants,
    induce_flow,
    sector_leaf_sums,
    subtree_sums,
)
from .harmonic import (
    HarmonicityCheck,
    hl_maximal,
    is_harmonic,
    laplacian_apply,
    poisson_extend,
    radial_maximal,
    recover_boundary,
    transition_apply,
)
from .norms import (
    BmoNorm,
    bmo_norm,
    hardy_norm,
    lp_boundary,
    lp_tree,
    sector_mean,
    weak_l1_tree,
)
from .carleson import (
    CarlesonReport,
    EquivalenceReport,
    OpNormEstimate,
    PowerIterConfig,
    Weak11Report,
    carleson_constant,
    indicator_lower_bound,
    marcinkiewicz_upper,
    opnorm_poisson,
    verify_equivalence,
    weak11_check,
    weak11_ratio,
)
from .kernels import (
    BmoCarlesonVerdict,
    Kernel,
    KernelAudit,
    apply_kernel,
    atom_kernel,
    atom_pairings,
    audit_kernel,
    bmo_from_carleson,
    carleson_density,
    confluent_matrix,
    example_ck_bound,
    example_kernel_delta,
    theorem3_bound,
    verify_bmo_to_carleson,
    zero_rows,
)
from .instances import (
    RNG_ALGORITHM,
    GenSpec,
    Instance,
    InstanceFunction,
    generate,
    load_instance,
    make_sigma,
    save_instance,
)

__version__ = "0.1.0"

__all__ = [
    "Tree",
    "build_from_parents",
    "BoundaryMeasure",
    "FlowMeasure",
    "VertexMeasure",
    "FlowCheck",
    "sector_leaf_sums",
    "subtree_sums",
    "ancestor_cumsum",
    "induce_flow",
    "check_flow",
    "doubling_constants",
    "boundary_ball",
    "boundary_doubling_ratio",
    "transition_apply",
    "laplacian_apply",
    "poisson_extend",
    "HarmonicityCheck",
    "is_harmonic",
    "recover_boundary",
    "hl_maximal",
    "radial_maximal",
    "lp_boundary",
    "lp_tree",
    "weak_l1_tree",
    "hardy_norm",
    "BmoNorm",
    "bmo_norm",
    "sector_mean",
    "CarlesonReport",
    "carleson_constant",
    "indicator_lower_bound",
    "marcinkiewicz_upper",
    "PowerIterConfig",
    "OpNormEstimate",
    "opnorm_poisson",
    "weak11_ratio",
    "Weak11Report",
    "weak11_check",
    "EquivalenceReport",
    "verify_equivalence",
    "Kernel",
    "KernelAudit",
    "confluent_matrix",
    "audit_kernel",
    "apply_kernel",
    "carleson_density",
    "zero_rows",
    "theorem3_bound",
    "BmoCarlesonVerdict",
    "verify_bmo_to_carleson",
    "atom_kernel",
    "atom_pairings",
    "bmo_from_carleson",
    "example_kernel_delta",
    "example_ck_bound",
    "Instance",
    "InstanceFunction",
    "RNG_ALGORITHM",
    "GenSpec",
    "generate",
    "load_instance",
    "save_instance",
    "make_sigma",
    "TreeHarmonicsError",
    "EmptyInput",
    "MultipleRoots",
    "CycleDetected",
    "MixedLeafLevels",
    "LevelUnderflow",
    "LevelOverflow",
    "DimensionMismatch",
    "NoInternalVertices",
    "RadiusOutOfRange",
    "InvalidExponent",
    "RequiresLocallyDoubling",
    "ParseError",
    "ValidationError",
]
