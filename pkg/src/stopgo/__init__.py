"""Optimal embeddings of a target law by a simple random walk, their
supermartingale duals, and the stop-go monotonicity check, on finite trees."""

from ._sets import ContactSet, Provenance
from .classics import azema_yor_structure, brute_force_value, root_structure
from .dual import (
    DualCertificate,
    assemble_dual,
    check_slackness,
    contact_set,
    solve_dual,
    verify_duality,
    wald_certificate,
)
from .errors import (
    ConfigurationError,
    DualityGapError,
    ExactSolveError,
    InfeasibleEmbedding,
    ResourceError,
    StopGoError,
)
from .monotonicity import (
    ConditionalFamily,
    Flavor,
    SGPairSet,
    conditional_family,
    enumerate_SG,
    enumerate_SG_star,
    lower_extension,
    project_SG,
    support_set,
    tower_residual,
    verify_MP,
)
from .primal import (
    StoppingFlow,
    assemble_primal,
    expected_payoff,
    feasibility,
    optimal_vertices,
    solve_primal,
    stopped_law,
)
from .walkspace import (
    PathPrefix,
    PathTree,
    PayoffKind,
    PayoffSpec,
    Statistic,
    TargetMeasure,
    TreeMode,
    build_tree,
    check_nonanticipative,
    concat,
    eval_payoff,
)

__all__ = [name for name in dir() if not name.startswith("_")]
