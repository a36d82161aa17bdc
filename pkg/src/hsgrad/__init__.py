"""hsgrad: desk-scale numerical toolkit for pointwise Sobolev gradients,
maximal operators, Whitney covers, Hardy inequalities and capacities."""

from .errors import (
    CertificationError,
    ConstructionError,
    DegeneratePairError,
    DomainError,
    ParameterError,
    PreconditionError,
    ResolutionError,
    SizeError,
    ToolkitError,
    UnsupportedStructureError,
)
from .geometry import (
    Ball,
    ComplementOfSet,
    LipschitzGraph,
    Polygon,
    Rectangle,
    distance_to_boundary,
    lipschitz_reflection,
    load_domain,
)
from .covers import (
    ChainOfBalls,
    WhitneyCover,
    greedy_disjoint_subcover,
    uniform_chain,
    validate_chain,
    whitney_collar_cover,
)
from .fields import MetricCloud, SampledField, finite_difference_gradient, grid_cloud, lp_quasinorm
from .maximal import TestFamily, grand_maximal, hl_maximal, power_maximal_composite, smooth_maximal
from .gradients import (
    build_constraints,
    calibration_constant,
    canonical_gradient,
    mean_zero_decompose,
    poincare_ratio,
    telescoping_bound_check,
    verify_candidate,
)
from .lp import (
    LPSolution,
    MinimalGradientLP,
    exact_oracle_min_gradient,
    min_gradient_quasinorm_p_lt_1,
    solve_capacity_lp,
    solve_min_gradient_p1,
    vertex_oracle_min_gradient,
)
from .extension import build_extension_plan, extend, extension_quality, mean_value_comparison
from .hardy import (
    counterexample_log_weight,
    fatness_probe,
    hardy_capacity,
    hardy_quotient_ratio,
    hausdorff_content,
    reflection_displacement_check,
    witness_capacity_bound,
)

__version__ = "0.1.0"
