"""Krasnoselskij iteration for enriched nonexpansive maps on convex sets in R^n."""

from .geometry import Domain, DimensionError, DomainViolation, inner, norm, project, sample_points
from .operators import (
    EnrichmentParams,
    OperatorSpec,
    affine,
    affine_reflection,
    averaged,
    composite,
    evaluate,
    fixed_point_residual,
    identity,
    krasnoselskij_map,
    reciprocal,
    rotation,
    scaled,
)
from .iteration import (
    IterationConfig,
    Trajectory,
    asymptotic_regularity_check,
    compare_rates,
    fejer_check,
    run,
)
from .analysis import (
    ClassificationReport,
    FixedPointSet,
    check_enriched,
    check_quasi_nonexpansive,
    classify,
    derive_mu,
    enrichment_bound_from_r_s,
    estimate_lipschitz,
    estimate_pseudocontractive_r,
    lambda_admissible_range,
    minimal_enrichment_b,
    optimal_lambda,
    probe_fixed_points,
)

__version__ = "0.1.0"
