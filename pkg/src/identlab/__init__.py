"""identlab: a desk-scale laboratory for identifiability, slopes, proximal
sequences, the KL inequality, and subgradient-curve dynamics on R^n."""

from .errors import (
    CatalogError,
    ConfigError,
    DegenerateExampleError,
    DivergenceError,
    DomainError,
    EmptyProbeError,
    IdentLabError,
    OracleError,
    ProjectionError,
)
from .funcatalog import (
    CriticalPoint,
    DesingularizerSpec,
    FunctionModel,
    HornRegion,
    Polytope,
    SmoothMap,
    add_smooth,
    catalog_get,
    catalog_manifest,
    catalog_names,
    compose_amenable,
    localize,
    power_desingularizer,
)
from .manifoldkit import (
    Manifold,
    Param,
    intrinsic_ratio,
    parabola_manifold,
    project,
    riem_grad,
    singleton_manifold,
    tangent_project,
    vertical_line_manifold,
)
from .slopekit import (
    ModulusReport,
    SlopeEstimate,
    limiting_slope,
    maxfn_modulus,
    minnorm,
    modulus_probe,
    slope_estimate,
)
from .proxkit import (
    LengthBoundReport,
    ProxLemmaReport,
    ProxSequence,
    check_length_bound,
    check_prox_lemma,
    global_min_oracle,
    prox,
    prox_sequence,
)
from .flowkit import (
    ComparisonReport,
    Trajectory,
    VelocityReport,
    compare_after_identification,
    identification_time,
    integrate_flow,
    integrate_riemannian,
    velocity_diagnostics,
)
from .analysiskit import (
    GrowthReport,
    KLEquivalenceReport,
    KLReport,
    PLNReport,
    QuadraticGrowthRates,
    TransferReport,
    kl_equivalence_check,
    kl_exponent_estimate,
    kl_probe,
    linear_growth_witness,
    optimality_transfer,
    pln_check,
    pln_ratio,
    quadratic_growth_rates,
    sharp_checks,
)

__version__ = "0.1.0"

__all__ = [
    "IdentLabError", "CatalogError", "ConfigError", "DegenerateExampleError",
    "DivergenceError", "DomainError", "EmptyProbeError", "OracleError", "ProjectionError",
    "Polytope", "DesingularizerSpec", "SmoothMap", "CriticalPoint", "FunctionModel",
    "HornRegion", "catalog_get", "catalog_names", "catalog_manifest",
    "compose_amenable", "localize", "add_smooth", "power_desingularizer",
    "Manifold", "Param", "project", "tangent_project", "riem_grad", "intrinsic_ratio",
    "parabola_manifold", "vertical_line_manifold", "singleton_manifold",
    "SlopeEstimate", "ModulusReport", "minnorm", "limiting_slope",
    "slope_estimate", "modulus_probe", "maxfn_modulus",
    "ProxSequence", "ProxLemmaReport", "LengthBoundReport",
    "global_min_oracle", "prox", "prox_sequence", "check_prox_lemma", "check_length_bound",
    "Trajectory", "VelocityReport", "ComparisonReport",
    "integrate_flow", "integrate_riemannian", "identification_time",
    "velocity_diagnostics", "compare_after_identification",
    "GrowthReport", "TransferReport", "QuadraticGrowthRates",
    "KLReport", "KLEquivalenceReport", "PLNReport",
    "linear_growth_witness", "sharp_checks", "optimality_transfer", "quadratic_growth_rates",
    "kl_probe", "kl_equivalence_check", "kl_exponent_estimate",
    "pln_check", "pln_ratio",
    "__version__",
]
