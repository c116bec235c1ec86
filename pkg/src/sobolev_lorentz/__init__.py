"""Lorentz norms of rearrangements and Sobolev-Lorentz condenser capacities."""
from .errors import CertificationError
from .grid_capacity import (
    AxiomReport,
    CellSet,
    GridCapacityResult,
    GridDomain,
    axiom_suite,
    cross_validate_radial,
    discrete_capacity,
    disk_condenser,
    mct_check,
    random_chain,
    solve_grid_capacity,
)
from .lorentz_norms import (
    LorentzExponents,
    NormResult,
    equivalence_check,
    inclusion_ratio,
    norm_Ppq,
    pairing_bound,
    quasinorm_pq,
)
from .radial_capacity import (
    Condenser,
    CondenserEstimate,
    DimensionConstants,
    RadialProfile,
    SolverOptions,
    embedding_check,
    global_point_capacity,
    gradient_profile,
    point_relative_capacity,
    profile_lower_inequality,
    radial_function_quasinorm,
    sharp_lower_bound,
    sharp_upper_bound,
    solve_condenser,
    sweep,
    unit_ball_volume,
)
from .rearrange import (
    SampledGrid,
    StepFunction,
    distribution,
    maximal_function,
    rearrange_sampled,
    rearranged_value,
    rearrangement,
)

__version__ = "0.1.0"

__all__ = [
    "AxiomReport",
    "CellSet",
    "CertificationError",
    "Condenser",
    "CondenserEstimate",
    "DimensionConstants",
    "GridCapacityResult",
    "GridDomain",
    "LorentzExponents",
    "NormResult",
    "RadialProfile",
    "SampledGrid",
    "SolverOptions",
    "StepFunction",
    "axiom_suite",
    "cross_validate_radial",
    "discrete_capacity",
    "disk_condenser",
    "distribution",
    "embedding_check",
    "equivalence_check",
    "global_point_capacity",
    "gradient_profile",
    "inclusion_ratio",
    "maximal_function",
    "mct_check",
    "norm_Ppq",
    "pairing_bound",
    "point_relative_capacity",
    "profile_lower_inequality",
    "quasinorm_pq",
    "radial_function_quasinorm",
    "random_chain",
    "rearrange_sampled",
    "rearranged_value",
    "rearrangement",
    "sharp_lower_bound",
    "sharp_upper_bound",
    "solve_condenser",
    "solve_grid_capacity",
    "sweep",
    "unit_ball_volume",
]
