"""Sorting alternatives into ordered categories with outranking flows whose
pairwise degrees are aggregated by a Choquet integral over criteria."""

from .baselines import NormalizedMatrix, direct_choquet_scores, min_max_normalize
from .capacity import (
    CapacityLattice,
    CapacityModel,
    MobiusRepresentation,
    ShapleyInteractionModel,
    choquet_lattice,
    choquet_mobius,
    choquet_shapley_form,
    choquet_two_additive,
    interaction_index,
    lattice_to_mobius,
    mobius_to_lattice,
    mobius_to_shapley_interaction,
    shapley_interaction_to_mobius,
    shapley_values,
    validate_lattice,
    validate_mobius,
    validate_two_additive,
)
from .engine import (
    AssignmentResult,
    FlowTable,
    OutrankingMatrix,
    SortingProblem,
    SortOptions,
    assign,
    choquet_degree_fn,
    choquet_outranking_degree,
    classic_flowsort,
    compute_flows,
    sort_all,
    sort_alternative,
    weighted_degree_fn,
    weighted_outranking_degree,
)
from .errors import (
    DomainError,
    FlowSortError,
    GenerationError,
    InconsistencyError,
    PreconditionError,
    ProfileValidityError,
    StructuralError,
    ValidationReport,
)
from .preference import (
    CriterionSpec,
    DecisionMatrix,
    Direction,
    PreferenceType,
    ReferenceProfileSet,
    pairwise_degrees,
    preference_degree,
    validate_alternatives,
    validate_profiles,
)
from .problem_io import (
    ProblemParseError,
    ProblemValidationError,
    emit_report,
    load_problem,
    load_scenarios,
    problem_to_dict,
    run_scenarios,
    run_sort,
)

__version__ = "0.1.0"
