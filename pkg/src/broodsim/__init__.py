"""Simulation and equilibrium analysis for the sitter / identifier / cheater nest game."""
from .abm import (
    AgentType,
    GenerationReport,
    ModelState,
    PopulationCounts,
    init_model,
    parallel_step,
    reproduce,
    run,
    step,
)
from .analysis import (
    EssConfig,
    EssSearchResult,
    FieldSample,
    MCEstimate,
    abm_vector_field,
    analytic_field,
    convergence_study,
    ess_search,
    estimate_payoffs_mc,
)
from .core import (
    NEG_INF,
    DomainError,
    GameParams,
    NoInteriorEquilibrium,
    PayoffVector,
    SimplexPoint,
    expected_payoffs,
    nash_equilibrium,
    payoff_residual,
)
from .dynamics import (
    FixedPointReport,
    IntegrationError,
    TangentVector,
    Trajectory,
    classify_fixed_point,
    integrate_trajectory,
    replicator_rhs,
    vector_field_grid,
)

__version__ = "0.1.0"
