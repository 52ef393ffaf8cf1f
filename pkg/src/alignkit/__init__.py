"""Toolkit for modeling, measuring, and negotiating analyst-consumer alignment
over data-analysis design principles."""

from .errors import (
    BoundaryAllocationError,
    DimensionMismatchError,
    IncompleteSubjectError,
    SchemaError,
    StageOrderError,
    SumViolationError,
    UnknownPrincipleError,
    UnknownSessionError,
)
from .estimation import (
    AllocationRecord,
    AlignmentReport,
    FitResult,
    alignment_report,
    emit_figure_data,
    fit,
    ingest,
    write_figure_csv,
)
from .metrics import (
    DEFAULT_EPSILON,
    DEFAULT_P,
    AlignmentKind,
    AlignmentVector,
    AlignmentVerdict,
    PartyParams,
    averaged_p_norm,
    baseline_alignment,
    evaluate_alignment,
    group_baseline_alignment,
    group_overall_alignment,
    overall_alignment,
    party_log_relative,
    strong_check,
    sup_norm,
    weak_check,
)
from .negotiation import (
    NegotiationOutcome,
    NegotiationStrategy,
    StrategyKind,
    improvement_check,
    large_audience_baseline,
    negotiate,
    optimal_adjustment,
    sample_party,
    sampled_group_baseline,
)
from .principles import (
    AllocationVector,
    ConcentrationVector,
    LogRelativeVector,
    PrincipleSet,
    Role,
    Stage,
    beta_moments,
    default_principles,
    dirichlet_mean,
    dirichlet_variance,
    from_log_relative,
    log_relative,
    marginal_beta_params,
    mean_allocation,
    re_reference,
    sample_allocation_matrix,
    sample_allocations,
    smooth_weights,
)
from .sessions import SessionRecord, SessionService, SessionStage
from .simulation import (
    ExperimentConfig,
    ExperimentKind,
    ExperimentResult,
    config_from_dict,
    load_config,
    run_alpha_effect,
    run_experiment,
    run_large_audience,
    run_propositions,
    run_scenario,
)
from .store import SessionStore

__version__ = "0.1.0"
