"""Localized-complexity excess-risk bounds and model selection for finite classes."""

from riskbound.transform import (
    ARBITRARY,
    CONCAVE,
    STRICTLY_CONCAVE,
    ComplexityCurve,
    EmptyGrid,
    GeometricGrid,
    NonMonotoneCurve,
    NotContractive,
    OffGrid,
    fixed_point,
    flat,
    flat_q,
    geometric_tail_sum,
    sharp,
    sharp_q,
    table_curve,
    tail_sum_constant,
)
from riskbound.function_class import (
    EmptyMinimalSet,
    EvaluationMatrix,
    FunctionClass,
    OracleDistribution,
    OracleUnavailable,
    RangeViolation,
    RiskReport,
    Sample,
    delta_minimal,
    diameter,
    draw_sample,
    empirical_metric2,
    erm,
    evaluate,
    monte_carlo_oracle,
    phi_hat,
    phi_n,
    phi_n_table,
    r_check,
    risk_report,
)
from riskbound.complexity import (
    BadParams,
    BoundCurveParams,
    EigenFailure,
    KernelSpec,
    NotBinary,
    SignDraws,
    bound_curve,
    mendelson_curves,
    rademacher_modulus,
    rademacher_signs,
    rademacher_sup,
    shattering_number,
)
from riskbound.bounds import (
    BoundConstants,
    BoundReport,
    EnvelopeViolated,
    FamilyRadii,
    GeometricDiagnostics,
    GridMismatch,
    bound_report,
    delta_family,
    delta_n,
    empirical_curves,
    geometric_bound,
    oracle_tables,
    u_check_concave,
    u_n,
    v_n,
    working_grid,
)
from riskbound.selection import (
    BadOrdering,
    ConvexLink,
    ConvexityViolated,
    LinkDegenerate,
    LipschitzViolated,
    LossClassMeta,
    ModelFamily,
    NotNested,
    SelectionResult,
    dimension_penalty,
    kernel_penalty,
    loss_class,
    massart_penalty,
    penalty_v1,
    penalty_v2,
    pi_n,
    quadratic_link,
    rademacher_penalty,
    select_comparison,
    select_penalized,
    shattering_penalty,
)
from riskbound.scenarios import (
    METHODS,
    CoverageReport,
    ExperimentPlan,
    OrderingReport,
    Prop2Report,
    RateReport,
    Scenario,
    SelectionReport,
    adaptive_t_schedule,
    cube_scenario,
    finite_dim_regression,
    nested_regression_family,
    run_coverage_experiment,
    run_ordering_experiment,
    run_prop2_experiment,
    run_rate_experiment,
    run_selection_experiment,
    run_trial,
    tsybakov_scenario,
)

__version__ = "0.1.0"
