"""Error-rate calculus and Monte Carlo simulation for platform clinical trials."""

from .numerics import (
    bvn_upper_orthant,
    require_correlation,
    require_probability,
    std_normal_cdf,
    std_normal_quantile,
)
from .rates import (
    CountDistribution,
    DiscountedFdr,
    FamilyTally,
    StatementOutcome,
    StudyOutcome,
    erpf_fraction,
    error_rate_familywise,
    error_rate_per_comparison,
    error_rate_per_family,
    expected_incorrect_approvals,
    false_approval_rate,
    fdr_empirical,
    fdr_from_distribution,
    merge_tallies,
    tally_outcomes,
)
from .variance import (
    CorrelationModel,
    TableCell,
    VarianceReport,
    cov_noncoverage,
    shared_control_correlation,
    stddev_table,
    table_to_csv,
    var_V_star,
)
from .sim import (
    MAX_STUDIES,
    Checkpoint,
    ControlDiagnostics,
    FdrScenarioResult,
    LLNReport,
    PlatformConfig,
    SequenceConfig,
    control_performance_diagnostics,
    equal_arm_config,
    fdr_scenario,
    keyed_stream,
    lln_to_csv,
    one_factor_rejection_histogram,
    simulate_V_distribution,
    simulate_platform,
    simulate_platform_detailed,
    simulate_sequence,
)
from .fcm import (
    BlockReport,
    FamilyConcurrencyMatrix,
    TrialRecord,
    append_record,
    block_report,
    build_fcm,
    combine_fcm,
    load_records,
)
from .kernels import active_backend, select_backend

__version__ = "0.1.0"
