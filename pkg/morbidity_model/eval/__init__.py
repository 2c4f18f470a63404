"""Model comparison, predictive checks and derived summaries."""

from .harness import ExactLooResult, exact_loo, held_out_log_density
from .metrics import (
    COMPARE_COLUMNS,
    CompareRow,
    ElpdReport,
    compare,
    comparison_table,
    logsumexp,
    paired_difference,
    psis_loo,
    psis_smooth,
    waic,
)
from .ppc import PPC_COLUMNS, PrevalenceCheck, bayesian_p_values, posterior_predictive_prevalence
from .summaries import (
    QUANTITIES,
    SUMMARY_COLUMNS,
    SummaryTable,
    derived_summaries,
    latent_correlation,
    morbidity_curves,
    parse_profile,
    quantile_summary,
)

__all__ = [
    "COMPARE_COLUMNS",
    "CompareRow",
    "ElpdReport",
    "ExactLooResult",
    "PPC_COLUMNS",
    "PrevalenceCheck",
    "QUANTITIES",
    "SUMMARY_COLUMNS",
    "SummaryTable",
    "bayesian_p_values",
    "compare",
    "comparison_table",
    "derived_summaries",
    "exact_loo",
    "held_out_log_density",
    "latent_correlation",
    "logsumexp",
    "morbidity_curves",
    "paired_difference",
    "parse_profile",
    "posterior_predictive_prevalence",
    "psis_loo",
    "psis_smooth",
    "quantile_summary",
    "waic",
]
