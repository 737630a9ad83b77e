"""Expected Downside Risk measures, prospect-theory choice and leverage analysis."""

from __future__ import annotations

from .equilibrium import AsAdSpec, InvestorView, aggregate_required_return, as_ad_price_path
from .empirics import (
    EventStudyResult,
    RegressionResult,
    cross_section_regression,
    event_study_volatility,
    ols_fit,
    quantile_ttest_curve,
    student_t_test,
)
from .errors import EDRError
from .frontier import (
    FrontierPoint,
    PortfolioSample,
    RiskSpace,
    efficiency_frontier,
    optimal_risk_averse,
    optimal_risk_seeking,
    sample_portfolios,
)
from .leverage import (
    LeverageSpec,
    PowerFrontierSpec,
    dominance_gap,
    leveraged_expected_return,
    power_frontier_optimum,
)
from .prospect_utility import (
    KTUtilityParams,
    RiskNeutralPoint,
    calibrate_risk_aversion,
    iso_utility_curvature,
    iso_utility_path_curvature,
    iso_utility_slope,
    kt_value,
    risk_neutral_amplitude,
    rnc_slope,
    trace_risk_neutral_curve,
    utility_score,
)
from .returns_core import (
    EmpiricalDistribution,
    Granularity,
    PeriodSpec,
    ReturnSeries,
    aggregate_periods,
    empirical_quantile,
    load_returns_csv,
)
from .risk_measures import (
    RiskReport,
    beta_measures,
    conditional_value_at_risk,
    expected_downside_risk,
    gaussian_edr,
    prospect,
    risk_report,
    value_at_risk,
)

__version__ = "0.1.0"
