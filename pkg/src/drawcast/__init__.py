"""Draw-resistance prediction from production-line change logs.

The package covers the full chain from raw change-log telemetry to a
targeted sampling plan:

``changelog``
    Parse change-only sensor logs, align them on a uniform time grid,
    clean counter faults, detect work shifts, and build model samples.
``synth``
    Generate synthetic production-line change logs with planted
    linear/nonlinear dependencies and a planted reject cluster.
``features``
    Rank-correlation and random-forest screening of candidate
    indicators into direct and potential feature sets.
``predictors``
    ANFIS, GMDH and feed-forward network regressors plus shared
    metrics and substandard-product flagging.
``metaheuristics``
    Real-coded GA and global-best PSO, and ANFIS premise/consequent
    tuning driven by either one.
``sampling``
    Probability model for catching substandard products under periodic
    versus distribution-targeted sampling.
"""

from drawcast.changelog import (
    AlignedFrame,
    ChangeLogSeries,
    SampleSet,
    ShiftWindow,
    align_series,
    build_samples,
    clean_counter,
    concat_samples,
    detect_shifts,
    forward_fill,
    parse_change_log,
    split_samples,
)
from drawcast.features import (
    FeatureScores,
    FeatureSelection,
    score_features,
    select_features,
    spearman_rho,
)
from drawcast.sampling import (
    SamplingReport,
    SubstandardDistribution,
    coverage,
    delta_p,
    fit_normal,
    monte_carlo_p,
    p_new,
    p_old,
    p_sampled_approx,
    p_sampled_exact,
    period_histogram,
)
from drawcast.synth import GroundTruth, SynthConfig, generate, generate_frame

__version__ = "0.1.0"

__all__ = [
    "AlignedFrame",
    "ChangeLogSeries",
    "FeatureScores",
    "FeatureSelection",
    "GroundTruth",
    "SampleSet",
    "SamplingReport",
    "ShiftWindow",
    "SubstandardDistribution",
    "SynthConfig",
    "align_series",
    "build_samples",
    "clean_counter",
    "concat_samples",
    "coverage",
    "delta_p",
    "detect_shifts",
    "fit_normal",
    "forward_fill",
    "generate",
    "generate_frame",
    "monte_carlo_p",
    "p_new",
    "p_old",
    "p_sampled_approx",
    "p_sampled_exact",
    "parse_change_log",
    "period_histogram",
    "score_features",
    "select_features",
    "spearman_rho",
    "split_samples",
    "__version__",
]
